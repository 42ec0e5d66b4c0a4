#include "d2d/jsonschema/schema.hpp"

#include "test_util.hpp"

#include <doctest.h>

using d2d::jsonschema::JsonSchema;
using nlohmann::json;

namespace {

bool has_error_at(const std::vector<d2d::jsonschema::SchemaError>& errors, const std::string& path)
{
    for (const auto& e : errors) {
        if (e.path == path) {
            return true;
        }
    }
    return false;
}

const JsonSchema& vega_lite()
{
    static const JsonSchema schema =
        JsonSchema::from_file(d2d::testing::source_dir() / "schemas" / "vega-lite-v5.21.0.schema.json");
    return schema;
}

} // namespace

TEST_CASE("type keyword distinguishes integer from number")
{
    JsonSchema s(json{{"type", "integer"}});
    CHECK(s.accepts(3));
    CHECK(s.accepts(3.0));
    CHECK_FALSE(s.accepts(3.5));
    CHECK_FALSE(s.accepts("3"));
    JsonSchema multi(json{{"type", json::array({"string", "null"})}});
    CHECK(multi.accepts(nullptr));
    CHECK(multi.accepts("x"));
    CHECK_FALSE(multi.accepts(1));
}

TEST_CASE("object keywords report pointer paths")
{
    JsonSchema s(json::parse(R"({
        "type": "object",
        "required": ["domain", "definition"],
        "additionalProperties": false,
        "properties": {
            "domain": {"type": "string", "minLength": 1},
            "definition": {"type": "string", "pattern": "^[^.!?]+[.!?]$"},
            "tags": {"type": "array", "items": {"type": "string"}, "maxItems": 2}
        }
    })"));
    CHECK(s.validate(json{{"domain", "x"}, {"definition", "One sentence."}}).empty());

    auto errs = s.validate(json{{"domain", ""}});
    CHECK(has_error_at(errs, "/definition"));
    CHECK(has_error_at(errs, "/domain"));

    errs = s.validate(json{{"domain", "x"}, {"definition", "One. Two."}});
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].path == "/definition");

    errs = s.validate(json{{"domain", "x"}, {"definition", "a."}, {"extra", 1}});
    CHECK(has_error_at(errs, "/extra"));

    errs = s.validate(json{{"domain", "x"}, {"definition", "a."}, {"tags", {"a", 2, "c"}}});
    CHECK(has_error_at(errs, "/tags"));
    CHECK(has_error_at(errs, "/tags/1"));
}

TEST_CASE("numeric bounds, enum and const")
{
    JsonSchema s(json::parse(R"({"type":"integer","minimum":1,"maximum":4})"));
    CHECK(s.accepts(1));
    CHECK(s.accepts(4));
    CHECK_FALSE(s.accepts(0));
    CHECK_FALSE(s.accepts(5));
    JsonSchema e(json::parse(R"({"enum":["bar","pie"]})"));
    CHECK(e.accepts("bar"));
    CHECK_FALSE(e.accepts("line"));
    JsonSchema c(json::parse(R"({"const":"v"})"));
    CHECK(c.accepts("v"));
    CHECK_FALSE(c.accepts("w"));
    JsonSchema ex(json::parse(R"({"exclusiveMinimum":0,"multipleOf":0.5})"));
    CHECK(ex.accepts(1.5));
    CHECK_FALSE(ex.accepts(0));
    CHECK_FALSE(ex.accepts(0.7));
}

TEST_CASE("combinators and local references")
{
    JsonSchema s(json::parse(R"({
        "definitions": {"pos": {"type": "number", "minimum": 0}},
        "anyOf": [{"$ref": "#/definitions/pos"}, {"type": "string"}]
    })"));
    CHECK(s.accepts(2));
    CHECK(s.accepts("x"));
    CHECK_FALSE(s.accepts(-1));
    CHECK_FALSE(s.validate(-1).empty());

    JsonSchema one(json::parse(R"({"oneOf": [{"type": "integer"}, {"type": "number"}]})"));
    CHECK(one.accepts(1.5));
    CHECK_FALSE(one.accepts(1)); // matches both

    JsonSchema neg(json::parse(R"({"not": {"type": "null"}})"));
    CHECK(neg.accepts(0));
    CHECK_FALSE(neg.accepts(nullptr));

    JsonSchema all(json::parse(R"({"allOf": [{"minLength": 2}, {"maxLength": 3}]})"));
    CHECK(all.accepts("ab"));
    CHECK_FALSE(all.accepts("abcd"));
}

TEST_CASE("string length counts code points")
{
    JsonSchema s(json::parse(R"({"maxLength": 3})"));
    CHECK(s.accepts("\xC3\xA9\xC3\xA9\xC3\xA9")); // three e-acute
    CHECK_FALSE(s.accepts("abcd"));
}

TEST_CASE("boolean schemas and bad definitions")
{
    CHECK(JsonSchema(json(true)).accepts(42));
    CHECK_FALSE(JsonSchema(json(false)).accepts(42));
    CHECK_THROWS_AS(JsonSchema(json(3)), d2d::jsonschema::SchemaDefinitionError);
    JsonSchema dangling(json::parse(R"({"$ref": "#/definitions/missing"})"));
    CHECK_THROWS_AS(dangling.validate(1), d2d::jsonschema::SchemaDefinitionError);
}

TEST_CASE("pinned chart grammar schema accepts a minimal document")
{
    const auto doc = json::parse(R"({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": {"values": [{"a": "x", "b": 1}, {"a": "y", "b": 2}]},
        "mark": "bar",
        "encoding": {
            "x": {"field": "a", "type": "nominal"},
            "y": {"field": "b", "type": "quantitative"}
        }
    })");
    CHECK(vega_lite().validate(doc).empty());
}

TEST_CASE("pinned chart grammar schema rejects unknown top-level keys and bad marks")
{
    auto doc = json::parse(R"({
        "data": {"values": [{"a": 1}]},
        "mark": "bar",
        "encoding": {"x": {"field": "a", "type": "quantitative"}}
    })");
    doc["bogus"] = true;
    CHECK_FALSE(vega_lite().validate(doc).empty());

    doc.erase("bogus");
    doc["mark"] = "not-a-mark";
    CHECK_FALSE(vega_lite().validate(doc).empty());
}
