#include "d2d/jsonschema/schema.hpp"

#include "d2d/common/text.hpp"

#include <cmath>
#include <fstream>

namespace d2d::jsonschema {

using nlohmann::json;

struct JsonSchema::Context {
    std::vector<SchemaError>* errors;
    std::size_t limit; // stop collecting after this many errors
    int depth = 0;

    bool full() const { return errors->size() >= limit; }
    void add(const std::string& path, std::string message)
    {
        if (!full()) {
            errors->push_back({path.empty() ? "/" : path, std::move(message)});
        }
    }
};

namespace {

constexpr int kMaxDepth = 256;

std::string type_name(const json& v)
{
    switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "unknown";
    }
}

bool is_integral(const json& v)
{
    if (v.is_number_integer()) {
        return true;
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
}

bool type_matches(const std::string& t, const json& v)
{
    if (t == "null") return v.is_null();
    if (t == "boolean") return v.is_boolean();
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "number") return v.is_number();
    if (t == "integer") return is_integral(v);
    return false;
}

std::string unescape_pointer_token(std::string token)
{
    std::string out;
    for (std::size_t i = 0; i < token.size(); ++i) {
        if (token[i] == '~' && i + 1 < token.size()) {
            out.push_back(token[i + 1] == '1' ? '/' : '~');
            ++i;
        } else {
            out.push_back(token[i]);
        }
    }
    return out;
}

std::string short_dump(const json& v)
{
    auto s = v.dump();
    return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

} // namespace

std::string json_pointer_append(const std::string& base, const std::string& token)
{
    std::string escaped;
    for (char c : token) {
        if (c == '~') {
            escaped += "~0";
        } else if (c == '/') {
            escaped += "~1";
        } else {
            escaped.push_back(c);
        }
    }
    return base + "/" + escaped;
}

JsonSchema::JsonSchema(json schema) : root_(std::make_shared<const json>(std::move(schema)))
{
    if (!root_->is_object() && !root_->is_boolean()) {
        throw SchemaDefinitionError("schema must be an object or a boolean");
    }
}

JsonSchema JsonSchema::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SchemaDefinitionError("cannot open schema " + path.string());
    }
    try {
        return JsonSchema(json::parse(in));
    } catch (const json::parse_error& e) {
        throw SchemaDefinitionError("schema " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::vector<SchemaError> JsonSchema::validate(const json& instance) const
{
    std::vector<SchemaError> errors;
    Context ctx{&errors, 200};
    check(*root_, instance, "", ctx);
    return errors;
}

bool JsonSchema::accepts(const json& instance) const
{
    std::vector<SchemaError> errors;
    Context ctx{&errors, 1};
    check(*root_, instance, "", ctx);
    return errors.empty();
}

const json& JsonSchema::resolve(const std::string& ref) const
{
    if (ref.empty() || ref[0] != '#') {
        throw SchemaDefinitionError("only local $ref is supported: " + ref);
    }
    const json* node = root_.get();
    if (ref.size() > 1) {
        for (const auto& raw : text::split(std::string_view(ref).substr(2), '/')) {
            const auto token = unescape_pointer_token(raw);
            if (node->is_object() && node->contains(token)) {
                node = &(*node)[token];
            } else if (node->is_array()) {
                node = &(*node).at(std::stoul(token));
            } else {
                throw SchemaDefinitionError("unresolvable $ref " + ref);
            }
        }
    }
    return *node;
}

const std::regex& JsonSchema::regex_for(const std::string& pattern) const
{
    std::lock_guard lock(cache_mutex_);
    auto it = regex_cache_.find(pattern);
    if (it == regex_cache_.end()) {
        try {
            it = regex_cache_.emplace(pattern, std::make_shared<const std::regex>(pattern, std::regex::ECMAScript)).first;
        } catch (const std::regex_error& e) {
            throw SchemaDefinitionError("invalid pattern " + pattern + ": " + e.what());
        }
    }
    return *it->second;
}

void JsonSchema::check(const json& schema, const json& value, const std::string& path, Context& ctx) const
{
    if (ctx.full()) {
        return;
    }
    if (schema.is_boolean()) {
        if (!schema.get<bool>()) {
            ctx.add(path, "no value is allowed here");
        }
        return;
    }
    if (!schema.is_object()) {
        return;
    }
    if (++ctx.depth > kMaxDepth) {
        --ctx.depth;
        ctx.add(path, "schema nesting too deep");
        return;
    }
    struct DepthGuard {
        Context& c;
        ~DepthGuard() { --c.depth; }
    } guard{ctx};

    if (auto it = schema.find("$ref"); it != schema.end()) {
        // draft-07: $ref overrides sibling keywords
        check(resolve(it->get<std::string>()), value, path, ctx);
        return;
    }

    if (auto it = schema.find("type"); it != schema.end()) {
        bool ok = false;
        std::string expected;
        if (it->is_string()) {
            expected = it->get<std::string>();
            ok = type_matches(expected, value);
        } else if (it->is_array()) {
            std::vector<std::string> names;
            for (const auto& t : *it) {
                names.push_back(t.get<std::string>());
                ok = ok || type_matches(names.back(), value);
            }
            expected = text::join(names, " or ");
        }
        if (!ok) {
            ctx.add(path, "expected " + expected + ", got " + type_name(value));
            return;
        }
    }

    if (auto it = schema.find("enum"); it != schema.end()) {
        bool found = false;
        for (const auto& option : *it) {
            found = found || option == value;
        }
        if (!found) {
            ctx.add(path, "value " + short_dump(value) + " is not one of " + short_dump(*it));
        }
    }
    if (auto it = schema.find("const"); it != schema.end() && *it != value) {
        ctx.add(path, "value must equal " + short_dump(*it));
    }

    if (value.is_number()) {
        const double d = value.get<double>();
        if (auto it = schema.find("minimum"); it != schema.end() && d < it->get<double>()) {
            ctx.add(path, text::format_number(d) + " is below the minimum " + short_dump(*it));
        }
        if (auto it = schema.find("maximum"); it != schema.end() && d > it->get<double>()) {
            ctx.add(path, text::format_number(d) + " is above the maximum " + short_dump(*it));
        }
        if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && it->is_number() && d <= it->get<double>()) {
            ctx.add(path, text::format_number(d) + " must be greater than " + short_dump(*it));
        }
        if (auto it = schema.find("exclusiveMaximum"); it != schema.end() && it->is_number() && d >= it->get<double>()) {
            ctx.add(path, text::format_number(d) + " must be less than " + short_dump(*it));
        }
        if (auto it = schema.find("multipleOf"); it != schema.end()) {
            const double q = d / it->get<double>();
            if (std::abs(q - std::round(q)) > 1e-9) {
                ctx.add(path, text::format_number(d) + " is not a multiple of " + short_dump(*it));
            }
        }
    }

    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        const auto len = text::utf8_length(s);
        if (auto it = schema.find("minLength"); it != schema.end() && len < it->get<std::size_t>()) {
            ctx.add(path, "string shorter than " + it->dump() + " characters");
        }
        if (auto it = schema.find("maxLength"); it != schema.end() && len > it->get<std::size_t>()) {
            ctx.add(path, "string longer than " + it->dump() + " characters");
        }
        if (auto it = schema.find("pattern"); it != schema.end()) {
            if (!std::regex_search(s, regex_for(it->get<std::string>()))) {
                ctx.add(path, "string does not match pattern " + it->get<std::string>());
            }
        }
    }

    if (value.is_array()) {
        if (auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>()) {
            ctx.add(path, "array has " + std::to_string(value.size()) + " items, fewer than " + it->dump());
        }
        if (auto it = schema.find("maxItems"); it != schema.end() && value.size() > it->get<std::size_t>()) {
            ctx.add(path, "array has " + std::to_string(value.size()) + " items, more than " + it->dump());
        }
        if (auto it = schema.find("uniqueItems"); it != schema.end() && it->is_boolean() && it->get<bool>()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                for (std::size_t j = i + 1; j < value.size(); ++j) {
                    if (value[i] == value[j]) {
                        ctx.add(path, "items " + std::to_string(i) + " and " + std::to_string(j) + " are equal");
                    }
                }
            }
        }
        if (auto it = schema.find("items"); it != schema.end()) {
            if (it->is_array()) {
                for (std::size_t i = 0; i < value.size() && i < it->size(); ++i) {
                    check((*it)[i], value[i], json_pointer_append(path, std::to_string(i)), ctx);
                }
                if (auto extra = schema.find("additionalItems"); extra != schema.end()) {
                    for (std::size_t i = it->size(); i < value.size(); ++i) {
                        check(*extra, value[i], json_pointer_append(path, std::to_string(i)), ctx);
                    }
                }
            } else {
                for (std::size_t i = 0; i < value.size() && !ctx.full(); ++i) {
                    check(*it, value[i], json_pointer_append(path, std::to_string(i)), ctx);
                }
            }
        }
    }

    if (value.is_object()) {
        if (auto it = schema.find("required"); it != schema.end()) {
            for (const auto& name : *it) {
                if (!value.contains(name.get<std::string>())) {
                    ctx.add(json_pointer_append(path, name.get<std::string>()), "required property is missing");
                }
            }
        }
        if (auto it = schema.find("minProperties"); it != schema.end() && value.size() < it->get<std::size_t>()) {
            ctx.add(path, "object has fewer than " + it->dump() + " properties");
        }
        if (auto it = schema.find("maxProperties"); it != schema.end() && value.size() > it->get<std::size_t>()) {
            ctx.add(path, "object has more than " + it->dump() + " properties");
        }
        const auto props = schema.find("properties");
        const auto patterns = schema.find("patternProperties");
        const auto additional = schema.find("additionalProperties");
        for (const auto& [key, member] : value.items()) {
            const auto member_path = json_pointer_append(path, key);
            bool matched = false;
            if (props != schema.end() && props->contains(key)) {
                matched = true;
                check((*props)[key], member, member_path, ctx);
            }
            if (patterns != schema.end()) {
                for (const auto& [pattern, sub] : patterns->items()) {
                    if (std::regex_search(key, regex_for(pattern))) {
                        matched = true;
                        check(sub, member, member_path, ctx);
                    }
                }
            }
            if (!matched && additional != schema.end()) {
                if (additional->is_boolean()) {
                    if (!additional->get<bool>()) {
                        ctx.add(member_path, "unknown property '" + key + "' is not allowed");
                    }
                } else {
                    check(*additional, member, member_path, ctx);
                }
            }
        }
    }

    if (auto it = schema.find("allOf"); it != schema.end()) {
        for (const auto& sub : *it) {
            check(sub, value, path, ctx);
        }
    }

    auto branch_errors = [&](const json& sub, std::size_t limit) {
        std::vector<SchemaError> local;
        Context probe{&local, limit, ctx.depth};
        check(sub, value, path, probe);
        return local;
    };

    if (auto it = schema.find("anyOf"); it != schema.end()) {
        bool any = false;
        for (const auto& sub : *it) {
            if (branch_errors(sub, 1).empty()) {
                any = true;
                break;
            }
        }
        if (!any) {
            // report the closest alternative
            std::vector<SchemaError> best;
            bool first = true;
            for (const auto& sub : *it) {
                auto errs = branch_errors(sub, 20);
                if (first || errs.size() < best.size()) {
                    best = std::move(errs);
                    first = false;
                }
            }
            ctx.add(path, "value matches none of the allowed alternatives");
            for (auto& e : best) {
                ctx.add(e.path, e.message);
            }
        }
    }

    if (auto it = schema.find("oneOf"); it != schema.end()) {
        std::size_t matches = 0;
        for (const auto& sub : *it) {
            matches += branch_errors(sub, 1).empty() ? 1 : 0;
        }
        if (matches != 1) {
            ctx.add(path, "value must match exactly one alternative, matched " + std::to_string(matches));
        }
    }

    if (auto it = schema.find("not"); it != schema.end()) {
        if (branch_errors(*it, 1).empty()) {
            ctx.add(path, "value matches a forbidden schema");
        }
    }
}

} // namespace d2d::jsonschema
