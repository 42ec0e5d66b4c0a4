#pragma once

#include "d2d/common/error.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

namespace d2d::jsonschema {

struct SchemaError {
    std::string path; // JSON pointer into the instance, "/" for the root
    std::string message;

    std::string to_string() const { return path + ": " + message; }
};

class SchemaDefinitionError : public Error {
public:
    using Error::Error;
};

// Validator for the draft-07 keywords this project relies on: type, enum,
// const, properties, required, additionalProperties, patternProperties,
// min/maxProperties, items, min/maxItems, uniqueItems, minimum, maximum,
// exclusiveMinimum, exclusiveMaximum, multipleOf, min/maxLength, pattern,
// anyOf, oneOf, allOf, not and local $ref. Unknown keywords are ignored.
class JsonSchema {
public:
    explicit JsonSchema(nlohmann::json schema);

    static JsonSchema from_file(const std::filesystem::path& path);

    std::vector<SchemaError> validate(const nlohmann::json& instance) const;
    bool accepts(const nlohmann::json& instance) const;

    const nlohmann::json& document() const { return *root_; }

private:
    struct Context;

    void check(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path, Context& ctx) const;
    const nlohmann::json& resolve(const std::string& ref) const;
    const std::regex& regex_for(const std::string& pattern) const;

    std::shared_ptr<const nlohmann::json> root_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::string, std::shared_ptr<const std::regex>> regex_cache_;
};

std::string json_pointer_append(const std::string& base, const std::string& token);

} // namespace d2d::jsonschema
