#pragma once

#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"

#include "json.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace d2d::llm {

struct ExtractedJson {
    std::optional<nlohmann::json> value;
    std::string error; // set when value is empty
};

// Finds the first JSON object in a model reply. Code fences are stripped
// first; then each '{' is tried in order and the balanced span starting
// there is parsed. Prose before and after the object is ignored.
ExtractedJson extract_json(std::string_view text);

// Extra validation applied after the schema passes; returns error messages.
using SemanticCheck = std::function<std::vector<std::string>(const nlohmann::json&)>;

struct StructuredOptions {
    int max_repairs = 2;
    SemanticCheck check;
};

struct StructuredResult {
    nlohmann::json value;
    int repairs = 0;
    int calls = 0;
    ChatResponse response;
    // The request that produced the accepted response (original plus any repair turns).
    ChatRequest request;
};

StructuredResult complete_structured(Gateway& gateway, const ChatRequest& req, const jsonschema::JsonSchema& schema,
                                     const StructuredOptions& options = {});

// Text appended to prompts telling the model which JSON shape to produce.
std::string schema_instructions(const jsonschema::JsonSchema& schema);

// User turn sent back to the model after an unusable reply.
std::string repair_message(const std::vector<std::string>& errors);

// Extends the accepted exchange with a repair turn, for callers that apply
// their own post-validation after a structured call succeeded.
ChatRequest with_repair_turn(const StructuredResult& result, const std::vector<std::string>& errors);

} // namespace d2d::llm
