#include "d2d/llm/structured.hpp"

namespace d2d::llm {

using nlohmann::json;

namespace {

// Returns the body of the first fenced block, or the text unchanged.
std::string_view strip_fences(std::string_view text)
{
    const auto open = text.find("```");
    if (open == std::string_view::npos) {
        return text;
    }
    auto body_start = text.find('\n', open + 3);
    // "```json {...} ```" on one line: skip the language tag up to the first brace
    const auto brace = text.find('{', open + 3);
    if (body_start == std::string_view::npos || (brace != std::string_view::npos && brace < body_start)) {
        body_start = brace == std::string_view::npos ? open + 3 : brace;
    } else {
        body_start += 1;
    }
    const auto close = text.find("```", body_start);
    if (close == std::string_view::npos) {
        return text.substr(body_start);
    }
    return text.substr(body_start, close - body_start);
}

// End (exclusive) of the balanced object starting at text[start] == '{', or npos.
std::size_t balanced_end(std::string_view text, std::size_t start)
{
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) {
                return i + 1;
            }
            if (depth < 0) {
                return std::string_view::npos;
            }
        }
    }
    return std::string_view::npos;
}

ExtractedJson scan(std::string_view text)
{
    std::string first_error;
    for (auto pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
        const auto end = balanced_end(text, pos);
        if (end == std::string_view::npos) {
            if (first_error.empty()) {
                first_error = "reply contains an unterminated JSON object (output looks truncated)";
            }
            continue;
        }
        try {
            auto value = json::parse(text.substr(pos, end - pos));
            if (value.is_object()) {
                return {std::move(value), ""};
            }
        } catch (const json::parse_error& e) {
            if (first_error.empty()) {
                first_error = std::string("reply contains malformed JSON: ") + e.what();
            }
        }
    }
    return {std::nullopt, first_error.empty() ? "reply contains no JSON object" : first_error};
}

} // namespace

ExtractedJson extract_json(std::string_view text)
{
    const auto inner = strip_fences(text);
    auto found = scan(inner);
    if (!found.value && inner.size() != text.size()) {
        // fence held something else; fall back to the whole reply
        auto whole = scan(text);
        if (whole.value) {
            return whole;
        }
    }
    return found;
}

std::string schema_instructions(const d2d::jsonschema::JsonSchema& schema)
{
    return "Answer with a single JSON object and nothing else. It must satisfy this JSON Schema:\n" +
           schema.document().dump(2);
}

std::string repair_message(const std::vector<std::string>& errors)
{
    std::string msg = "Your previous reply could not be used:\n";
    for (const auto& e : errors) {
        msg += "- " + e + "\n";
    }
    msg += "Reply again with one corrected JSON object only.";
    return msg;
}

ChatRequest with_repair_turn(const StructuredResult& result, const std::vector<std::string>& errors)
{
    auto req = result.request;
    req.messages.push_back({Role::assistant, result.response.text});
    req.messages.push_back({Role::user, repair_message(errors)});
    return req;
}

StructuredResult complete_structured(Gateway& gateway, const ChatRequest& req, const d2d::jsonschema::JsonSchema& schema,
                                     const StructuredOptions& options)
{
    if (options.max_repairs < 0) {
        throw std::invalid_argument("max_repairs must be >= 0");
    }
    std::vector<std::vector<std::string>> history;
    ChatRequest current = req;
    for (int attempt = 0; attempt <= options.max_repairs; ++attempt) {
        auto resp = gateway.complete(current);
        std::vector<std::string> errors;
        auto extracted = extract_json(resp.text);
        if (!extracted.value) {
            errors.push_back(extracted.error);
        } else {
            for (const auto& e : schema.validate(*extracted.value)) {
                errors.push_back(e.to_string());
            }
            if (errors.empty() && options.check) {
                errors = options.check(*extracted.value);
            }
        }
        if (errors.empty()) {
            return {std::move(*extracted.value), attempt, attempt + 1, std::move(resp), std::move(current)};
        }
        history.push_back(errors);
        if (attempt < options.max_repairs) {
            current.messages.push_back({Role::assistant, resp.text});
            current.messages.push_back({Role::user, repair_message(errors)});
        }
    }
    throw StructuredOutputError(req.schema_tag.value_or("structured request"), std::move(history));
}

} // namespace d2d::llm
