#pragma once

#include "json.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace d2d::llm {

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct Message {
    Role role;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.2;
    std::optional<std::string> schema_tag;
    bool logprobs_requested = false;

    // Throws std::invalid_argument when the request is malformed.
    void validate() const;
};

struct TokenScore {
    std::string token;
    double logprob = 0.0;
    // Most likely alternatives at this position, when the provider returns them.
    std::vector<std::pair<std::string, double>> top;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::optional<std::vector<TokenScore>> token_scores;
    Usage usage;
};

nlohmann::ordered_json to_json(const ChatRequest& req);
ChatRequest request_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ChatResponse& resp);
ChatResponse response_from_json(const nlohmann::json& j);

// Hex SHA-256 over model id, ordered messages, temperature (six decimals) and
// schema tag. logprobs_requested does not participate.
std::string request_fingerprint(const ChatRequest& req);

// One-line description used in diagnostics.
std::string summarize(const ChatRequest& req);

} // namespace d2d::llm
