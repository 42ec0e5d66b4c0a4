#include "d2d/llm/types.hpp"

#include "d2d/common/hash.hpp"
#include "d2d/common/text.hpp"

#include <cmath>
#include <stdexcept>

namespace d2d::llm {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Role r)
{
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s)
{
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown message role '" + s + "'");
}

void ChatRequest::validate() const
{
    if (messages.empty()) {
        throw std::invalid_argument("chat request has no messages");
    }
    if (messages.front().role == Role::assistant) {
        throw std::invalid_argument("first message must be a system or user message");
    }
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("temperature must be a finite value >= 0");
    }
}

ordered_json to_json(const ChatRequest& req)
{
    ordered_json j;
    j["model_id"] = req.model_id;
    j["messages"] = ordered_json::array();
    for (const auto& m : req.messages) {
        j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    j["temperature"] = req.temperature;
    j["schema_tag"] = req.schema_tag ? ordered_json(*req.schema_tag) : ordered_json(nullptr);
    j["logprobs_requested"] = req.logprobs_requested;
    return j;
}

ChatRequest request_from_json(const json& j)
{
    ChatRequest req;
    req.model_id = j.at("model_id").get<std::string>();
    for (const auto& m : j.at("messages")) {
        req.messages.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    req.temperature = j.value("temperature", 0.2);
    if (j.contains("schema_tag") && !j["schema_tag"].is_null()) {
        req.schema_tag = j["schema_tag"].get<std::string>();
    }
    req.logprobs_requested = j.value("logprobs_requested", false);
    return req;
}

ordered_json to_json(const ChatResponse& resp)
{
    ordered_json j;
    j["text"] = resp.text;
    if (resp.token_scores) {
        j["token_scores"] = ordered_json::array();
        for (const auto& t : *resp.token_scores) {
            ordered_json tj{{"token", t.token}, {"logprob", t.logprob}};
            if (!t.top.empty()) {
                tj["top"] = ordered_json::array();
                for (const auto& [tok, lp] : t.top) {
                    tj["top"].push_back({{"token", tok}, {"logprob", lp}});
                }
            }
            j["token_scores"].push_back(std::move(tj));
        }
    } else {
        j["token_scores"] = nullptr;
    }
    j["usage"] = {{"prompt_tokens", resp.usage.prompt_tokens}, {"completion_tokens", resp.usage.completion_tokens}};
    return j;
}

ChatResponse response_from_json(const json& j)
{
    ChatResponse resp;
    resp.text = j.at("text").get<std::string>();
    if (j.contains("token_scores") && j["token_scores"].is_array()) {
        std::vector<TokenScore> scores;
        for (const auto& tj : j["token_scores"]) {
            TokenScore t{tj.at("token").get<std::string>(), tj.at("logprob").get<double>(), {}};
            if (tj.contains("top")) {
                for (const auto& alt : tj["top"]) {
                    t.top.emplace_back(alt.at("token").get<std::string>(), alt.at("logprob").get<double>());
                }
            }
            scores.push_back(std::move(t));
        }
        resp.token_scores = std::move(scores);
    }
    if (j.contains("usage")) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
    }
    return resp;
}

std::string request_fingerprint(const ChatRequest& req)
{
    ordered_json canon;
    canon["model_id"] = req.model_id;
    canon["messages"] = ordered_json::array();
    for (const auto& m : req.messages) {
        canon["messages"].push_back(ordered_json::array({to_string(m.role), m.content}));
    }
    // fixed formatting keeps the hash independent of float printing quirks
    canon["temperature"] = text::format_fixed(req.temperature, 6);
    canon["schema_tag"] = req.schema_tag ? ordered_json(*req.schema_tag) : ordered_json(nullptr);
    return sha256_hex(canon.dump(-1, ' ', false, json::error_handler_t::strict));
}

std::string summarize(const ChatRequest& req)
{
    std::string s = "model=" + req.model_id + " schema_tag=" + req.schema_tag.value_or("-") +
                    " temperature=" + text::format_fixed(req.temperature, 2) +
                    " messages=" + std::to_string(req.messages.size());
    if (!req.messages.empty()) {
        const auto& last = req.messages.back();
        auto snippet = text::truncate_with_marker(last.content, 80, "...");
        for (auto& c : snippet) {
            if (c == '\n' || c == '\r') {
                c = ' ';
            }
        }
        s += " last " + to_string(last.role) + " message: \"" + snippet + "\"";
    }
    return s;
}

} // namespace d2d::llm
