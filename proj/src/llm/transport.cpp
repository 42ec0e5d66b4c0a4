#include "d2d/llm/transport.hpp"

#include "d2d/common/error.hpp"
#include "d2d/llm/errors.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <thread>

namespace d2d::llm {

using nlohmann::json;

HttplibPoster::HttplibPoster(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout)
{
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
}

HttpReply HttplibPoster::post(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers)
{
    // base URLs may carry a path prefix, e.g. https://host/api
    std::string origin = base_url_;
    std::string prefix;
    const auto scheme_end = origin.find("://");
    const auto path_start = origin.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        prefix = origin.substr(path_start);
        origin.resize(path_start);
    }
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) {
        h.emplace(k, v);
    }
    auto res = client.Post(prefix + path, h, body, "application/json");
    if (!res) {
        return {0, "", httplib::to_string(res.error())};
    }
    return {res->status, res->body, ""};
}

OpenAiTransport::OpenAiTransport(std::shared_ptr<HttpPoster> http, std::string api_key, RetryPolicy retry)
    : http_(std::move(http)), api_key_(std::move(api_key)), retry_(std::move(retry))
{
    if (!retry_.sleep) {
        retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

json OpenAiTransport::request_body(const ChatRequest& req)
{
    json body;
    body["model"] = req.model_id;
    body["temperature"] = req.temperature;
    body["messages"] = json::array();
    for (const auto& m : req.messages) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    if (req.logprobs_requested) {
        body["logprobs"] = true;
        body["top_logprobs"] = 5;
    }
    return body;
}

ChatResponse OpenAiTransport::parse_reply(const std::string& body)
{
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw GatewayError(std::string("provider reply is not JSON: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw GatewayError("provider reply has no choices");
    }
    const auto& choice = j["choices"][0];
    ChatResponse resp;
    const auto& content = choice.contains("message") ? choice["message"].value("content", json()) : json();
    if (!content.is_string() || content.get<std::string>().empty()) {
        throw GatewayError("provider reply has empty message content");
    }
    resp.text = content.get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
        std::vector<TokenScore> scores;
        for (const auto& t : choice["logprobs"]["content"]) {
            TokenScore ts{t.value("token", std::string()), t.value("logprob", 0.0), {}};
            if (t.contains("top_logprobs") && t["top_logprobs"].is_array()) {
                for (const auto& alt : t["top_logprobs"]) {
                    ts.top.emplace_back(alt.value("token", std::string()), alt.value("logprob", 0.0));
                }
            }
            scores.push_back(std::move(ts));
        }
        resp.token_scores = std::move(scores);
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
    }
    return resp;
}

ChatResponse OpenAiTransport::send(const ChatRequest& req)
{
    const auto body = request_body(req).dump();
    const std::map<std::string, std::string> headers{{"Authorization", "Bearer " + api_key_}};
    std::string last_problem;
    for (std::size_t attempt = 0; attempt <= retry_.backoff.size(); ++attempt) {
        if (attempt > 0) {
            retry_.sleep(retry_.backoff[attempt - 1]);
        }
        ++attempts_;
        const auto reply = http_->post(kChatCompletionsPath, body, headers);
        if (reply.status == 0) {
            last_problem = "network error: " + reply.error;
            continue;
        }
        if (reply.status >= 400) {
            last_problem = "HTTP " + std::to_string(reply.status);
            continue;
        }
        return parse_reply(reply.body);
    }
    throw GatewayError("chat completion failed after " + std::to_string(retry_.backoff.size()) +
                       " retries: " + last_problem);
}

std::string api_key_from_environment()
{
    const char* key = std::getenv(kApiKeyVariable);
    if (key == nullptr || *key == '\0') {
        throw ConfigError(std::string("live and record modes need the ") + kApiKeyVariable +
                          " environment variable");
    }
    return key;
}

} // namespace d2d::llm
