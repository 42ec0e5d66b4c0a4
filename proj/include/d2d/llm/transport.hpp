#pragma once

#include "d2d/llm/types.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace d2d::llm {

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatResponse send(const ChatRequest& req) = 0;
};

struct HttpReply {
    int status = 0; // 0 when the request never produced an HTTP response
    std::string body;
    std::string error;
};

class HttpPoster {
public:
    virtual ~HttpPoster() = default;
    virtual HttpReply post(const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& headers) = 0;
};

// HTTPS (or plain HTTP) client backed by cpp-httplib.
class HttplibPoster : public HttpPoster {
public:
    explicit HttplibPoster(std::string base_url, std::chrono::seconds timeout = std::chrono::seconds(120));
    HttpReply post(const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers) override;

private:
    std::string base_url_;
    std::chrono::seconds timeout_;
};

struct RetryPolicy {
    // Delay before each retry; the size is the number of retries.
    std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(2),
                                                   std::chrono::seconds(4)};
    std::function<void(std::chrono::milliseconds)> sleep;
};

inline constexpr const char* kApiKeyVariable = "D2D_API_KEY";
inline constexpr const char* kChatCompletionsPath = "/v1/chat/completions";

// OpenAI-compatible chat-completions transport.
class OpenAiTransport : public ChatTransport {
public:
    OpenAiTransport(std::shared_ptr<HttpPoster> http, std::string api_key, RetryPolicy retry = {});

    ChatResponse send(const ChatRequest& req) override;

    std::size_t attempts() const { return attempts_; }

    static nlohmann::json request_body(const ChatRequest& req);
    static ChatResponse parse_reply(const std::string& body);

private:
    std::shared_ptr<HttpPoster> http_;
    std::string api_key_;
    RetryPolicy retry_;
    std::size_t attempts_ = 0;
};

// Reads D2D_API_KEY; throws ConfigError when it is unset or empty.
std::string api_key_from_environment();

} // namespace d2d::llm
