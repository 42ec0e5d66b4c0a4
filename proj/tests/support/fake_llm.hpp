#pragma once

#include "d2d/llm/gateway.hpp"
#include "d2d/llm/transport.hpp"

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace d2d::testing {

// Transport that answers from a queue of canned replies and records every request.
class ScriptedTransport : public llm::ChatTransport {
public:
    ScriptedTransport() = default;
    explicit ScriptedTransport(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

    void push(std::string reply)
    {
        std::lock_guard lock(mutex_);
        replies_.push_back(std::move(reply));
    }

    llm::ChatResponse send(const llm::ChatRequest& req) override
    {
        std::lock_guard lock(mutex_);
        requests_.push_back(req);
        if (responder_) {
            return responder_(req);
        }
        if (replies_.empty()) {
            throw std::runtime_error("scripted transport ran out of replies");
        }
        llm::ChatResponse resp;
        resp.text = replies_.front();
        replies_.pop_front();
        return resp;
    }

    void set_responder(std::function<llm::ChatResponse(const llm::ChatRequest&)> f) { responder_ = std::move(f); }

    const std::vector<llm::ChatRequest>& requests() const { return requests_; }
    std::size_t remaining() const { return replies_.size(); }

private:
    std::mutex mutex_;
    std::deque<std::string> replies_;
    std::vector<llm::ChatRequest> requests_;
    std::function<llm::ChatResponse(const llm::ChatRequest&)> responder_;
};

// Gateway in live mode over a scripted transport.
inline llm::Gateway scripted_gateway(std::shared_ptr<ScriptedTransport> t)
{
    return llm::Gateway(llm::GatewayOptions{llm::Mode::live, 4, std::nullopt}, std::move(t));
}

inline llm::ChatRequest simple_request(std::string content, std::string tag = "test")
{
    llm::ChatRequest req;
    req.model_id = "test-model";
    req.messages = {{llm::Role::system, "You are a test."}, {llm::Role::user, std::move(content)}};
    req.schema_tag = std::move(tag);
    return req;
}

} // namespace d2d::testing
