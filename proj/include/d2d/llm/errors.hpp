#pragma once

#include "d2d/common/error.hpp"

#include <string>
#include <vector>

namespace d2d::llm {

class GatewayError : public Error {
public:
    using Error::Error;
};

class CassetteMiss : public GatewayError {
public:
    CassetteMiss(std::string fingerprint, std::string nearest_summary)
        : GatewayError("no cassette entry for request " + fingerprint +
                       (nearest_summary.empty() ? std::string(" (cassette is empty)")
                                                : "; nearest recorded request: " + nearest_summary)),
          fingerprint_(std::move(fingerprint)), nearest_(std::move(nearest_summary))
    {
    }

    const std::string& fingerprint() const { return fingerprint_; }
    const std::string& nearest() const { return nearest_; }

private:
    std::string fingerprint_;
    std::string nearest_;
};

// Raised once the repair budget of a structured request is spent. attempts()
// holds one error list per response received, in order.
class StructuredOutputError : public Error {
public:
    StructuredOutputError(std::string context, std::vector<std::vector<std::string>> attempts)
        : Error(render(context, attempts)), attempts_(std::move(attempts))
    {
    }

    const std::vector<std::vector<std::string>>& attempts() const { return attempts_; }

private:
    static std::string render(const std::string& context, const std::vector<std::vector<std::string>>& attempts)
    {
        std::string msg = context + ": no valid structured output after " + std::to_string(attempts.size()) + " responses";
        if (!attempts.empty() && !attempts.back().empty()) {
            msg += " (last error: " + attempts.back().front() + ")";
        }
        return msg;
    }

    std::vector<std::vector<std::string>> attempts_;
};

} // namespace d2d::llm
