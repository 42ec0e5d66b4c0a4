#pragma once

#include "d2d/llm/errors.hpp"
#include "d2d/llm/transport.hpp"
#include "d2d/llm/types.hpp"

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace d2d::llm {

enum class Mode { live, record, replay };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct CassetteEntry {
    ChatRequest request;
    ChatResponse response;
};

class Cassette {
public:
    Cassette() = default;

    // A missing file yields an empty cassette; malformed content throws GatewayError.
    static Cassette load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::string dump() const;

    const CassetteEntry* find(const std::string& fingerprint) const;
    void put(const ChatRequest& req, const ChatResponse& resp);
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, CassetteEntry>& entries() const { return entries_; }

    // Fingerprint and summary of the recorded request most similar to req.
    std::optional<std::pair<std::string, std::string>> nearest(const ChatRequest& req) const;

private:
    std::map<std::string, CassetteEntry> entries_;
};

struct GatewayOptions {
    Mode mode = Mode::replay;
    std::size_t max_in_flight = 4;
    // Record mode rewrites this file after each new entry.
    std::optional<std::filesystem::path> cassette_path;
};

class Gateway {
public:
    // transport may be null in replay mode.
    Gateway(GatewayOptions options, std::shared_ptr<ChatTransport> transport, Cassette cassette = {});

    ChatResponse complete(const ChatRequest& req);

    Mode mode() const { return options_.mode; }
    std::size_t calls() const { return calls_.load(); }
    std::size_t network_calls() const { return network_calls_.load(); }
    std::size_t max_in_flight() const { return options_.max_in_flight; }
    std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

    Cassette cassette() const;

private:
    ChatResponse call_transport(const ChatRequest& req);

    GatewayOptions options_;
    std::shared_ptr<ChatTransport> transport_;

    mutable std::mutex cassette_mutex_;
    Cassette cassette_;

    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    std::size_t in_flight_ = 0;

    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> network_calls_{0};
    std::atomic<std::size_t> peak_in_flight_{0};
};

} // namespace d2d::llm
