#include "d2d/llm/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace d2d::llm {

using nlohmann::json;

std::string to_string(Mode m)
{
    switch (m) {
    case Mode::live: return "live";
    case Mode::record: return "record";
    case Mode::replay: return "replay";
    }
    return "replay";
}

Mode mode_from_string(const std::string& s)
{
    if (s == "live") return Mode::live;
    if (s == "record") return Mode::record;
    if (s == "replay") return Mode::replay;
    throw std::invalid_argument("unknown transport mode '" + s + "' (expected live, record or replay)");
}

Cassette Cassette::load(const std::filesystem::path& path)
{
    Cassette c;
    std::ifstream in(path);
    if (!in) {
        return c;
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw GatewayError("cassette " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw GatewayError("cassette " + path.string() + " must be a JSON object");
    }
    for (const auto& [fp, entry] : j.items()) {
        try {
            c.entries_[fp] = {request_from_json(entry.at("request")), response_from_json(entry.at("response"))};
        } catch (const std::exception& e) {
            throw GatewayError("cassette entry " + fp + " is malformed: " + e.what());
        }
    }
    return c;
}

std::string Cassette::dump() const
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [fp, entry] : entries_) {
        j[fp] = {{"request", to_json(entry.request)}, {"response", to_json(entry.response)}};
    }
    return j.dump(2) + "\n";
}

void Cassette::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw GatewayError("cannot write cassette " + path.string());
        }
        out << dump();
    }
    std::filesystem::rename(tmp, path);
}

const CassetteEntry* Cassette::find(const std::string& fingerprint) const
{
    auto it = entries_.find(fingerprint);
    return it == entries_.end() ? nullptr : &it->second;
}

void Cassette::put(const ChatRequest& req, const ChatResponse& resp)
{
    entries_[request_fingerprint(req)] = {req, resp};
}

namespace {

std::string flatten(const ChatRequest& req)
{
    std::string s;
    for (const auto& m : req.messages) {
        s += to_string(m.role);
        s += '\n';
        s += m.content;
        s += '\n';
    }
    return s;
}

std::size_t common_prefix(const std::string& a, const std::string& b)
{
    const auto mismatch = std::mismatch(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(a.size(), b.size())), b.begin());
    return static_cast<std::size_t>(mismatch.first - a.begin());
}

} // namespace

std::optional<std::pair<std::string, std::string>> Cassette::nearest(const ChatRequest& req) const
{
    const auto target = flatten(req);
    std::optional<std::pair<std::string, std::string>> best;
    std::pair<int, std::size_t> best_score{-1, 0};
    for (const auto& [fp, entry] : entries_) {
        const std::pair<int, std::size_t> score{entry.request.schema_tag == req.schema_tag ? 1 : 0,
                                                common_prefix(target, flatten(entry.request))};
        if (score > best_score) {
            best_score = score;
            const auto at = best_score.second;
            best = std::make_pair(fp, summarize(entry.request) + " (shares the first " + std::to_string(at) +
                                          " characters of the message text)");
        }
    }
    return best;
}

Gateway::Gateway(GatewayOptions options, std::shared_ptr<ChatTransport> transport, Cassette cassette)
    : options_(std::move(options)), transport_(std::move(transport)), cassette_(std::move(cassette))
{
    if (options_.max_in_flight == 0) {
        throw std::invalid_argument("max_in_flight must be at least 1");
    }
    if (options_.mode != Mode::replay && !transport_) {
        throw std::invalid_argument(to_string(options_.mode) + " mode needs a transport");
    }
}

Cassette Gateway::cassette() const
{
    std::lock_guard lock(cassette_mutex_);
    return cassette_;
}

ChatResponse Gateway::call_transport(const ChatRequest& req)
{
    {
        std::unique_lock lock(slot_mutex_);
        slot_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
        auto peak = peak_in_flight_.load();
        while (in_flight_ > peak && !peak_in_flight_.compare_exchange_weak(peak, in_flight_)) {
        }
    }
    struct Release {
        Gateway& g;
        ~Release()
        {
            {
                std::lock_guard lock(g.slot_mutex_);
                --g.in_flight_;
            }
            g.slot_cv_.notify_one();
        }
    } release{*this};
    ++network_calls_;
    auto resp = transport_->send(req);
    if (resp.text.empty()) {
        throw GatewayError("provider returned an empty completion");
    }
    return resp;
}

ChatResponse Gateway::complete(const ChatRequest& req)
{
    req.validate();
    ++calls_;
    const auto fp = request_fingerprint(req);
    if (options_.mode == Mode::replay) {
        std::lock_guard lock(cassette_mutex_);
        if (const auto* hit = cassette_.find(fp)) {
            return hit->response;
        }
        const auto near = cassette_.nearest(req);
        throw CassetteMiss(fp, near ? near->first + " " + near->second : std::string());
    }
    auto resp = call_transport(req);
    if (options_.mode == Mode::record) {
        std::lock_guard lock(cassette_mutex_);
        cassette_.put(req, resp);
        if (options_.cassette_path) {
            cassette_.save(*options_.cassette_path);
        }
    }
    return resp;
}

} // namespace d2d::llm
