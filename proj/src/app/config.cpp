#include "d2d/app/config.hpp"

#include "d2d/app/toml.hpp"
#include "d2d/common/error.hpp"
#include "d2d/common/hash.hpp"
#include "d2d/llm/transport.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace d2d::app {

namespace fs = std::filesystem;

std::string to_string(Stage s)
{
    switch (s) {
    case Stage::enrich: return "enrich";
    case Stage::domain: return "domain";
    case Stage::concepts: return "concepts";
    case Stage::generator: return "generator";
    case Stage::judge: return "judge";
    case Stage::reflector: return "reflector";
    case Stage::expert: return "expert";
    case Stage::consensus: return "consensus";
    case Stage::geval: return "geval";
    }
    return "geval";
}

std::optional<Stage> stage_from_string(const std::string& s)
{
    for (auto st : kStages) {
        if (to_string(st) == s) {
            return st;
        }
    }
    return std::nullopt;
}

double default_temperature(Stage s)
{
    switch (s) {
    case Stage::generator:
    case Stage::reflector:
    case Stage::expert: return llm::kGenerativeTemperature;
    case Stage::geval: return 1.0;
    default: return llm::kStructuredTemperature;
    }
}

void RunConfig::validate() const
{
    if (model_id.empty()) {
        throw ConfigError("model_id must not be empty");
    }
    if (judge_model_id && judge_model_id->empty()) {
        throw ConfigError("judge_model_id must not be empty when set");
    }
    if (threshold < 1 || threshold > 4) {
        throw ConfigError("threshold must be between 1 and 4, got " + std::to_string(threshold));
    }
    if (n_max < 1) {
        throw ConfigError("n_max must be at least 1");
    }
    if (k_experts < 1) {
        throw ConfigError("k_experts must be at least 1");
    }
    if (max_charts < 1) {
        throw ConfigError("max_charts must be at least 1");
    }
    if (max_in_flight < 1) {
        throw ConfigError("max_in_flight must be at least 1");
    }
    if (geval_samples < 1) {
        throw ConfigError("geval_samples must be at least 1");
    }
    for (const auto& [stage, t] : temperatures) {
        if (!(t >= 0.0 && t <= 2.0)) {
            throw ConfigError("temperature for " + to_string(stage) + " must be within [0, 2]");
        }
    }
}

double RunConfig::temperature(Stage s) const
{
    auto it = temperatures.find(s);
    return it != temperatures.end() ? it->second : default_temperature(s);
}

llm::StageModel RunConfig::stage_model(Stage s) const
{
    const bool judging = s == Stage::judge || s == Stage::geval;
    return {judging && judge_model_id ? *judge_model_id : model_id, temperature(s), static_cast<int>(max_repairs)};
}

namespace {

using nlohmann::json;

std::string want_string(const json& v, const std::string& key)
{
    if (!v.is_string()) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

long long want_int(const json& v, const std::string& key)
{
    if (!v.is_number_integer()) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return v.get<long long>();
}

std::size_t want_count(const json& v, const std::string& key)
{
    const auto n = want_int(v, key);
    if (n < 0) {
        throw ConfigError("config key '" + key + "' must not be negative");
    }
    return static_cast<std::size_t>(n);
}

double want_number(const json& v, const std::string& key)
{
    if (!v.is_number()) {
        throw ConfigError("config key '" + key + "' must be a number");
    }
    return v.get<double>();
}

fs::path resolve(const fs::path& p, const fs::path& base)
{
    return p.is_absolute() || base.empty() ? p : base / p;
}

llm::Mode parse_mode(const std::string& s)
{
    try {
        return llm::mode_from_string(s);
    } catch (const std::exception&) {
        throw ConfigError("mode must be live, record or replay, got '" + s + "'");
    }
}

} // namespace

void apply_file(RunConfig& c, const nlohmann::json& doc, const fs::path& base_dir)
{
    for (const auto& [key, v] : doc.items()) {
        if (key == "model_id") {
            c.model_id = want_string(v, key);
        } else if (key == "judge_model_id") {
            c.judge_model_id = want_string(v, key);
        } else if (key == "n_max") {
            c.n_max = want_count(v, key);
        } else if (key == "threshold") {
            c.threshold = static_cast<int>(want_int(v, key));
        } else if (key == "k_experts") {
            c.k_experts = want_count(v, key);
        } else if (key == "max_charts") {
            c.max_charts = want_count(v, key);
        } else if (key == "max_repairs") {
            c.max_repairs = want_count(v, key);
        } else if (key == "max_in_flight") {
            c.max_in_flight = want_count(v, key);
        } else if (key == "geval_samples") {
            c.geval_samples = want_count(v, key);
        } else if (key == "mode") {
            c.mode = parse_mode(want_string(v, key));
        } else if (key == "cassette") {
            c.cassette_path = resolve(want_string(v, key), base_dir);
        } else if (key == "base_url") {
            c.base_url = want_string(v, key);
        } else if (key == "seed") {
            c.seed = static_cast<std::uint64_t>(want_count(v, key));
        } else if (key == "output_dir") {
            c.output_dir = resolve(want_string(v, key), base_dir);
        } else if (key == "knowledge") {
            c.knowledge_path = resolve(want_string(v, key), base_dir);
        } else if (key == "temperatures") {
            if (!v.is_object()) {
                throw ConfigError("config key 'temperatures' must be a table");
            }
            for (const auto& [stage, t] : v.items()) {
                auto st = stage_from_string(stage);
                if (!st) {
                    throw ConfigError("unknown stage 'temperatures." + stage + "'");
                }
                c.temperatures[*st] = want_number(t, "temperatures." + stage);
            }
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

void apply_overrides(RunConfig& c, const ConfigOverrides& o)
{
    if (o.model_id) c.model_id = *o.model_id;
    if (o.judge_model_id) c.judge_model_id = *o.judge_model_id;
    for (const auto& [stage, t] : o.temperatures) {
        c.temperatures[stage] = t;
    }
    if (o.n_max) c.n_max = *o.n_max;
    if (o.threshold) c.threshold = *o.threshold;
    if (o.k_experts) c.k_experts = *o.k_experts;
    if (o.max_charts) c.max_charts = *o.max_charts;
    if (o.max_repairs) c.max_repairs = *o.max_repairs;
    if (o.max_in_flight) c.max_in_flight = *o.max_in_flight;
    if (o.geval_samples) c.geval_samples = *o.geval_samples;
    if (o.mode) c.mode = parse_mode(*o.mode);
    if (o.cassette_path) c.cassette_path = *o.cassette_path;
    if (o.base_url) c.base_url = *o.base_url;
    if (o.seed) c.seed = *o.seed;
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.knowledge_path) c.knowledge_path = *o.knowledge_path;
}

RunConfig resolve_config(const std::optional<fs::path>& file, const ConfigOverrides& overrides)
{
    RunConfig c;
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) {
            throw ConfigError("cannot read config file " + file->string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        apply_file(c, parse_toml(ss.str()), file->parent_path());
    }
    apply_overrides(c, overrides);
    c.validate();
    return c;
}

nlohmann::ordered_json to_json(const RunConfig& c)
{
    nlohmann::ordered_json temps = nlohmann::ordered_json::object();
    for (auto s : kStages) {
        temps[to_string(s)] = c.temperature(s);
    }
    nlohmann::ordered_json j;
    j["model_id"] = c.model_id;
    j["judge_model_id"] = c.judge_model_id ? nlohmann::ordered_json(*c.judge_model_id) : nullptr;
    j["temperatures"] = temps;
    j["n_max"] = c.n_max;
    j["threshold"] = c.threshold;
    j["k_experts"] = c.k_experts;
    j["max_charts"] = c.max_charts;
    j["max_repairs"] = c.max_repairs;
    j["max_in_flight"] = c.max_in_flight;
    j["geval_samples"] = c.geval_samples;
    j["mode"] = llm::to_string(c.mode);
    j["cassette"] = c.cassette_path ? nlohmann::ordered_json(c.cassette_path->generic_string()) : nullptr;
    j["base_url"] = c.base_url;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.generic_string();
    j["knowledge"] = c.knowledge_path ? nlohmann::ordered_json(c.knowledge_path->generic_string()) : nullptr;
    return j;
}

RunConfig config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) {
        if (!v.is_null()) {
            doc[k] = v;
        }
    }
    // snapshots list every stage; only differences from the default are overrides
    if (doc.contains("temperatures")) {
        nlohmann::json diffs = nlohmann::json::object();
        for (const auto& [stage, t] : doc["temperatures"].items()) {
            auto st = stage_from_string(stage);
            if (st && t.is_number() && t.get<double>() != default_temperature(*st)) {
                diffs[stage] = t;
            }
        }
        doc["temperatures"] = diffs;
    }
    apply_file(c, doc, {});
    c.validate();
    return c;
}

std::string config_hash(const RunConfig& c)
{
    auto j = to_json(c);
    j.erase("output_dir");
    j.erase("mode");
    j.erase("cassette");
    j.erase("max_in_flight");
    j.erase("base_url");
    j.erase("knowledge");
    return sha256_hex(j.dump()).substr(0, 12);
}

void check_run_preconditions(const RunConfig& c)
{
    c.validate();
    if (c.mode != llm::Mode::replay) {
        const char* key = std::getenv(llm::kApiKeyVariable);
        if (key == nullptr || *key == '\0') {
            throw ConfigError(std::string("mode ") + llm::to_string(c.mode) + " needs the " + llm::kApiKeyVariable +
                              " environment variable");
        }
    }
    if (c.mode != llm::Mode::live && !c.cassette_path) {
        throw ConfigError(std::string("mode ") + llm::to_string(c.mode) + " needs a cassette path");
    }
    if (c.mode == llm::Mode::replay && !fs::exists(*c.cassette_path)) {
        throw ConfigError("cassette " + c.cassette_path->string() + " does not exist");
    }
}

} // namespace d2d::app
