#pragma once

#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace d2d::app {

enum class Stage { enrich, domain, concepts, generator, judge, reflector, expert, consensus, geval };
inline constexpr std::array<Stage, 9> kStages{Stage::enrich,    Stage::domain, Stage::concepts,
                                              Stage::generator, Stage::judge,  Stage::reflector,
                                              Stage::expert,    Stage::consensus, Stage::geval};

std::string to_string(Stage s);
std::optional<Stage> stage_from_string(const std::string& s);
double default_temperature(Stage s);

struct RunConfig {
    std::string model_id = llm::kDefaultModel;
    std::optional<std::string> judge_model_id;
    std::map<Stage, double> temperatures; // overrides only
    std::size_t n_max = 3;
    int threshold = 4;
    std::size_t k_experts = 3;
    std::size_t max_charts = 5;
    std::size_t max_repairs = 2;
    std::size_t max_in_flight = 4;
    std::size_t geval_samples = 5;
    llm::Mode mode = llm::Mode::replay;
    std::optional<std::filesystem::path> cassette_path;
    std::string base_url = "https://api.openai.com";
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "d2d-run";
    std::optional<std::filesystem::path> knowledge_path;

    void validate() const;
    double temperature(Stage s) const;
    // Judge and G-Eval stages use judge_model_id when set.
    llm::StageModel stage_model(Stage s) const;
};

// Every field a command-line flag can set. Unset fields fall through to the
// config file and then to the built-in default.
struct ConfigOverrides {
    std::optional<std::string> model_id;
    std::optional<std::string> judge_model_id;
    std::map<Stage, double> temperatures;
    std::optional<std::size_t> n_max;
    std::optional<int> threshold;
    std::optional<std::size_t> k_experts;
    std::optional<std::size_t> max_charts;
    std::optional<std::size_t> max_repairs;
    std::optional<std::size_t> max_in_flight;
    std::optional<std::size_t> geval_samples;
    std::optional<std::string> mode;
    std::optional<std::filesystem::path> cassette_path;
    std::optional<std::string> base_url;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::filesystem::path> knowledge_path;
};

// Applies a parsed TOML document. Relative paths resolve against base_dir.
void apply_file(RunConfig& config, const nlohmann::json& doc, const std::filesystem::path& base_dir);
void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

// Default, then file (if any), then overrides; validated.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& overrides);

nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// Digest of the fields that influence artifact content. Output location,
// gateway mode and file paths are excluded so identical runs written to
// different places agree; the knowledge file enters the run digest by content.
std::string config_hash(const RunConfig& config);

// Live and record modes need D2D_API_KEY; replay and record need a cassette.
void check_run_preconditions(const RunConfig& config);

} // namespace d2d::app
