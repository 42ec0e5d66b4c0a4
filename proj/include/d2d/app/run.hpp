#pragma once

#include "d2d/app/config.hpp"
#include "d2d/eval/geval.hpp"
#include "d2d/llm/gateway.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace d2d::app {

inline constexpr const char* kManifestFile = "manifest.json";

// Run-directory entries owned by the pipeline, removed before a new run.
const std::vector<std::string>& run_layout();

struct RunReport {
    int exit_code = 0;
    std::filesystem::path run_dir;
    nlohmann::ordered_json manifest;
    std::optional<std::string> error;
};

// Gateway for the configured mode: replay never touches the network, live and
// record talk to the chat-completions endpoint at base_url.
std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config);

// Full pipeline into config.output_dir. Stage failures are reported through the
// returned exit code and an error-annotated manifest; nothing is thrown for them.
RunReport cmd_run(const std::filesystem::path& input, const RunConfig& config, llm::Gateway& gateway);

// Deterministic stages only; returns the JSON written to out.
nlohmann::ordered_json cmd_profile(const std::filesystem::path& input, const std::filesystem::path& out);

// Rebuilds charts/ and dashboard.html from the persisted plans and refreshes
// their digests in the manifest.
void cmd_render(const std::filesystem::path& run_dir);

struct EvalReport {
    nlohmann::ordered_json document;
    std::optional<eval::LiftReport> lift;
};

// Scores the artifact and, when given, the baseline. Each is either an
// insights file, which gets judged, or an earlier geval report, which is
// taken as is.
EvalReport cmd_eval(const std::filesystem::path& artifact, const std::optional<std::filesystem::path>& baseline,
                    const RunConfig& config, llm::Gateway& gateway, const std::filesystem::path& out);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

} // namespace d2d::app
