#include "d2d/app/config.hpp"
#include "d2d/app/run.hpp"
#include "d2d/common/error.hpp"
#include "d2d/eval/geval.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace fs = std::filesystem;
using namespace d2d;

namespace {

struct RunFlags {
    std::optional<fs::path> config_file;
    app::ConfigOverrides overrides;
    std::vector<std::string> temperatures;
};

void add_config_flags(CLI::App& cmd, RunFlags& f)
{
    auto& o = f.overrides;
    cmd.add_option("--config", f.config_file, "TOML run configuration")->check(CLI::ExistingFile);
    cmd.add_option("--model", o.model_id, "model id for every pipeline stage");
    cmd.add_option("--judge-model", o.judge_model_id, "model id for the evaluator and G-Eval judge");
    cmd.add_option("--temperature", f.temperatures, "per-stage temperature, e.g. generator=0.5")->take_all();
    cmd.add_option("--n-max", o.n_max, "reflexion iteration budget");
    cmd.add_option("--threshold", o.threshold, "score every dimension must reach to stop early (1-4)");
    cmd.add_option("--k-experts", o.k_experts, "chart experts per insight");
    cmd.add_option("--max-charts", o.max_charts, "charts on the dashboard");
    cmd.add_option("--max-repairs", o.max_repairs, "repair turns per structured call");
    cmd.add_option("--max-in-flight", o.max_in_flight, "concurrent model requests");
    cmd.add_option("--geval-samples", o.geval_samples, "judge samples when log-probabilities are unavailable");
    cmd.add_option("--mode", o.mode, "live, record or replay")->check(CLI::IsMember({"live", "record", "replay"}));
    cmd.add_option("--cassette", o.cassette_path, "recorded responses for replay and record modes");
    cmd.add_option("--base-url", o.base_url, "chat-completions endpoint base URL");
    cmd.add_option("--seed", o.seed, "sampling seed for inline chart data");
    cmd.add_option("--knowledge", o.knowledge_path, "JSON term -> snippet knowledge file");
}

app::RunConfig resolve(RunFlags& f)
{
    for (const auto& t : f.temperatures) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--temperature expects stage=value, got '" + t + "'");
        }
        const auto stage = app::stage_from_string(t.substr(0, eq));
        if (!stage) {
            throw ConfigError("--temperature: unknown stage '" + t.substr(0, eq) + "'");
        }
        try {
            f.overrides.temperatures[*stage] = std::stod(t.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("--temperature: bad value in '" + t + "'");
        }
    }
    return app::resolve_config(f.config_file, f.overrides);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"d2d: turn a business table into an insight dashboard"};
    cli.require_subcommand(1);

    RunFlags run_flags;
    fs::path run_input;
    auto* run = cli.add_subcommand("run", "full pipeline into a run directory");
    run->add_option("input", run_input, "CSV table")->required();
    run->add_option("-o,--output-dir", run_flags.overrides.output_dir, "run directory");
    add_config_flags(*run, run_flags);

    fs::path profile_input;
    fs::path profile_out = "profile.json";
    auto* prof = cli.add_subcommand("profile", "deterministic profile only");
    prof->add_option("input", profile_input, "CSV table")->required();
    prof->add_option("-o,--out", profile_out, "output file");

    RunFlags eval_flags;
    fs::path artifact;
    std::optional<fs::path> baseline;
    fs::path eval_out = "geval_report.json";
    auto* ev = cli.add_subcommand("eval", "G-Eval scoring with optional lift against a baseline");
    ev->add_option("--artifact", artifact, "insights JSON to score, or an earlier geval report")->required();
    ev->add_option("--baseline", baseline, "insights JSON or earlier geval report");
    ev->add_option("-o,--out", eval_out, "report file");
    add_config_flags(*ev, eval_flags);

    fs::path render_dir;
    auto* rend = cli.add_subcommand("render", "rebuild charts and dashboard from persisted plans");
    rend->add_option("run_dir", render_dir, "run directory")->required();

    CLI11_PARSE(cli, argc, argv);

    try {
        if (*run) {
            const auto config = resolve(run_flags);
            app::check_run_preconditions(config);
            auto gateway = app::make_gateway(config);
            const auto report = app::cmd_run(run_input, config, *gateway);
            if (report.exit_code != 0) {
                std::cerr << "d2d run failed: " << *report.error << "\n"
                          << "partial artifacts in " << report.run_dir.string() << "\n";
                return report.exit_code;
            }
            std::cout << "run complete: " << (report.run_dir / "dashboard.html").string() << "\n";
            return 0;
        }
        if (*prof) {
            app::cmd_profile(profile_input, profile_out);
            std::cout << "profile written to " << profile_out.string() << "\n";
            return 0;
        }
        if (*ev) {
            const auto config = resolve(eval_flags);
            // scoring two earlier reports needs no judge, so replay may run without a cassette
            if (config.mode != llm::Mode::replay || config.cassette_path) {
                app::check_run_preconditions(config);
            }
            auto gateway = app::make_gateway(config);
            const auto report = app::cmd_eval(artifact, baseline, config, *gateway, eval_out);
            for (const auto& s : report.document["scores"]) {
                std::cout << s["metric"].get<std::string>() << ": " << s["normalized"].get<double>() << "\n";
            }
            if (report.lift) {
                std::cout << "\n" << eval::lift_table(*report.lift);
            }
            std::cout << "report written to " << eval_out.string() << "\n";
            return 0;
        }
        if (*rend) {
            app::cmd_render(render_dir);
            std::cout << "dashboard re-rendered: " << (render_dir / "dashboard.html").string() << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
