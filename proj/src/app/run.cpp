#include "d2d/app/run.hpp"

#include "d2d/chart/plan.hpp"
#include "d2d/common/diagnostics.hpp"
#include "d2d/common/error.hpp"
#include "d2d/common/hash.hpp"
#include "d2d/ingest/table.hpp"
#include "d2d/insight/insight.hpp"
#include "d2d/llm/errors.hpp"
#include "d2d/llm/transport.hpp"
#include "d2d/profile/enrich.hpp"
#include "d2d/profile/inference.hpp"
#include "d2d/profile/profile.hpp"
#include "d2d/reflexion/loop.hpp"
#include "d2d/render/dashboard.hpp"
#include "d2d/render/data.hpp"
#include "d2d/render/spec.hpp"
#include "d2d/semantics/semantics.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <sstream>

namespace d2d::app {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string>& run_layout()
{
    static const std::vector<std::string> layout{
        "profile.json",     "domain.json", "concepts.json", "insights",       "evaluation", "reflections",
        "loop_trace.json", "chart_plans.json", "charts",    "dashboard.html", kManifestFile};
    return layout;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ingest::IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ingest::IoError("cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw ingest::IoError("write failure on " + path.string());
        }
    }
    fs::rename(tmp, path);
}

namespace {

std::string pretty(const ordered_json& j)
{
    return j.dump(2) + "\n";
}

json parse_json_file(const fs::path& path)
{
    const auto body = read_text(path);
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": not valid JSON: " + e.what());
    }
}

std::string utc_stamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

class OfflineTransport : public llm::ChatTransport {
public:
    llm::ChatResponse send(const llm::ChatRequest&) override
    {
        throw llm::GatewayError("network access is disabled in replay mode");
    }
};

// Innermost cause of a nested exception chain, for error classification.
std::exception_ptr root_cause(std::exception_ptr ep)
{
    for (;;) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::nested_exception& n) {
            if (!n.nested_ptr()) {
                return ep;
            }
            ep = n.nested_ptr();
        } catch (...) {
            return ep;
        }
    }
}

ordered_json describe_error(const std::string& stage, std::exception_ptr ep)
{
    ordered_json j;
    j["stage"] = stage;
    try {
        std::rethrow_exception(ep);
    } catch (const std::exception& e) {
        j["message"] = e.what();
    } catch (...) {
        j["message"] = "unknown error";
    }
    const auto cause = root_cause(ep);
    try {
        std::rethrow_exception(cause);
    } catch (const llm::CassetteMiss& e) {
        j["kind"] = "CassetteMiss";
        j["fingerprint"] = e.fingerprint();
        j["nearest"] = e.nearest();
    } catch (const llm::StructuredOutputError& e) {
        j["kind"] = "StructuredOutputError";
    } catch (const llm::GatewayError&) {
        j["kind"] = "GatewayError";
    } catch (const ingest::EmptyTable&) {
        j["kind"] = "EmptyTable";
    } catch (const ingest::MalformedRow&) {
        j["kind"] = "MalformedRow";
    } catch (const ingest::IngestError&) {
        j["kind"] = "IngestError";
    } catch (const semantics::ConceptValidationError&) {
        j["kind"] = "ConceptValidationError";
    } catch (const insight::InsightValidationError&) {
        j["kind"] = "InsightValidationError";
    } catch (const chart::PlanValidationError&) {
        j["kind"] = "PlanValidationError";
    } catch (const render::AggregationError&) {
        j["kind"] = "AggregationError";
    } catch (const std::exception&) {
        j["kind"] = "Error";
    } catch (...) {
        j["kind"] = "unknown";
    }
    if (cause != ep) {
        try {
            std::rethrow_exception(cause);
        } catch (const std::exception& e) {
            j["cause"] = e.what();
        }
    }
    return j;
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& stage, const std::string& rel, const std::string& content)
    {
        write_text(dir_ / rel, content);
        ordered_json a;
        a["stage"] = stage;
        a["path"] = rel;
        a["sha256"] = sha256_hex(content);
        a["bytes"] = content.size();
        artifacts_.push_back(std::move(a));
    }

    const ordered_json& artifacts() const { return artifacts_; }

private:
    fs::path dir_;
    ordered_json artifacts_ = ordered_json::array();
};

struct RenderedOutputs {
    std::vector<std::pair<std::string, std::string>> charts; // rel path, content
    std::string dashboard;
};

RenderedOutputs render_outputs(const profile::TypedTable& table, const profile::TableProfile& profile,
                               const insight::InsightBundle& bundle, const semantics::DomainFinding& domain,
                               const std::vector<chart::ChartPlan>& plans, std::uint64_t seed,
                               const std::string& run_digest)
{
    if (plans.empty()) {
        throw Error("no chart plans to render");
    }
    render::DataOptions opts;
    opts.sample_seed = seed;
    std::vector<std::future<render::ChartSpec>> jobs;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] {
            const auto data = render::prepare_chart_data(table, plans[i], opts);
            return render::emit_spec(plans[i], data, profile, i);
        }));
    }
    RenderedOutputs out;
    std::vector<render::ChartSpec> specs;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto spec = jobs[i].get();
        const auto errors = render::validate_spec(spec);
        if (!errors.empty()) {
            throw Error("chart " + std::to_string(i + 1) + " failed grammar validation: " + errors.front());
        }
        out.charts.emplace_back("charts/chart_" + std::to_string(i + 1) + ".vl.json", pretty(spec.grammar_doc));
        specs.push_back(std::move(spec));
    }
    out.dashboard = render::assemble_dashboard(specs, bundle, domain, plans, run_digest).html;
    return out;
}

void reset_run_dir(const fs::path& dir)
{
    fs::create_directories(dir);
    // the manifest goes first so an interrupted run never looks finished
    fs::remove(dir / kManifestFile);
    for (const auto& entry : run_layout()) {
        fs::remove_all(dir / entry);
    }
}

} // namespace

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& config)
{
    llm::GatewayOptions opts;
    opts.mode = config.mode;
    opts.max_in_flight = config.max_in_flight;
    llm::Cassette cassette;
    if (config.cassette_path) {
        cassette = llm::Cassette::load(*config.cassette_path);
        if (config.mode == llm::Mode::record) {
            opts.cassette_path = config.cassette_path;
        }
    }
    std::shared_ptr<llm::ChatTransport> transport;
    if (config.mode == llm::Mode::replay) {
        transport = std::make_shared<OfflineTransport>();
    } else {
        auto poster = std::make_shared<llm::HttplibPoster>(config.base_url);
        transport = std::make_shared<llm::OpenAiTransport>(poster, llm::api_key_from_environment());
    }
    return std::make_unique<llm::Gateway>(opts, transport, std::move(cassette));
}

RunReport cmd_run(const fs::path& input, const RunConfig& config, llm::Gateway& gateway)
{
    config.validate();
    RunReport report;
    report.run_dir = config.output_dir;
    reset_run_dir(config.output_dir);

    ArtifactWriter writer(config.output_dir);
    Warnings warnings;
    ordered_json timings = ordered_json::object();
    std::string stage = "ingest";
    auto started = std::chrono::steady_clock::now();
    auto next_stage = [&](const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        timings[stage] = std::chrono::duration_cast<std::chrono::milliseconds>(now - started).count();
        started = now;
        stage = name;
    };

    const auto hash = config_hash(config);
    std::string input_digest;
    std::string run_digest;
    ordered_json error;
    try {
        const auto bytes = read_text(input);
        input_digest = sha256_hex(bytes);
        const auto knowledge_digest = config.knowledge_path ? sha256_hex(read_text(*config.knowledge_path)) : "";
        run_digest = sha256_hex(hash + ":" + input_digest + ":" + knowledge_digest).substr(0, 16);
        const auto raw = ingest::parse_table(bytes, {}, input.string());
        for (const auto& r : raw.renamed_headers) {
            warnings.add("ingest", "header renamed: '" + r.original + "' -> '" + r.renamed + "'");
        }

        next_stage("profile");
        const auto typed = profile::type_table(raw);
        const auto base_profile = profile::build_profile(typed);

        next_stage("enrich");
        const auto prof = profile::enrich_profile(base_profile, gateway, config.stage_model(Stage::enrich), warnings);
        writer.write("enrich", "profile.json", pretty(profile::to_json(prof)));

        next_stage("domain");
        std::unique_ptr<semantics::KnowledgeSource> knowledge;
        if (config.knowledge_path) {
            knowledge = std::make_unique<semantics::StubKnowledge>(semantics::StubKnowledge::from_file(*config.knowledge_path));
        } else {
            knowledge = std::make_unique<semantics::EmptyKnowledge>();
        }
        const auto domain = semantics::detect_domain(prof, *knowledge, gateway, config.stage_model(Stage::domain));
        writer.write("domain", "domain.json", pretty(semantics::to_json(domain)));

        next_stage("concepts");
        const auto concepts =
            semantics::extract_concepts(domain, prof, gateway, config.stage_model(Stage::concepts), warnings);
        writer.write("concepts", "concepts.json", pretty(semantics::to_json(concepts)));

        next_stage("reflexion");
        reflexion::StageModels models{config.stage_model(Stage::generator), config.stage_model(Stage::judge),
                                      config.stage_model(Stage::reflector)};
        reflexion::LlmLoopAgents agents({prof, domain, concepts}, gateway, models, config.threshold, warnings);
        reflexion::LoopObserver observer;
        observer.on_bundle = [&](const insight::InsightBundle& b) {
            writer.write("reflexion", "insights/iteration_" + std::to_string(b.iteration) + ".json",
                         pretty(insight::to_json(b)));
        };
        observer.on_report = [&](std::size_t k, const reflexion::EvaluationReport& r) {
            writer.write("reflexion", "evaluation/iteration_" + std::to_string(k) + ".json", pretty(reflexion::to_json(r)));
        };
        observer.on_reflection = [&](std::size_t k, const std::string& text) {
            writer.write("reflexion", "reflections/iteration_" + std::to_string(k) + ".txt", text + "\n");
        };
        reflexion::LoopConfig loop_config{config.n_max, config.threshold};
        reflexion::LoopResult loop;
        try {
            loop = reflexion::run_loop(agents, loop_config, observer);
        } catch (const reflexion::LoopError& e) {
            writer.write("reflexion", "loop_trace.json", pretty(reflexion::to_json(e.partial())));
            throw;
        }
        writer.write("reflexion", "loop_trace.json", pretty(reflexion::to_json(loop.trace)));

        next_stage("plan");
        const auto refs = chart::select_insights(loop.best, config.max_charts);
        chart::PlannerConfig planner;
        planner.k_experts = config.k_experts;
        planner.expert = config.stage_model(Stage::expert);
        planner.consensus = config.stage_model(Stage::consensus);
        std::vector<std::future<chart::PlanOutcome>> jobs;
        for (const auto& ref : refs) {
            jobs.push_back(std::async(std::launch::async, [&, ref] {
                return chart::plan_chart(loop.best, ref, prof, gateway, planner);
            }));
        }
        std::vector<chart::PlanOutcome> outcomes;
        std::exception_ptr first_failure;
        for (auto& j : jobs) {
            try {
                outcomes.push_back(j.get());
            } catch (...) {
                if (!first_failure) {
                    first_failure = std::current_exception();
                }
            }
        }
        if (first_failure) {
            std::rethrow_exception(first_failure);
        }
        std::vector<chart::ChartPlan> plans;
        ordered_json plans_doc;
        plans_doc["plans"] = ordered_json::array();
        plans_doc["deliberation"] = ordered_json::array();
        for (const auto& o : outcomes) {
            plans.push_back(o.plan);
            plans_doc["plans"].push_back(chart::to_json(o.plan));
            ordered_json d;
            d["proposals"] = ordered_json::array();
            for (const auto& p : o.proposals) {
                d["proposals"].push_back(chart::to_json(p));
            }
            d["consensus_call"] = o.consensus_call;
            d["gateway_calls"] = o.gateway_calls;
            plans_doc["deliberation"].push_back(std::move(d));
        }
        writer.write("plan", "chart_plans.json", pretty(plans_doc));

        next_stage("render");
        const auto rendered = render_outputs(typed, prof, loop.best, domain, plans, config.seed, run_digest);
        for (const auto& [rel, content] : rendered.charts) {
            writer.write("render", rel, content);
        }
        writer.write("render", "dashboard.html", rendered.dashboard);
        next_stage("manifest");
    } catch (...) {
        error = describe_error(stage, std::current_exception());
        report.error = error["message"].get<std::string>();
        report.exit_code = 1;
        next_stage(stage);
    }

    ordered_json m;
    m["status"] = report.exit_code == 0 ? "ok" : "error";
    m["run_id"] = utc_stamp() + "-" + hash;
    m["run_digest"] = run_digest.empty() ? ordered_json(nullptr) : ordered_json(run_digest);
    m["input"] = {{"path", fs::absolute(input).lexically_normal().generic_string()},
                  {"sha256", input_digest.empty() ? ordered_json(nullptr) : ordered_json(input_digest)}};
    m["config_hash"] = hash;
    m["config"] = to_json(config);
    m["artifacts"] = writer.artifacts();
    m["timings_ms"] = timings;
    m["warnings"] = warnings.items();
    m["gateway"] = {{"mode", llm::to_string(gateway.mode())},
                    {"calls", gateway.calls()},
                    {"network_calls", gateway.network_calls()}};
    if (report.exit_code != 0) {
        m["error"] = error;
    }
    write_text(config.output_dir / kManifestFile, pretty(m));
    report.manifest = std::move(m);
    return report;
}

ordered_json cmd_profile(const fs::path& input, const fs::path& out)
{
    const auto raw = ingest::load_table(input);
    const auto prof = profile::build_profile(profile::type_table(raw));
    auto j = profile::to_json(prof);
    write_text(out, pretty(j));
    return j;
}

void cmd_render(const fs::path& run_dir)
{
    for (const auto& name : {std::string(kManifestFile), std::string("profile.json"), std::string("domain.json"),
                             std::string("chart_plans.json"), std::string("loop_trace.json")}) {
        if (!fs::exists(run_dir / name)) {
            throw Error("run directory " + run_dir.string() + " has no " + name);
        }
    }
    auto manifest = ordered_json::parse(read_text(run_dir / kManifestFile));
    if (manifest.value("status", std::string()) != "ok") {
        throw Error(run_dir.string() + " holds a failed run; nothing to render");
    }
    const fs::path input = manifest.at("input").at("path").get<std::string>();
    const auto bytes = read_text(input);
    if (sha256_hex(bytes) != manifest.at("input").at("sha256").get<std::string>()) {
        throw Error("input " + input.string() + " changed since the run");
    }
    const auto config = config_from_json(manifest.at("config"));
    const auto typed = profile::type_table(ingest::parse_table(bytes, {}, input.string()));
    const auto prof = profile::profile_from_json(parse_json_file(run_dir / "profile.json"));
    const auto domain = semantics::domain_from_json(parse_json_file(run_dir / "domain.json"));
    const auto trace = parse_json_file(run_dir / "loop_trace.json");
    if (!trace.at("best_iteration").is_number_unsigned()) {
        throw Error("loop_trace.json has no best iteration");
    }
    const auto best = trace.at("best_iteration").get<std::size_t>();
    const auto bundle = insight::bundle_from_json(
        parse_json_file(run_dir / "insights" / ("iteration_" + std::to_string(best) + ".json")));
    const auto plans_doc = parse_json_file(run_dir / "chart_plans.json");
    std::vector<chart::ChartPlan> plans;
    for (const auto& p : plans_doc.at("plans")) {
        plans.push_back(chart::plan_from_json(p));
        const auto problems = chart::validate_plan(plans.back(), prof);
        if (!problems.empty()) {
            throw chart::PlanValidationError("chart_plans.json plan " + std::to_string(plans.size()) + ": " +
                                             problems.front());
        }
    }
    const auto rendered = render_outputs(typed, prof, bundle, domain, plans, config.seed,
                                         manifest.at("run_digest").get<std::string>());

    fs::remove_all(run_dir / "charts");
    for (const auto& [rel, content] : rendered.charts) {
        write_text(run_dir / rel, content);
    }
    write_text(run_dir / "dashboard.html", rendered.dashboard);

    auto artifacts = ordered_json::array();
    for (const auto& a : manifest.at("artifacts")) {
        if (a.at("stage") != "render") {
            artifacts.push_back(a);
        }
    }
    for (const auto& [rel, content] : rendered.charts) {
        artifacts.push_back({{"stage", "render"}, {"path", rel}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    artifacts.push_back({{"stage", "render"},
                         {"path", "dashboard.html"},
                         {"sha256", sha256_hex(rendered.dashboard)},
                         {"bytes", rendered.dashboard.size()}});
    manifest["artifacts"] = artifacts;
    write_text(run_dir / kManifestFile, pretty(manifest));
}

namespace {

insight::InsightBundle load_artifact(const fs::path& path)
{
    const auto doc = parse_json_file(path);
    const auto errors = insight::analysis_schema().validate(doc);
    if (!errors.empty()) {
        throw Error(path.string() + ": not an insights artifact: " + errors.front().to_string());
    }
    auto bundle = insight::bundle_from_json(doc);
    if (bundle.total() == 0) {
        throw Error(path.string() + ": insights artifact holds no insights");
    }
    return bundle;
}

// Domain and concepts from the run directory the artifact lives in, if any.
eval::JudgeContext context_for(const fs::path& artifact)
{
    eval::JudgeContext ctx;
    for (auto dir : {artifact.parent_path(), artifact.parent_path().parent_path()}) {
        if (dir.empty()) {
            dir = ".";
        }
        if (fs::exists(dir / "domain.json")) {
            const auto d = semantics::domain_from_json(parse_json_file(dir / "domain.json"));
            ctx.domain = d.label + ": " + d.definition;
            if (fs::exists(dir / "concepts.json")) {
                ctx.concepts_digest = semantics::concepts_digest(semantics::concepts_from_json(parse_json_file(dir / "concepts.json")));
            }
            break;
        }
    }
    return ctx;
}

std::vector<eval::MetricScore> score_all(const std::string& text, const eval::JudgeContext& ctx, llm::Gateway& gateway,
                                         const eval::GEvalConfig& cfg)
{
    std::vector<std::future<eval::MetricScore>> jobs;
    for (auto m : eval::kMetrics) {
        jobs.push_back(std::async(std::launch::async, [&, m] { return eval::g_eval_score(m, text, ctx, gateway, cfg); }));
    }
    std::vector<eval::MetricScore> out;
    for (auto& j : jobs) {
        out.push_back(j.get());
    }
    return out;
}

ordered_json scores_json(const std::vector<eval::MetricScore>& scores)
{
    auto arr = ordered_json::array();
    for (const auto& s : scores) {
        arr.push_back(eval::to_json(s));
    }
    return arr;
}

std::map<eval::Metric, double> normalized_map(const std::vector<eval::MetricScore>& scores)
{
    std::map<eval::Metric, double> m;
    for (const auto& s : scores) {
        m[s.metric] = s.normalized;
    }
    return m;
}

std::map<eval::Metric, double> report_scores(const json& doc, const fs::path& path)
{
    std::map<eval::Metric, double> m;
    const auto& scores = doc.at("scores");
    if (!scores.is_array()) {
        throw Error(path.string() + ": /scores must be an array");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto at = "/scores/" + std::to_string(i);
        const auto& s = scores[i];
        if (!s.is_object() || !s.contains("metric") || !s["metric"].is_string()) {
            throw Error(path.string() + ": " + at + "/metric is missing");
        }
        auto metric = eval::metric_from_string(s["metric"].get<std::string>());
        if (!metric) {
            throw Error(path.string() + ": " + at + "/metric is not a known metric");
        }
        if (!s.contains("normalized") || !s["normalized"].is_number()) {
            throw Error(path.string() + ": " + at + "/normalized must be a number");
        }
        m[*metric] = s["normalized"].get<double>();
    }
    return m;
}

} // namespace

namespace {

struct Scored {
    std::map<eval::Metric, double> normalized;
    ordered_json scores;
};

// An earlier geval report is taken as is; an insights file is judged.
Scored score_input(const fs::path& path, llm::Gateway& gateway, const eval::GEvalConfig& cfg)
{
    const auto doc = parse_json_file(path);
    if (doc.is_object() && doc.contains("scores")) {
        return {report_scores(doc, path), doc["scores"]};
    }
    const auto bundle = load_artifact(path);
    const auto scores = score_all(insight::render_bundle(bundle), context_for(path), gateway, cfg);
    return {normalized_map(scores), scores_json(scores)};
}

} // namespace

EvalReport cmd_eval(const fs::path& artifact, const std::optional<fs::path>& baseline, const RunConfig& config,
                    llm::Gateway& gateway, const fs::path& out)
{
    eval::GEvalConfig cfg;
    cfg.judge = config.stage_model(Stage::geval);
    cfg.n_samples = config.geval_samples;

    const auto candidate = score_input(artifact, gateway, cfg);

    EvalReport report;
    ordered_json doc;
    doc["artifact"] = artifact.generic_string();
    doc["judge_model_id"] = cfg.judge.model_id;
    doc["scores"] = candidate.scores;
    if (baseline) {
        const auto base = score_input(*baseline, gateway, cfg);
        report.lift = eval::compare_reports(base.normalized, candidate.normalized);
        doc["baseline"] = {{"path", baseline->generic_string()}, {"scores", base.scores}};
        doc["lift"] = eval::to_json(*report.lift);
    }
    write_text(out, pretty(doc));
    report.document = std::move(doc);
    return report;
}

} // namespace d2d::app
