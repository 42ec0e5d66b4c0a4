#include "d2d/reflexion/loop.hpp"

#include "d2d/common/text.hpp"
#include "d2d/llm/structured.hpp"
#include "d2d/profile/profile.hpp"

#include <exception>
#include <stdexcept>

namespace d2d::reflexion {

using nlohmann::json;
using nlohmann::ordered_json;

const std::string& rubric_text(Dimension d)
{
    static const std::array<std::string, 5> texts{
        // domain_accuracy
        "domain_accuracy: does the analysis identify the right business domain and use its vocabulary correctly?\n"
        "  1 = domain wrong or ignored; 2 = roughly right but generic or misapplied in places; "
        "3 = correct and used consistently with minor slips; 4 = correct, specific, and every insight is framed "
        "in its terms.",
        // concept_quality
        "concept_quality: are the domain concepts relevant to this table, and together do they cover its "
        "important aspects?\n"
        "  1 = concepts missing or unrelated to the columns; 2 = some relevant concepts but major aspects "
        "uncovered; 3 = relevant with small gaps; 4 = relevant, specific and comprehensive.",
        // insightfulness
        "insightfulness: would a business reader come away knowing what to do or watch?\n"
        "  1 = restates raw numbers; 2 = basic observations with little business meaning; 3 = most insights "
        "carry a clear business implication; 4 = sharp, actionable insights whose implications are explained.",
        // novelty
        "novelty: do the insights go beyond what column names and single summary statistics already reveal?\n"
        "  1 = entirely obvious; 2 = mostly obvious with one or two less evident points; 3 = several findings a "
        "specialist would not assume; 4 = consistently non-obvious findings that connect several columns.",
        // depth
        "depth: are the claims supported by specific evidence and reasoning, including relationships between "
        "columns?\n"
        "  1 = unsupported assertions; 2 = thin evidence; 3 = most claims backed by cited statistics; 4 = every "
        "claim quantified and reasoned through, including interactions and caveats.",
    };
    return texts[static_cast<std::size_t>(d)];
}

const jsonschema::JsonSchema& evaluation_schema()
{
    static const jsonschema::JsonSchema schema([] {
        json score_props = json::object();
        json just_props = json::object();
        json names = json::array();
        for (auto d : kDimensions) {
            score_props[to_string(d)] = {{"type", "integer"}, {"minimum", 1}, {"maximum", 4}};
            just_props[to_string(d)] = {{"type", "string"}, {"pattern", "\\S"}};
            names.push_back(to_string(d));
        }
        return json{{"type", "object"},
                    {"required", {"scores", "justifications"}},
                    {"properties",
                     {{"scores", {{"type", "object"}, {"required", names}, {"properties", score_props}}},
                      {"justifications", {{"type", "object"}, {"required", names}, {"properties", just_props}}}}}};
    }());
    return schema;
}

llm::ChatRequest evaluation_request(const insight::InsightBundle& bundle, const Subject& subject,
                                    const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = kEvaluationSchemaTag;
    req.messages.push_back({llm::Role::system,
                            "You are a demanding reviewer of business data analyses. You score work against a "
                            "fixed rubric and justify every score with specifics."});
    std::string user = "Domain: " + subject.domain.label + "\nDefinition: " + subject.domain.definition + "\n\n";
    user += "Domain concepts:\n" + semantics::concepts_digest(subject.concepts) + "\n";
    user += "Statistical profile of the table:\n\n" + profile::synopsis(subject.profile) + "\n";
    user += "Analysis under review:\n" + insight::render_bundle(bundle) + "\n";
    user += "Rubric (" + std::string(kRubricVersion) + "):\n";
    for (auto d : kDimensions) {
        user += rubric_text(d) + "\n";
    }
    user += "\nScore every dimension with an integer from 1 to 4 and justify each score in one or two sentences "
            "that point at specific insights.\n\n";
    user += llm::schema_instructions(evaluation_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

EvaluationReport evaluate(const insight::InsightBundle& bundle, const Subject& subject, llm::Gateway& gateway,
                          const llm::StageModel& model)
{
    llm::StructuredOptions opts;
    opts.max_repairs = model.max_repairs;
    const auto result = llm::complete_structured(gateway, evaluation_request(bundle, subject, model), evaluation_schema(), opts);
    auto report = report_from_json(result.value);
    report.check();
    return report;
}

llm::ChatRequest reflection_request(const EvaluationReport& report, const insight::InsightBundle& bundle,
                                    const ReflectionMemory& memory, int threshold, const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = kReflectionSchemaTag;
    req.messages.push_back({llm::Role::system,
                            "You are a data analyst reviewing your own work so the next attempt is better."});
    std::string user = "Your analysis:\n" + insight::render_bundle(bundle) + "\n";
    user += "Reviewer scores: " + score_line(report) + "\n";
    user += "Reviewer comments:\n";
    for (auto d : kDimensions) {
        user += "- " + to_string(d) + " (" + std::to_string(report.score(d)) + "/4): " + report.justification(d) + "\n";
    }
    std::vector<std::string> weak;
    for (auto d : report.below(threshold)) {
        weak.push_back(to_string(d));
    }
    user += "\nDimensions below the target score of " + std::to_string(threshold) + ": " +
            (weak.empty() ? std::string("none") : text::join(weak, ", ")) + ".\n";
    if (!memory.empty()) {
        user += "\nYour reflections from earlier rounds:\n";
        for (const auto& e : memory.entries) {
            if (!e.reflection.empty()) {
                user += "- iteration " + std::to_string(e.iteration) + ": " +
                        text::truncate_with_marker(e.reflection, 300, kTruncationMarker) + "\n";
            }
        }
    }
    user += "\nWrite a short reflection in plain text (no JSON, under 300 words). For each dimension below the "
            "target, say what held the analysis back and what the next attempt should do differently.";
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

std::string reflect(const EvaluationReport& report, const insight::InsightBundle& bundle,
                    const ReflectionMemory& memory, int threshold, llm::Gateway& gateway,
                    const llm::StageModel& model)
{
    report.check();
    const auto resp = gateway.complete(reflection_request(report, bundle, memory, threshold, model));
    return text::truncate_with_marker(resp.text, kReflectionMaxChars, kTruncationMarker);
}

std::string to_string(Termination t)
{
    return t == Termination::threshold_met ? "threshold_met" : "budget_exhausted";
}

void LoopConfig::validate() const
{
    if (n_max < 1) {
        throw std::invalid_argument("n_max must be at least 1");
    }
    if (threshold < 1 || threshold > 4) {
        throw std::invalid_argument("threshold must be between 1 and 4");
    }
}

LlmLoopAgents::LlmLoopAgents(Subject subject, llm::Gateway& gateway, StageModels models, int threshold,
                             Warnings& warnings)
    : subject_(subject), gateway_(gateway), models_(std::move(models)), threshold_(threshold), warnings_(warnings)
{
}

insight::InsightBundle LlmLoopAgents::generate(const ReflectionMemory& memory, std::size_t iteration)
{
    return insight::generate_analysis(subject_.profile, subject_.domain, subject_.concepts, memory, iteration,
                                      gateway_, models_.generator, warnings_);
}

EvaluationReport LlmLoopAgents::evaluate(const insight::InsightBundle& bundle)
{
    return reflexion::evaluate(bundle, subject_, gateway_, models_.judge);
}

std::string LlmLoopAgents::reflect(const EvaluationReport& report, const insight::InsightBundle& bundle,
                                   const ReflectionMemory& memory)
{
    return reflexion::reflect(report, bundle, memory, threshold_, gateway_, models_.reflector);
}

std::size_t best_by_mean(const std::vector<TraceEntry>& entries)
{
    if (entries.empty()) {
        throw std::invalid_argument("no loop entries to choose from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        // integer sums avoid float ties being decided by rounding
        int sum_i = 0;
        int sum_b = 0;
        for (int s : entries[i].report.scores) {
            sum_i += s;
        }
        for (int s : entries[best].report.scores) {
            sum_b += s;
        }
        if (sum_i >= sum_b) {
            best = i;
        }
    }
    return best;
}

LoopResult run_loop(LoopAgents& agents, const LoopConfig& config, const LoopObserver& observer)
{
    config.validate();
    LoopTrace trace;
    for (std::size_t k = 0; k < config.n_max; ++k) {
        TraceEntry entry;
        entry.iteration = k;
        try {
            entry.bundle = agents.generate(trace.memory, k);
            entry.bundle.iteration = k;
            if (observer.on_bundle) {
                observer.on_bundle(entry.bundle);
            }
            entry.report = agents.evaluate(entry.bundle);
            entry.report.check();
            if (observer.on_report) {
                observer.on_report(k, entry.report);
            }
        } catch (const std::exception& e) {
            trace.error = "iteration " + std::to_string(k) + ": " + e.what();
            std::throw_with_nested(LoopError("reflexion loop aborted at " + *trace.error, std::move(trace)));
        }

        const MemoryEntry remembered{k, insight::bundle_digest(entry.bundle), entry.report, ""};
        if (entry.report.min_score() >= config.threshold) {
            // an iteration-0 success has nothing to remember for a later round
            if (k > 0) {
                trace.memory.entries.push_back(remembered);
            }
            trace.entries.push_back(std::move(entry));
            trace.termination = Termination::threshold_met;
            trace.best_iteration = k;
            break;
        }
        if (k + 1 == config.n_max) {
            trace.memory.entries.push_back(remembered);
            trace.entries.push_back(std::move(entry));
            trace.termination = Termination::budget_exhausted;
            trace.best_iteration = best_by_mean(trace.entries);
            break;
        }
        try {
            entry.reflection = agents.reflect(entry.report, entry.bundle, trace.memory);
            if (observer.on_reflection) {
                observer.on_reflection(k, *entry.reflection);
            }
        } catch (const std::exception& e) {
            trace.entries.push_back(std::move(entry));
            trace.error = "iteration " + std::to_string(k) + " reflection: " + e.what();
            std::throw_with_nested(LoopError("reflexion loop aborted at " + *trace.error, std::move(trace)));
        }
        auto mem = remembered;
        mem.reflection = *entry.reflection;
        trace.memory.entries.push_back(std::move(mem));
        trace.entries.push_back(std::move(entry));
    }
    LoopResult result;
    result.best = trace.entries.at(trace.best_iteration).bundle;
    result.trace = std::move(trace);
    return result;
}

ordered_json to_json(const LoopTrace& trace)
{
    ordered_json j;
    j["rubric_version"] = kRubricVersion;
    j["termination_reason"] = trace.termination ? ordered_json(to_string(*trace.termination)) : ordered_json(nullptr);
    j["best_iteration"] = trace.termination ? ordered_json(trace.best_iteration) : ordered_json(nullptr);
    j["iterations_executed"] = trace.entries.size();
    j["entries"] = ordered_json::array();
    for (const auto& e : trace.entries) {
        ordered_json ej;
        ej["iteration"] = e.iteration;
        ej["bundle_digest"] = insight::bundle_digest(e.bundle);
        ej["report"] = to_json(e.report);
        ej["reflection"] = e.reflection ? ordered_json(*e.reflection) : ordered_json(nullptr);
        j["entries"].push_back(std::move(ej));
    }
    j["memory_length"] = trace.memory.size();
    j["error"] = trace.error ? ordered_json(*trace.error) : ordered_json(nullptr);
    return j;
}

} // namespace d2d::reflexion
