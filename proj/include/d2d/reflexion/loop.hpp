#pragma once

#include "d2d/common/diagnostics.hpp"
#include "d2d/common/error.hpp"
#include "d2d/insight/insight.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"
#include "d2d/reflexion/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace d2d::reflexion {

inline constexpr const char* kRubricVersion = "rubric-v1";
inline constexpr std::size_t kReflectionMaxChars = 2000;
inline constexpr const char* kTruncationMarker = "...";
inline constexpr const char* kEvaluationSchemaTag = "evaluation";
inline constexpr const char* kReflectionSchemaTag = "reflection";

// Scoring guide for one dimension, with anchors for scores 1 to 4.
const std::string& rubric_text(Dimension d);

const jsonschema::JsonSchema& evaluation_schema();

struct Subject {
    const profile::TableProfile& profile;
    const semantics::DomainFinding& domain;
    const semantics::ConceptSet& concepts;
};

llm::ChatRequest evaluation_request(const insight::InsightBundle& bundle, const Subject& subject,
                                    const llm::StageModel& model);
EvaluationReport evaluate(const insight::InsightBundle& bundle, const Subject& subject, llm::Gateway& gateway,
                          const llm::StageModel& model);

llm::ChatRequest reflection_request(const EvaluationReport& report, const insight::InsightBundle& bundle,
                                    const ReflectionMemory& memory, int threshold, const llm::StageModel& model);
// Free-text reflection, cut to kReflectionMaxChars code points plus marker.
std::string reflect(const EvaluationReport& report, const insight::InsightBundle& bundle,
                    const ReflectionMemory& memory, int threshold, llm::Gateway& gateway,
                    const llm::StageModel& model);

enum class Termination { threshold_met, budget_exhausted };
std::string to_string(Termination t);

struct LoopConfig {
    std::size_t n_max = 3;
    int threshold = 4;

    void validate() const;
};

struct TraceEntry {
    std::size_t iteration = 0;
    insight::InsightBundle bundle;
    EvaluationReport report;
    std::optional<std::string> reflection;
};

struct LoopTrace {
    std::vector<TraceEntry> entries;
    std::optional<Termination> termination; // empty when the loop aborted
    std::size_t best_iteration = 0;
    ReflectionMemory memory;
    std::optional<std::string> error;
};

struct LoopResult {
    insight::InsightBundle best;
    LoopTrace trace;
};

class LoopError : public Error {
public:
    LoopError(const std::string& message, LoopTrace partial) : Error(message), partial_(std::move(partial)) {}
    const LoopTrace& partial() const { return partial_; }

private:
    LoopTrace partial_;
};

// The three roles the loop drives. Tests substitute scripted versions.
class LoopAgents {
public:
    virtual ~LoopAgents() = default;
    virtual insight::InsightBundle generate(const ReflectionMemory& memory, std::size_t iteration) = 0;
    virtual EvaluationReport evaluate(const insight::InsightBundle& bundle) = 0;
    virtual std::string reflect(const EvaluationReport& report, const insight::InsightBundle& bundle,
                                const ReflectionMemory& memory) = 0;
};

struct StageModels {
    llm::StageModel generator{llm::kDefaultModel, llm::kGenerativeTemperature, 2};
    llm::StageModel judge{llm::kDefaultModel, llm::kStructuredTemperature, 2};
    llm::StageModel reflector{llm::kDefaultModel, llm::kGenerativeTemperature, 2};
};

class LlmLoopAgents : public LoopAgents {
public:
    LlmLoopAgents(Subject subject, llm::Gateway& gateway, StageModels models, int threshold, Warnings& warnings);

    insight::InsightBundle generate(const ReflectionMemory& memory, std::size_t iteration) override;
    EvaluationReport evaluate(const insight::InsightBundle& bundle) override;
    std::string reflect(const EvaluationReport& report, const insight::InsightBundle& bundle,
                        const ReflectionMemory& memory) override;

private:
    Subject subject_;
    llm::Gateway& gateway_;
    StageModels models_;
    int threshold_;
    Warnings& warnings_;
};

// Called as each artifact is produced so callers can persist incrementally.
struct LoopObserver {
    std::function<void(const insight::InsightBundle&)> on_bundle;
    std::function<void(std::size_t, const EvaluationReport&)> on_report;
    std::function<void(std::size_t, const std::string&)> on_reflection;
};

// Index of the entry with the highest mean score; ties go to the later entry.
std::size_t best_by_mean(const std::vector<TraceEntry>& entries);

LoopResult run_loop(LoopAgents& agents, const LoopConfig& config, const LoopObserver& observer = {});

nlohmann::ordered_json to_json(const LoopTrace& trace);

} // namespace d2d::reflexion
