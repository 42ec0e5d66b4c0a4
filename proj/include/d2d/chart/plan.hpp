#pragma once

#include "d2d/common/error.hpp"
#include "d2d/insight/insight.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"
#include "d2d/profile/types.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace d2d::chart {

class PlanValidationError : public Error {
public:
    using Error::Error;
};

enum class ChartType { bar, stacked_bar, line, scatter, box, heatmap, pie };
inline constexpr std::array<ChartType, 7> kChartTypes{ChartType::bar,     ChartType::stacked_bar, ChartType::line,
                                                      ChartType::scatter, ChartType::box,         ChartType::heatmap,
                                                      ChartType::pie};

enum class Aggregate { sum, mean, count, median };
inline constexpr std::array<Aggregate, 4> kAggregates{Aggregate::sum, Aggregate::mean, Aggregate::count,
                                                      Aggregate::median};

std::string to_string(ChartType t);
std::optional<ChartType> chart_type_from_string(const std::string& s);
std::string to_string(Aggregate a);
std::optional<Aggregate> aggregate_from_string(const std::string& s);

struct Encodings {
    std::optional<std::string> x;
    std::optional<std::string> y;
    std::optional<std::string> color;
    std::optional<std::string> facet;

    bool operator==(const Encodings&) const = default;
};

struct ExpertProposal {
    std::size_t expert_id = 1;
    ChartType chart_type = ChartType::bar;
    Encodings encodings;
    std::optional<Aggregate> aggregate;
    std::string rationale;
};

inline constexpr std::size_t kMaxAnnotations = 3;

struct ChartPlan {
    insight::InsightRef insight_ref{insight::Lens::descriptive, 0};
    ChartType chart_type = ChartType::bar;
    Encodings encodings;
    std::optional<Aggregate> aggregate;
    std::string rationale;
    std::string key_insight_narrative;
    std::vector<std::string> annotations;
};

// Chart-type / encoding compatibility against the profile's column types.
// Returns one message per violated rule; empty means the plan is usable.
std::vector<std::string> check_compatibility(ChartType type, const Encodings& enc, std::optional<Aggregate> aggregate,
                                             const profile::TableProfile& profile);
std::vector<std::string> validate_plan(const ChartPlan& plan, const profile::TableProfile& profile);

// Round-robin over lenses starting with domain_related, then descriptive and
// predictive; within a lens insights carrying a viz_hint come first.
std::vector<insight::InsightRef> select_insights(const insight::InsightBundle& bundle, std::size_t max_charts = 5);

struct PlannerConfig {
    std::size_t k_experts = 3;
    llm::StageModel expert{llm::kDefaultModel, llm::kGenerativeTemperature, 2};
    llm::StageModel consensus{llm::kDefaultModel, llm::kStructuredTemperature, 2};
};

const std::string& persona(std::size_t expert_id);
const jsonschema::JsonSchema& proposal_schema();
const jsonschema::JsonSchema& consensus_schema();

llm::ChatRequest expert_request(const insight::Insight& insight, const profile::TableProfile& profile,
                                std::size_t expert_id, const llm::StageModel& model);
llm::ChatRequest consensus_request(const insight::Insight& insight, const profile::TableProfile& profile,
                                   const std::vector<ExpertProposal>& proposals, const llm::StageModel& model);

struct PlanOutcome {
    ChartPlan plan;
    std::vector<ExpertProposal> proposals;
    bool consensus_call = false;
    std::size_t gateway_calls = 0;
};

PlanOutcome plan_chart(const insight::InsightBundle& bundle, const insight::InsightRef& ref,
                       const profile::TableProfile& profile, llm::Gateway& gateway, const PlannerConfig& config);

nlohmann::ordered_json to_json(const Encodings& e);
nlohmann::ordered_json to_json(const ExpertProposal& p);
nlohmann::ordered_json to_json(const ChartPlan& p);
ChartPlan plan_from_json(const nlohmann::json& j);

} // namespace d2d::chart
