#pragma once

#include "d2d/common/error.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"

#include "json.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace d2d::eval {

class RangeError : public Error {
public:
    using Error::Error;
};

class DivisionByZero : public Error {
public:
    using Error::Error;
};

enum class Metric { insightfulness, novelty, depth };
inline constexpr std::array<Metric, 3> kMetrics{Metric::insightfulness, Metric::novelty, Metric::depth};

std::string to_string(Metric m);
std::optional<Metric> metric_from_string(const std::string& s);

// Maps a 1..4 rubric score onto [0, 1] as (raw - 1) / 3.
double normalize(double raw);

struct MetricScore {
    Metric metric = Metric::insightfulness;
    double raw = 1.0;
    double normalized = 0.0;
    bool weighted = false;
    std::size_t n_samples = 0;
};

struct LiftEntry {
    Metric metric;
    double baseline = 0;
    double candidate = 0;
    double lift = 0;         // percent, unrounded
    long lift_rounded = 0;   // nearest integer percent, halves away from zero
};

struct LiftReport {
    std::vector<LiftEntry> entries;
};

// Percentage lift of candidate over baseline for every shared metric.
LiftReport compare_reports(const std::map<Metric, double>& baseline, const std::map<Metric, double>& candidate);

struct JudgeContext {
    std::string domain;
    std::string concepts_digest;
};

struct GEvalConfig {
    llm::StageModel judge{llm::kDefaultModel, 1.0, 2};
    std::size_t n_samples = 5;
};

const std::string& metric_rubric(Metric m);

llm::ChatRequest geval_request(Metric metric, const std::string& artifact_text, const JudgeContext& context,
                               std::size_t sample, const GEvalConfig& config);

// Integer score from the judge's final "Score: N" line.
std::optional<int> parse_score(const std::string& reply);

// Probability-weighted score from the log-probabilities at the score token:
// sum of s * p(s) over s in 1..4, renormalized over those four tokens. Empty
// when no score token with alternatives is present.
std::optional<double> weighted_score(const std::vector<llm::TokenScore>& tokens);

// One judge call with log-probabilities requested. When the provider returns
// them the score is probability-weighted (n_samples = 1); otherwise the call
// counts as the first of n_samples independent integer scores whose mean is
// the raw score.
MetricScore g_eval_score(Metric metric, const std::string& artifact_text, const JudgeContext& context,
                         llm::Gateway& gateway, const GEvalConfig& config);

nlohmann::ordered_json to_json(const MetricScore& s);
nlohmann::ordered_json to_json(const LiftReport& r);

// Aligned plain-text table: metric, baseline, candidate, lift.
std::string lift_table(const LiftReport& r);

} // namespace d2d::eval
