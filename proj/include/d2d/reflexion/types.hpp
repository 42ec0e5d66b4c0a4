#pragma once

#include "json.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace d2d::reflexion {

enum class Dimension { domain_accuracy, concept_quality, insightfulness, novelty, depth };

inline constexpr std::array<Dimension, 5> kDimensions{Dimension::domain_accuracy, Dimension::concept_quality,
                                                      Dimension::insightfulness, Dimension::novelty,
                                                      Dimension::depth};

std::string to_string(Dimension d);
std::optional<Dimension> dimension_from_string(const std::string& s);

struct EvaluationReport {
    std::array<int, 5> scores{}; // indexed by Dimension
    std::array<std::string, 5> justifications;

    int score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }
    const std::string& justification(Dimension d) const { return justifications[static_cast<std::size_t>(d)]; }
    int min_score() const;
    double mean_score() const;
    // Dimensions scoring below threshold, in canonical order.
    std::vector<Dimension> below(int threshold) const;
    // Throws std::invalid_argument when a score is outside 1..4 or a justification is blank.
    void check() const;
};

struct MemoryEntry {
    std::size_t iteration = 0;
    std::string bundle_digest;
    EvaluationReport report;
    std::string reflection; // empty for an iteration that ended the loop
};

struct ReflectionMemory {
    std::vector<MemoryEntry> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
};

nlohmann::ordered_json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

// "domain_accuracy 3, concept_quality 4, ..." in canonical order.
std::string score_line(const EvaluationReport& r);

} // namespace d2d::reflexion
