#include "d2d/reflexion/types.hpp"

#include "d2d/common/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace d2d::reflexion {

std::string to_string(Dimension d)
{
    switch (d) {
    case Dimension::domain_accuracy: return "domain_accuracy";
    case Dimension::concept_quality: return "concept_quality";
    case Dimension::insightfulness: return "insightfulness";
    case Dimension::novelty: return "novelty";
    case Dimension::depth: return "depth";
    }
    return "depth";
}

std::optional<Dimension> dimension_from_string(const std::string& s)
{
    for (auto d : kDimensions) {
        if (to_string(d) == s) {
            return d;
        }
    }
    return std::nullopt;
}

int EvaluationReport::min_score() const
{
    return *std::min_element(scores.begin(), scores.end());
}

double EvaluationReport::mean_score() const
{
    int sum = 0;
    for (int s : scores) {
        sum += s;
    }
    return static_cast<double>(sum) / static_cast<double>(scores.size());
}

std::vector<Dimension> EvaluationReport::below(int threshold) const
{
    std::vector<Dimension> out;
    for (auto d : kDimensions) {
        if (score(d) < threshold) {
            out.push_back(d);
        }
    }
    return out;
}

void EvaluationReport::check() const
{
    for (auto d : kDimensions) {
        if (score(d) < 1 || score(d) > 4) {
            throw std::invalid_argument(to_string(d) + " score " + std::to_string(score(d)) + " is outside 1..4");
        }
        if (text::trim(justification(d)).empty()) {
            throw std::invalid_argument(to_string(d) + " has no justification");
        }
    }
}

nlohmann::ordered_json to_json(const EvaluationReport& r)
{
    nlohmann::ordered_json j;
    j["scores"] = nlohmann::ordered_json::object();
    j["justifications"] = nlohmann::ordered_json::object();
    for (auto d : kDimensions) {
        j["scores"][to_string(d)] = r.score(d);
        j["justifications"][to_string(d)] = r.justification(d);
    }
    j["mean_score"] = r.mean_score();
    return j;
}

EvaluationReport report_from_json(const nlohmann::json& j)
{
    EvaluationReport r;
    for (auto d : kDimensions) {
        const auto i = static_cast<std::size_t>(d);
        r.scores[i] = j.at("scores").at(to_string(d)).get<int>();
        r.justifications[i] = j.at("justifications").at(to_string(d)).get<std::string>();
    }
    return r;
}

std::string score_line(const EvaluationReport& r)
{
    std::vector<std::string> parts;
    for (auto d : kDimensions) {
        parts.push_back(to_string(d) + " " + std::to_string(r.score(d)));
    }
    return text::join(parts, ", ");
}

} // namespace d2d::reflexion
