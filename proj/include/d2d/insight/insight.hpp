#pragma once

#include "d2d/common/diagnostics.hpp"
#include "d2d/common/error.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"
#include "d2d/profile/types.hpp"
#include "d2d/reflexion/types.hpp"
#include "d2d/semantics/semantics.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace d2d::insight {

class InsightValidationError : public Error {
public:
    using Error::Error;
};

enum class Lens { descriptive, predictive, domain_related };

// Bucket order inside bundles and artifacts.
inline constexpr std::array<Lens, 3> kLenses{Lens::descriptive, Lens::predictive, Lens::domain_related};

std::string to_string(Lens l);
std::optional<Lens> lens_from_string(const std::string& s);

enum class EvidenceKind { column, concept_phrase };

struct Evidence {
    EvidenceKind kind = EvidenceKind::column;
    std::string ref;
    std::string statistic;
};

struct Insight {
    Lens lens = Lens::descriptive;
    std::string statement;
    std::vector<Evidence> evidence;
    std::optional<std::string> viz_hint;
};

inline constexpr std::size_t kMaxPerLens = 5;
inline constexpr std::size_t kMaxInsights = 12;
inline constexpr const char* kAnalysisSchemaTag = "analysis";

struct InsightBundle {
    std::size_t iteration = 0;
    std::vector<Insight> descriptive;
    std::vector<Insight> predictive;
    std::vector<Insight> domain_related;

    std::vector<Insight>& bucket(Lens l);
    const std::vector<Insight>& bucket(Lens l) const;
    std::size_t total() const { return descriptive.size() + predictive.size() + domain_related.size(); }
};

struct InsightRef {
    Lens lens;
    std::size_t index;

    bool operator==(const InsightRef&) const = default;
};

const jsonschema::JsonSchema& analysis_schema();

// Prompt text is a pure function of its inputs.
llm::ChatRequest analysis_request(const profile::TableProfile& profile, const semantics::DomainFinding& domain,
                                  const semantics::ConceptSet& concepts, const reflexion::ReflectionMemory& memory,
                                  const llm::StageModel& model);

// Converts a schema-valid reply into a bundle: resolves evidence references,
// drops unresolvable ones, caps each lens at five and the total at twelve.
// Every adjustment adds a warning.
InsightBundle sanitize_bundle(const nlohmann::json& raw, std::size_t iteration, const profile::TableProfile& profile,
                              const semantics::ConceptSet& concepts, Warnings& warnings);

InsightBundle generate_analysis(const profile::TableProfile& profile, const semantics::DomainFinding& domain,
                                const semantics::ConceptSet& concepts, const reflexion::ReflectionMemory& memory,
                                std::size_t iteration, llm::Gateway& gateway, const llm::StageModel& model,
                                Warnings& warnings);

// One line summarizing a bundle for reflection memory.
std::string bundle_digest(const InsightBundle& bundle);

// Plain-text listing of every insight, used by the evaluator and reflector.
std::string render_bundle(const InsightBundle& bundle);

nlohmann::ordered_json to_json(const Insight& i);
nlohmann::ordered_json to_json(const InsightBundle& b);
InsightBundle bundle_from_json(const nlohmann::json& j);

const Insight& resolve(const InsightBundle& b, const InsightRef& ref);

} // namespace d2d::insight
