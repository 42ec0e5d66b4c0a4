#pragma once

#include "d2d/common/diagnostics.hpp"
#include "d2d/common/error.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"
#include "d2d/profile/types.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace d2d::semantics {

class ConceptValidationError : public Error {
public:
    using Error::Error;
};

struct KnowledgeSnippet {
    std::string term;
    std::string snippet;

    bool operator==(const KnowledgeSnippet&) const = default;
};

struct DomainFinding {
    std::string label;
    std::string definition;
    std::string rationale;
    std::vector<KnowledgeSnippet> knowledge_snippets_used;
};

struct Concept {
    std::string phrase;
    std::vector<std::string> linked_columns;
    std::string rationale;
};

struct ConceptSet {
    std::vector<Concept> concepts;
    std::string domain_label;
};

class KnowledgeSource {
public:
    virtual ~KnowledgeSource() = default;
    virtual std::optional<std::string> lookup(const std::string& term) const = 0;
};

class EmptyKnowledge : public KnowledgeSource {
public:
    std::optional<std::string> lookup(const std::string&) const override { return std::nullopt; }
};

// Offline term -> snippet map loaded from a JSON object. Lookups ignore case
// and surrounding whitespace.
class StubKnowledge : public KnowledgeSource {
public:
    explicit StubKnowledge(const nlohmann::json& terms);
    static StubKnowledge from_file(const std::filesystem::path& path);

    std::optional<std::string> lookup(const std::string& term) const override;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;
};

inline constexpr std::size_t kMaxSnippets = 3;
inline constexpr std::size_t kMinConcepts = 3;
inline constexpr std::size_t kMaxConcepts = 12;
inline constexpr const char* kTermsSchemaTag = "domain/terms";
inline constexpr const char* kDomainSchemaTag = "domain/finding";
inline constexpr const char* kConceptsSchemaTag = "concepts";

const jsonschema::JsonSchema& terms_schema();
const jsonschema::JsonSchema& domain_schema();
const jsonschema::JsonSchema& concepts_schema();

llm::ChatRequest domain_terms_request(const profile::TableProfile& profile, const llm::StageModel& model);
std::string knowledge_turn(const std::vector<KnowledgeSnippet>& snippets);
llm::ChatRequest concepts_request(const DomainFinding& domain, const profile::TableProfile& profile,
                                  const llm::StageModel& model);

// Collects up to kMaxSnippets snippets for the proposed terms, in order,
// skipping repeated terms.
std::vector<KnowledgeSnippet> gather_snippets(const std::vector<std::string>& terms, const KnowledgeSource& ks);

// Two turns: the model proposes lookup terms, receives the snippets found for
// them, then answers with the domain label and definition.
DomainFinding detect_domain(const profile::TableProfile& profile, const KnowledgeSource& ks, llm::Gateway& gateway,
                            const llm::StageModel& model);

// Maps raw model concepts onto the profile: column names are matched without
// regard to case, concepts citing unknown columns are dropped and repeated
// phrases collapse to the first occurrence. Every drop adds a warning.
std::vector<Concept> sanitize_concepts(const nlohmann::json& raw, const profile::TableProfile& profile,
                                       Warnings& warnings);

ConceptSet extract_concepts(const DomainFinding& domain, const profile::TableProfile& profile, llm::Gateway& gateway,
                            const llm::StageModel& model, Warnings& warnings);

nlohmann::ordered_json to_json(const DomainFinding& d);
DomainFinding domain_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ConceptSet& c);
ConceptSet concepts_from_json(const nlohmann::json& j);

// One line per concept, used by downstream prompts.
std::string concepts_digest(const ConceptSet& c);

} // namespace d2d::semantics
