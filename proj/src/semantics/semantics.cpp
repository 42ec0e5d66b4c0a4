#include "d2d/semantics/semantics.hpp"

#include "d2d/common/text.hpp"
#include "d2d/llm/structured.hpp"
#include "d2d/profile/profile.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace d2d::semantics {

using nlohmann::json;
using nlohmann::ordered_json;

StubKnowledge::StubKnowledge(const json& terms)
{
    if (!terms.is_object()) {
        throw ConfigError("knowledge file must be a JSON object mapping terms to snippets");
    }
    for (const auto& [term, snippet] : terms.items()) {
        if (!snippet.is_string()) {
            throw ConfigError("knowledge entry '" + term + "' must be a string");
        }
        entries_[text::to_lower(text::trim(term))] = snippet.get<std::string>();
    }
}

StubKnowledge StubKnowledge::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open knowledge file " + path.string());
    }
    try {
        return StubKnowledge(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("knowledge file " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::optional<std::string> StubKnowledge::lookup(const std::string& term) const
{
    auto it = entries_.find(text::to_lower(text::trim(term)));
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const jsonschema::JsonSchema& terms_schema()
{
    static const jsonschema::JsonSchema schema(json::parse(R"({
        "type": "object",
        "required": ["terms"],
        "properties": {
            "terms": {
                "type": "array",
                "minItems": 1,
                "maxItems": 5,
                "items": {"type": "string", "minLength": 1}
            }
        }
    })"));
    return schema;
}

const jsonschema::JsonSchema& domain_schema()
{
    // label: one to six words; definition: a single sentence with one final terminator
    static const jsonschema::JsonSchema schema(json::parse(R"({
        "type": "object",
        "required": ["label", "definition", "rationale"],
        "properties": {
            "label": {"type": "string", "pattern": "^\\S+( \\S+){0,5}$"},
            "definition": {"type": "string", "pattern": "^(?=\\S)(?:[^.!?]|[.!?](?![\\s.!?]|$))+[.!?]$"},
            "rationale": {"type": "string", "minLength": 1}
        }
    })"));
    return schema;
}

const jsonschema::JsonSchema& concepts_schema()
{
    static const jsonschema::JsonSchema schema(json::parse(R"({
        "type": "object",
        "required": ["concepts"],
        "properties": {
            "concepts": {
                "type": "array",
                "minItems": 3,
                "maxItems": 12,
                "items": {
                    "type": "object",
                    "required": ["phrase", "linked_columns", "rationale"],
                    "properties": {
                        "phrase": {"type": "string", "pattern": "\\S"},
                        "linked_columns": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                        "rationale": {"type": "string", "minLength": 1}
                    }
                }
            }
        }
    })"));
    return schema;
}

namespace {

const char* kAnalystSystem =
    "You are a business analyst who identifies what kind of organisation and process produced a dataset.";

llm::ChatRequest base_request(const llm::StageModel& model, const char* tag)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = tag;
    return req;
}

llm::StructuredOptions options_for(const llm::StageModel& model)
{
    llm::StructuredOptions o;
    o.max_repairs = model.max_repairs;
    return o;
}

} // namespace

llm::ChatRequest domain_terms_request(const profile::TableProfile& profile, const llm::StageModel& model)
{
    auto req = base_request(model, kTermsSchemaTag);
    req.messages.push_back({llm::Role::system, kAnalystSystem});
    std::string user = "Statistical profile of the table:\n\n" + profile::synopsis(profile) +
                       "\nBefore naming the business domain, list up to five short terms (industry names, "
                       "processes or metrics suggested by the columns) that you would like to look up in a "
                       "reference encyclopedia.\n\n" +
                       llm::schema_instructions(terms_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

std::string knowledge_turn(const std::vector<KnowledgeSnippet>& snippets)
{
    std::string s;
    if (snippets.empty()) {
        s = "The reference lookup found nothing for those terms.\n";
    } else {
        s = "Reference notes for your terms:\n";
        for (const auto& k : snippets) {
            s += "- " + k.term + ": " + k.snippet + "\n";
        }
    }
    s += "\nNow state the business domain of the table. Give a free-form label of one to six words, a definition "
         "that is exactly one sentence, and a short rationale that cites the columns you relied on.\n\n" +
         llm::schema_instructions(domain_schema());
    return s;
}

std::vector<KnowledgeSnippet> gather_snippets(const std::vector<std::string>& terms, const KnowledgeSource& ks)
{
    std::vector<KnowledgeSnippet> out;
    std::set<std::string> seen;
    for (const auto& raw : terms) {
        if (out.size() >= kMaxSnippets) {
            break;
        }
        const auto term = std::string(text::trim(raw));
        if (term.empty() || !seen.insert(text::to_lower(term)).second) {
            continue;
        }
        if (auto snippet = ks.lookup(term)) {
            out.push_back({term, *snippet});
        }
    }
    return out;
}

DomainFinding detect_domain(const profile::TableProfile& profile, const KnowledgeSource& ks, llm::Gateway& gateway,
                            const llm::StageModel& model)
{
    if (profile.columns.empty()) {
        throw std::invalid_argument("domain detection needs a profile with at least one column");
    }
    const auto opts = options_for(model);
    const auto proposal = llm::complete_structured(gateway, domain_terms_request(profile, model), terms_schema(), opts);
    std::vector<std::string> terms;
    for (const auto& t : proposal.value["terms"]) {
        terms.push_back(t.get<std::string>());
    }
    DomainFinding finding;
    finding.knowledge_snippets_used = gather_snippets(terms, ks);

    auto req = proposal.request;
    req.schema_tag = kDomainSchemaTag;
    req.messages.push_back({llm::Role::assistant, proposal.response.text});
    req.messages.push_back({llm::Role::user, knowledge_turn(finding.knowledge_snippets_used)});
    const auto answer = llm::complete_structured(gateway, req, domain_schema(), opts);
    finding.label = answer.value["label"].get<std::string>();
    finding.definition = answer.value["definition"].get<std::string>();
    finding.rationale = answer.value["rationale"].get<std::string>();
    return finding;
}

llm::ChatRequest concepts_request(const DomainFinding& domain, const profile::TableProfile& profile,
                                  const llm::StageModel& model)
{
    auto req = base_request(model, kConceptsSchemaTag);
    req.messages.push_back({llm::Role::system, kAnalystSystem});
    std::string user = "Domain: " + domain.label + "\nDefinition: " + domain.definition +
                       "\n\nStatistical profile of the table:\n\n" + profile::synopsis(profile) +
                       "\nList between 3 and 12 domain concepts that an analyst of this business would track with "
                       "this table. Write each as a natural-language phrase (for example \"customer lifetime "
                       "value\"), link it to the exact column names it depends on, and explain in one sentence why "
                       "it matters. Use only column names that appear in the profile.\n\n" +
                       llm::schema_instructions(concepts_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

std::vector<Concept> sanitize_concepts(const json& raw, const profile::TableProfile& profile, Warnings& warnings)
{
    std::map<std::string, std::string> canonical;
    for (const auto& c : profile.columns) {
        canonical.emplace(text::to_lower(c.name), c.name);
    }
    std::vector<Concept> out;
    std::set<std::string> phrases;
    for (const auto& item : raw) {
        Concept c;
        c.phrase = std::string(text::trim(item["phrase"].get<std::string>()));
        c.rationale = item["rationale"].get<std::string>();
        std::vector<std::string> unknown;
        for (const auto& col : item["linked_columns"]) {
            const auto name = col.get<std::string>();
            auto it = canonical.find(text::to_lower(text::trim(name)));
            if (it == canonical.end()) {
                unknown.push_back(name);
            } else if (std::find(c.linked_columns.begin(), c.linked_columns.end(), it->second) == c.linked_columns.end()) {
                c.linked_columns.push_back(it->second);
            }
        }
        if (!unknown.empty()) {
            warnings.add("concepts", "dropped concept '" + c.phrase + "': unknown column(s) " + text::join(unknown, ", "));
            continue;
        }
        if (!phrases.insert(text::to_lower(c.phrase)).second) {
            warnings.add("concepts", "dropped duplicate concept '" + c.phrase + "'");
            continue;
        }
        out.push_back(std::move(c));
    }
    return out;
}

ConceptSet extract_concepts(const DomainFinding& domain, const profile::TableProfile& profile, llm::Gateway& gateway,
                            const llm::StageModel& model, Warnings& warnings)
{
    const auto opts = options_for(model);
    auto result = llm::complete_structured(gateway, concepts_request(domain, profile, model), concepts_schema(), opts);
    auto concepts = sanitize_concepts(result.value["concepts"], profile, warnings);
    if (concepts.size() < kMinConcepts) {
        const std::vector<std::string> problems{
            "only " + std::to_string(concepts.size()) +
            " concepts remain after removing duplicates and concepts that cite columns missing from the profile; "
            "provide at least 3 distinct concepts linked to existing columns"};
        result = llm::complete_structured(gateway, llm::with_repair_turn(result, problems), concepts_schema(), opts);
        concepts = sanitize_concepts(result.value["concepts"], profile, warnings);
        if (concepts.size() < kMinConcepts) {
            throw ConceptValidationError("only " + std::to_string(concepts.size()) +
                                         " valid concepts after the repair cycle (need at least 3)");
        }
    }
    return {std::move(concepts), domain.label};
}

ordered_json to_json(const DomainFinding& d)
{
    ordered_json j;
    j["label"] = d.label;
    j["definition"] = d.definition;
    j["rationale"] = d.rationale;
    j["knowledge_snippets_used"] = ordered_json::array();
    for (const auto& k : d.knowledge_snippets_used) {
        j["knowledge_snippets_used"].push_back({{"term", k.term}, {"snippet", k.snippet}});
    }
    return j;
}

DomainFinding domain_from_json(const json& j)
{
    DomainFinding d;
    d.label = j.at("label").get<std::string>();
    d.definition = j.at("definition").get<std::string>();
    d.rationale = j.value("rationale", std::string());
    for (const auto& k : j.value("knowledge_snippets_used", json::array())) {
        d.knowledge_snippets_used.push_back({k.at("term").get<std::string>(), k.at("snippet").get<std::string>()});
    }
    return d;
}

ordered_json to_json(const ConceptSet& c)
{
    ordered_json j;
    j["domain"] = c.domain_label;
    j["concepts"] = ordered_json::array();
    for (const auto& k : c.concepts) {
        j["concepts"].push_back({{"phrase", k.phrase}, {"linked_columns", k.linked_columns}, {"rationale", k.rationale}});
    }
    return j;
}

ConceptSet concepts_from_json(const json& j)
{
    ConceptSet c;
    c.domain_label = j.value("domain", std::string());
    for (const auto& k : j.at("concepts")) {
        c.concepts.push_back({k.at("phrase").get<std::string>(), k.at("linked_columns").get<std::vector<std::string>>(),
                              k.value("rationale", std::string())});
    }
    return c;
}

std::string concepts_digest(const ConceptSet& c)
{
    std::string s;
    for (const auto& k : c.concepts) {
        s += "- " + k.phrase + " [" + text::join(k.linked_columns, ", ") + "]\n";
    }
    return s;
}

} // namespace d2d::semantics
