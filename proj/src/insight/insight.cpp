#include "d2d/insight/insight.hpp"

#include "d2d/common/text.hpp"
#include "d2d/llm/structured.hpp"
#include "d2d/profile/profile.hpp"

#include <map>
#include <stdexcept>

namespace d2d::insight {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Lens l)
{
    switch (l) {
    case Lens::descriptive: return "descriptive";
    case Lens::predictive: return "predictive";
    case Lens::domain_related: return "domain_related";
    }
    return "descriptive";
}

std::optional<Lens> lens_from_string(const std::string& s)
{
    for (auto l : kLenses) {
        if (to_string(l) == s) {
            return l;
        }
    }
    return std::nullopt;
}

std::vector<Insight>& InsightBundle::bucket(Lens l)
{
    switch (l) {
    case Lens::descriptive: return descriptive;
    case Lens::predictive: return predictive;
    case Lens::domain_related: return domain_related;
    }
    return descriptive;
}

const std::vector<Insight>& InsightBundle::bucket(Lens l) const
{
    return const_cast<InsightBundle*>(this)->bucket(l);
}

const Insight& resolve(const InsightBundle& b, const InsightRef& ref)
{
    const auto& items = b.bucket(ref.lens);
    if (ref.index >= items.size()) {
        throw std::out_of_range("insight reference " + to_string(ref.lens) + "[" + std::to_string(ref.index) +
                                "] is out of range");
    }
    return items[ref.index];
}

const jsonschema::JsonSchema& analysis_schema()
{
    static const jsonschema::JsonSchema schema(json::parse(R"({
        "type": "object",
        "required": ["descriptive", "predictive", "domain_related"],
        "definitions": {
            "insight": {
                "type": "object",
                "required": ["statement", "evidence"],
                "properties": {
                    "statement": {"type": "string", "pattern": "\\S"},
                    "evidence": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind", "ref", "statistic"],
                            "properties": {
                                "kind": {"enum": ["column", "concept"]},
                                "ref": {"type": "string", "minLength": 1},
                                "statistic": {"type": "string"}
                            }
                        }
                    },
                    "viz_hint": {"type": ["string", "null"]}
                }
            },
            "bucket": {"type": "array", "items": {"$ref": "#/definitions/insight"}}
        },
        "properties": {
            "descriptive": {"$ref": "#/definitions/bucket"},
            "predictive": {"$ref": "#/definitions/bucket"},
            "domain_related": {"$ref": "#/definitions/bucket"}
        }
    })"));
    return schema;
}

std::string bundle_digest(const InsightBundle& bundle)
{
    std::vector<std::string> statements;
    for (auto l : kLenses) {
        for (const auto& i : bundle.bucket(l)) {
            statements.push_back(i.statement);
        }
    }
    const auto line = std::to_string(bundle.descriptive.size()) + " descriptive, " +
                      std::to_string(bundle.predictive.size()) + " predictive, " +
                      std::to_string(bundle.domain_related.size()) + " domain-related; " +
                      text::join(statements, " | ");
    // 397 + the 3-character marker keeps the digest within 400 code points
    auto digest = text::truncate_with_marker(line, 397, "...");
    for (auto& c : digest) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return digest;
}

std::string render_bundle(const InsightBundle& bundle)
{
    std::string s;
    for (auto l : kLenses) {
        s += to_string(l) + " insights:\n";
        const auto& items = bundle.bucket(l);
        for (std::size_t i = 0; i < items.size(); ++i) {
            s += std::to_string(i + 1) + ". " + items[i].statement + "\n";
            for (const auto& e : items[i].evidence) {
                s += "   evidence (" + std::string(e.kind == EvidenceKind::column ? "column" : "concept") + " " + e.ref +
                     "): " + e.statistic + "\n";
            }
        }
    }
    return s;
}

llm::ChatRequest analysis_request(const profile::TableProfile& profile, const semantics::DomainFinding& domain,
                                  const semantics::ConceptSet& concepts, const reflexion::ReflectionMemory& memory,
                                  const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = kAnalysisSchemaTag;
    req.messages.push_back({llm::Role::system,
                            "You are a senior data analyst who turns table profiles into business insights. You "
                            "form hypotheses the way an experienced analyst would and back each one with evidence "
                            "from the profile."});
    std::string user;
    user += "Domain: " + domain.label + "\nDefinition: " + domain.definition + "\n\n";
    user += "Domain concepts:\n" + semantics::concepts_digest(concepts) + "\n";
    user += "Statistical profile of the table:\n\n" + profile::synopsis(profile) + "\n";
    if (!memory.empty()) {
        user += "Your previous attempts were reviewed. Latest reflection:\n" + memory.entries.back().reflection + "\n\n";
        user += "Earlier attempts:\n";
        for (const auto& e : memory.entries) {
            user += "- iteration " + std::to_string(e.iteration) + " [" + reflexion::score_line(e.report) + "]: " +
                    e.bundle_digest + "\n";
        }
        user += "\nUse the reflection to improve on those attempts rather than repeating them.\n\n";
    }
    user += "Write insights under three lenses:\n"
            "- descriptive: what the data shows now, such as distributions, segments, concentrations and outliers.\n"
            "- predictive: trends, drivers and likely outcomes the data points to.\n"
            "- domain_related: what the findings mean for the business, framed through the domain concepts.\n"
            "Give 1 to 5 insights per lens and at most 12 in total. Prefer findings a specialist would not already "
            "take for granted: relate columns to each other, quantify differences and say why they matter, "
            "instead of restating single summary numbers.\n"
            "Every insight cites evidence: kind \"column\" with an exact column name from the profile, or kind "
            "\"concept\" with a concept phrase from the list, plus the statistic that supports the claim. "
            "Optionally add viz_hint naming a chart that would show the insight (bar, stacked bar, line, "
            "scatter, box, heatmap or pie).\n\n";
    user += llm::schema_instructions(analysis_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

InsightBundle sanitize_bundle(const json& raw, std::size_t iteration, const profile::TableProfile& profile,
                              const semantics::ConceptSet& concepts, Warnings& warnings)
{
    std::map<std::string, std::string> columns;
    for (const auto& c : profile.columns) {
        columns.emplace(text::to_lower(c.name), c.name);
    }
    std::map<std::string, std::string> phrases;
    for (const auto& c : concepts.concepts) {
        phrases.emplace(text::to_lower(c.phrase), c.phrase);
    }

    InsightBundle bundle;
    bundle.iteration = iteration;
    for (auto lens : kLenses) {
        const auto& items = raw.at(to_string(lens));
        auto& bucket = bundle.bucket(lens);
        for (const auto& item : items) {
            if (bucket.size() == kMaxPerLens) {
                warnings.add("analysis", to_string(lens) + " lens returned " + std::to_string(items.size()) +
                                             " insights; kept the first " + std::to_string(kMaxPerLens));
                break;
            }
            Insight ins;
            ins.lens = lens;
            ins.statement = std::string(text::trim(item["statement"].get<std::string>()));
            if (item.contains("viz_hint") && item["viz_hint"].is_string() &&
                !text::trim(item["viz_hint"].get<std::string>()).empty()) {
                ins.viz_hint = item["viz_hint"].get<std::string>();
            }
            for (const auto& ev : item["evidence"]) {
                const bool is_column = ev["kind"] == "column";
                const auto& table = is_column ? columns : phrases;
                const auto ref = ev["ref"].get<std::string>();
                auto it = table.find(text::to_lower(text::trim(ref)));
                if (it == table.end()) {
                    warnings.add("analysis", "dropped evidence citing unknown " +
                                                 std::string(is_column ? "column" : "concept") + " '" + ref +
                                                 "' in " + to_string(lens) + " insight");
                    continue;
                }
                ins.evidence.push_back({is_column ? EvidenceKind::column : EvidenceKind::concept_phrase, it->second,
                                        ev["statistic"].get<std::string>()});
            }
            bucket.push_back(std::move(ins));
        }
    }
    // trim the fullest lens first; on ties predictive goes before descriptive, domain_related last
    while (bundle.total() > kMaxInsights) {
        Lens victim = Lens::predictive;
        for (auto l : {Lens::descriptive, Lens::domain_related}) {
            if (bundle.bucket(l).size() > bundle.bucket(victim).size()) {
                victim = l;
            }
        }
        bundle.bucket(victim).pop_back();
        warnings.add("analysis", "dropped the last " + to_string(victim) + " insight to stay within " +
                                     std::to_string(kMaxInsights) + " insights");
    }
    return bundle;
}

namespace {

std::vector<std::string> empty_lenses(const InsightBundle& b)
{
    std::vector<std::string> out;
    for (auto l : kLenses) {
        if (b.bucket(l).empty()) {
            out.push_back(to_string(l));
        }
    }
    return out;
}

} // namespace

InsightBundle generate_analysis(const profile::TableProfile& profile, const semantics::DomainFinding& domain,
                                const semantics::ConceptSet& concepts, const reflexion::ReflectionMemory& memory,
                                std::size_t iteration, llm::Gateway& gateway, const llm::StageModel& model,
                                Warnings& warnings)
{
    llm::StructuredOptions opts;
    opts.max_repairs = model.max_repairs;
    const auto req = analysis_request(profile, domain, concepts, memory, model);
    auto result = llm::complete_structured(gateway, req, analysis_schema(), opts);
    auto bundle = sanitize_bundle(result.value, iteration, profile, concepts, warnings);
    if (auto missing = empty_lenses(bundle); !missing.empty()) {
        const std::vector<std::string> problems{"these lenses have no insights: " + text::join(missing, ", ") +
                                                "; every lens needs between 1 and 5 insights"};
        result = llm::complete_structured(gateway, llm::with_repair_turn(result, problems), analysis_schema(), opts);
        bundle = sanitize_bundle(result.value, iteration, profile, concepts, warnings);
        if (missing = empty_lenses(bundle); !missing.empty()) {
            throw InsightValidationError("insight lenses still empty after the repair cycle: " + text::join(missing, ", "));
        }
    }
    return bundle;
}

ordered_json to_json(const Insight& i)
{
    ordered_json j;
    j["lens"] = to_string(i.lens);
    j["statement"] = i.statement;
    j["evidence"] = ordered_json::array();
    for (const auto& e : i.evidence) {
        j["evidence"].push_back({{"kind", e.kind == EvidenceKind::column ? "column" : "concept"},
                                 {"ref", e.ref},
                                 {"statistic", e.statistic}});
    }
    j["viz_hint"] = i.viz_hint ? ordered_json(*i.viz_hint) : ordered_json(nullptr);
    return j;
}

ordered_json to_json(const InsightBundle& b)
{
    ordered_json j;
    j["iteration"] = b.iteration;
    for (auto l : kLenses) {
        j[to_string(l)] = ordered_json::array();
        for (const auto& i : b.bucket(l)) {
            j[to_string(l)].push_back(to_json(i));
        }
    }
    return j;
}

InsightBundle bundle_from_json(const json& j)
{
    InsightBundle b;
    b.iteration = j.value("iteration", std::size_t{0});
    for (auto l : kLenses) {
        for (const auto& ij : j.at(to_string(l))) {
            Insight i;
            i.lens = l;
            if (ij.contains("lens") && ij["lens"] != to_string(l)) {
                throw std::invalid_argument("insight in the " + to_string(l) + " bucket is labelled " +
                                            ij["lens"].get<std::string>());
            }
            i.statement = ij.at("statement").get<std::string>();
            for (const auto& e : ij.value("evidence", json::array())) {
                i.evidence.push_back({e.at("kind") == "concept" ? EvidenceKind::concept_phrase : EvidenceKind::column,
                                      e.at("ref").get<std::string>(), e.value("statistic", std::string())});
            }
            if (ij.contains("viz_hint") && ij["viz_hint"].is_string()) {
                i.viz_hint = ij["viz_hint"].get<std::string>();
            }
            b.bucket(l).push_back(std::move(i));
        }
    }
    return b;
}

} // namespace d2d::insight
