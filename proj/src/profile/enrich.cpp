#include "d2d/profile/enrich.hpp"

#include "d2d/llm/structured.hpp"
#include "d2d/profile/profile.hpp"

namespace d2d::profile {

using nlohmann::json;

const jsonschema::JsonSchema& narrative_schema()
{
    static const jsonschema::JsonSchema schema(json::parse(R"({
        "type": "object",
        "required": ["readings", "chosen", "narrative"],
        "properties": {
            "readings": {
                "type": "array",
                "minItems": 2,
                "items": {
                    "type": "object",
                    "required": ["reading", "critique"],
                    "properties": {
                        "reading": {"type": "string", "minLength": 1},
                        "critique": {"type": "string", "minLength": 1}
                    }
                }
            },
            "chosen": {"type": "integer", "minimum": 1},
            "narrative": {"type": "string", "pattern": "\\S"}
        }
    })"));
    return schema;
}

llm::ChatRequest narrative_request(const TableProfile& profile, const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = kNarrativeSchemaTag;
    req.messages.push_back({llm::Role::system,
                            "You are a senior data analyst. You read statistical profiles of business tables and "
                            "explain what the data is about."});
    std::string user = "Statistical profile of the table:\n\n" + synopsis(profile) +
                       "\nReason in three steps before answering.\n"
                       "1. Propose at least two different readings of what the table records: the business process, "
                       "the entity one row stands for, and who would use it.\n"
                       "2. Check each reading against the profile. Name the column types, ranges, units, "
                       "dependencies and keys that support it or speak against it.\n"
                       "3. Commit to the reading that survives best (its 1-based position goes in \"chosen\") and "
                       "write it up in \"narrative\" as two to four plain sentences covering the subject, the row "
                       "grain and the most informative columns.\n\n";
    user += llm::schema_instructions(narrative_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

TableProfile enrich_profile(const TableProfile& profile, llm::Gateway& gateway, const llm::StageModel& model,
                            Warnings& warnings)
{
    llm::StructuredOptions options;
    options.max_repairs = model.max_repairs;
    options.check = [](const json& v) {
        std::vector<std::string> errors;
        if (v["chosen"].get<std::size_t>() > v["readings"].size()) {
            errors.push_back("/chosen: must point at one of the proposed readings (1.." +
                             std::to_string(v["readings"].size()) + ")");
        }
        return errors;
    };
    try {
        const auto result = llm::complete_structured(gateway, narrative_request(profile, model), narrative_schema(), options);
        auto enriched = profile;
        enriched.narrative = result.value["narrative"].get<std::string>();
        return enriched;
    } catch (const llm::StructuredOutputError& e) {
        warnings.add("enrich", std::string("narrative left empty: ") + e.what());
        return profile;
    }
}

} // namespace d2d::profile
