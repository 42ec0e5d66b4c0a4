#pragma once

#include "d2d/ingest/table.hpp"
#include "d2d/profile/inference.hpp"
#include "d2d/profile/profile.hpp"
#include "d2d/semantics/semantics.hpp"

#include "test_util.hpp"

namespace d2d::testing {

inline std::filesystem::path sample_csv() { return source_dir() / "data/sample/marketing_customers.csv"; }

inline const profile::TypedTable& sample_table()
{
    static const auto t = profile::type_table(ingest::load_table(sample_csv()));
    return t;
}

inline const profile::TableProfile& sample_profile()
{
    static const auto p = profile::build_profile(sample_table());
    return p;
}

inline const nlohmann::json& sample_responses()
{
    static const auto j = nlohmann::json::parse(read_file(source_dir() / "tests/fixtures/sample_responses.json"));
    return j;
}

inline semantics::DomainFinding sample_domain()
{
    semantics::DomainFinding d;
    const auto& f = sample_responses()["domain/finding"];
    d.label = f["label"];
    d.definition = f["definition"];
    d.rationale = f["rationale"];
    return d;
}

inline semantics::ConceptSet sample_concepts()
{
    semantics::ConceptSet c;
    c.domain_label = sample_domain().label;
    for (const auto& j : sample_responses()["concepts"]["concepts"]) {
        c.concepts.push_back({j["phrase"], j["linked_columns"].get<std::vector<std::string>>(), j["rationale"]});
    }
    return c;
}

} // namespace d2d::testing
