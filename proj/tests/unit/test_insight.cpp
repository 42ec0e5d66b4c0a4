#include "d2d/common/text.hpp"
#include "d2d/insight/insight.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/reflexion/types.hpp"

#include "fake_llm.hpp"
#include "golden.hpp"
#include "sample_data.hpp"

#include <doctest.h>

using namespace d2d;
using namespace d2d::insight;
using d2d::testing::ScriptedTransport;
using nlohmann::json;

namespace {

const llm::StageModel kModel{"test-model", 0.7, 2};

json item(const std::string& statement, const std::string& kind = "column", const std::string& ref = "churned")
{
    return {{"statement", statement}, {"evidence", {{{"kind", kind}, {"ref", ref}, {"statistic", "s"}}}}, {"viz_hint", nullptr}};
}

json bucket(std::size_t n, const std::string& prefix)
{
    json b = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        b.push_back(item(prefix + std::to_string(i)));
    }
    return b;
}

json raw_bundle(std::size_t d, std::size_t p, std::size_t r)
{
    return {{"descriptive", bucket(d, "d")}, {"predictive", bucket(p, "p")}, {"domain_related", bucket(r, "r")}};
}

profile::TableProfile enriched_sample_profile()
{
    auto p = d2d::testing::sample_profile();
    p.narrative = d2d::testing::sample_responses()["profile/narrative"]["narrative"].get<std::string>();
    return p;
}

reflexion::ReflectionMemory sample_memory_after_iteration_0()
{
    const auto& fx = d2d::testing::sample_responses();
    Warnings w;
    const auto b0 = sanitize_bundle(fx["analysis"][0], 0, d2d::testing::sample_profile(), d2d::testing::sample_concepts(), w);
    reflexion::ReflectionMemory m;
    m.entries.push_back({0, bundle_digest(b0), reflexion::report_from_json(fx["evaluation"][0]),
                         fx["reflection"][0].get<std::string>()});
    return m;
}

} // namespace

TEST_CASE("sanitize_bundle canonicalises evidence and drops unknown references")
{
    Warnings w;
    json raw = raw_bundle(1, 1, 1);
    raw["descriptive"][0]["evidence"].push_back({{"kind", "column"}, {"ref", "Monthly_Spend"}, {"statistic", "mean"}});
    raw["descriptive"][0]["evidence"].push_back({{"kind", "column"}, {"ref", "imaginary"}, {"statistic", "x"}});
    raw["domain_related"][0]["evidence"] = {{{"kind", "concept"}, {"ref", "CHURN RATE"}, {"statistic", "29%"}},
                                            {{"kind", "concept"}, {"ref", "made-up idea"}, {"statistic", "?"}}};
    raw["predictive"][0]["viz_hint"] = "   ";
    const auto b = sanitize_bundle(raw, 4, d2d::testing::sample_profile(), d2d::testing::sample_concepts(), w);
    CHECK(b.iteration == 4);
    REQUIRE(b.descriptive[0].evidence.size() == 2);
    CHECK(b.descriptive[0].evidence[1].ref == "monthly_spend");
    REQUIRE(b.domain_related[0].evidence.size() == 1);
    CHECK(b.domain_related[0].evidence[0].kind == EvidenceKind::concept_phrase);
    CHECK(b.domain_related[0].evidence[0].ref == "churn rate");
    CHECK_FALSE(b.predictive[0].viz_hint);
    CHECK(w.contains("unknown column 'imaginary'"));
    CHECK(w.contains("unknown concept 'made-up idea'"));
}

TEST_CASE("sanitize_bundle caps each lens at five")
{
    Warnings w;
    const auto b = sanitize_bundle(raw_bundle(7, 1, 1), 0, d2d::testing::sample_profile(), d2d::testing::sample_concepts(), w);
    CHECK(b.descriptive.size() == kMaxPerLens);
    CHECK(b.descriptive.back().statement == "d4");
    CHECK(w.contains("descriptive lens returned 7 insights; kept the first 5"));
}

TEST_CASE("sanitize_bundle trims to twelve from the fullest lens, predictive first on ties")
{
    Warnings w;
    const auto& prof = d2d::testing::sample_profile();
    const auto cs = d2d::testing::sample_concepts();
    // 5/5/5 = 15: three trims, ties resolved predictive, descriptive, domain_related
    auto b = sanitize_bundle(raw_bundle(5, 5, 5), 0, prof, cs, w);
    CHECK(b.total() == kMaxInsights);
    CHECK(b.descriptive.size() == 4);
    CHECK(b.predictive.size() == 4);
    CHECK(b.domain_related.size() == 4);
    CHECK(b.predictive.back().statement == "p3");

    // 5/5/4 = 14: predictive then descriptive
    b = sanitize_bundle(raw_bundle(5, 5, 4), 0, prof, cs, w);
    CHECK(b.descriptive.size() == 4);
    CHECK(b.predictive.size() == 4);
    CHECK(b.domain_related.size() == 4);

    // 3/5/5 = 13: predictive wins the tie with domain_related
    b = sanitize_bundle(raw_bundle(3, 5, 5), 0, prof, cs, w);
    CHECK(b.predictive.size() == 4);
    CHECK(b.domain_related.size() == 5);
}

TEST_CASE("generate_analysis repairs an empty lens once, then fails")
{
    const auto& prof = d2d::testing::sample_profile();
    const auto dom = d2d::testing::sample_domain();
    const auto cs = d2d::testing::sample_concepts();
    {
        auto t = std::make_shared<ScriptedTransport>(
            std::vector<std::string>{raw_bundle(2, 0, 1).dump(), raw_bundle(2, 1, 1).dump()});
        auto gw = d2d::testing::scripted_gateway(t);
        Warnings w;
        const auto b = generate_analysis(prof, dom, cs, {}, 0, gw, kModel, w);
        CHECK(b.total() == 4);
        CHECK(gw.calls() == 2);
        CHECK(t->requests()[1].messages.back().content.find("these lenses have no insights: predictive") !=
              std::string::npos);
    }
    {
        auto t = std::make_shared<ScriptedTransport>(
            std::vector<std::string>{raw_bundle(2, 0, 1).dump(), raw_bundle(0, 0, 1).dump()});
        auto gw = d2d::testing::scripted_gateway(t);
        Warnings w;
        CHECK_THROWS_AS(generate_analysis(prof, dom, cs, {}, 0, gw, kModel, w), InsightValidationError);
    }
    {
        // evidence pointing only at unknown columns is dropped, but the insight stays
        auto raw = raw_bundle(1, 1, 1);
        raw["predictive"][0]["evidence"][0]["ref"] = "nowhere";
        auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{raw.dump()});
        auto gw = d2d::testing::scripted_gateway(t);
        Warnings w;
        const auto b = generate_analysis(prof, dom, cs, {}, 2, gw, kModel, w);
        CHECK(b.predictive[0].evidence.empty());
        CHECK(b.iteration == 2);
    }
}

TEST_CASE("the first analysis prompt has no memory section")
{
    const auto req = analysis_request(enriched_sample_profile(), d2d::testing::sample_domain(),
                                      d2d::testing::sample_concepts(), {}, kModel);
    const auto& user = req.messages.back().content;
    CHECK(user.find("Latest reflection") == std::string::npos);
    CHECK(user.find("churn rate") != std::string::npos);
    CHECK(req.schema_tag == std::optional<std::string>(kAnalysisSchemaTag));
    CHECK(req.temperature == doctest::Approx(0.7));
}

TEST_CASE("analysis prompt at iteration 1 matches the golden file and the recorded cassette")
{
    const auto memory = sample_memory_after_iteration_0();
    const llm::StageModel model{llm::kDefaultModel, llm::kGenerativeTemperature, 2};
    const auto req = analysis_request(enriched_sample_profile(), d2d::testing::sample_domain(),
                                      d2d::testing::sample_concepts(), memory, model);
    const auto& user = req.messages.back().content;
    CHECK(user.find("Latest reflection:\n" + memory.entries[0].reflection) != std::string::npos);
    CHECK(user.find("- iteration 0 [domain_accuracy 4, concept_quality 3, insightfulness 2, novelty 2, depth 2]") !=
          std::string::npos);
    d2d::testing::check_golden("analysis_prompt_iteration_1.txt", user);

    const auto cassette = llm::Cassette::load(d2d::testing::source_dir() / "tests/cassettes/sample_run.json");
    CHECK(cassette.find(llm::request_fingerprint(req)) != nullptr);
}

TEST_CASE("bundle digest is one bounded line")
{
    InsightBundle b;
    for (int i = 0; i < 5; ++i) {
        b.descriptive.push_back({Lens::descriptive, std::string(150, 'x') + "\nline", {}, std::nullopt});
    }
    const auto d = bundle_digest(b);
    CHECK(d.find('\n') == std::string::npos);
    CHECK(text::utf8_length(d) <= 400);
    CHECK(d.rfind("...") == d.size() - 3);
    CHECK(d.rfind("5 descriptive, 0 predictive, 0 domain-related; ", 0) == 0);
}

TEST_CASE("bundle JSON round-trips and resolves references")
{
    Warnings w;
    const auto b = sanitize_bundle(d2d::testing::sample_responses()["analysis"][2], 2, d2d::testing::sample_profile(),
                                   d2d::testing::sample_concepts(), w);
    CHECK(w.size() == 0);
    const auto back = bundle_from_json(json::parse(to_json(b).dump()));
    CHECK(to_json(back) == to_json(b));
    CHECK(resolve(b, {Lens::predictive, 1}).statement == b.predictive[1].statement);
    CHECK_THROWS(resolve(b, {Lens::predictive, 9}));
    CHECK(render_bundle(b).find(b.domain_related[0].statement) != std::string::npos);
}
