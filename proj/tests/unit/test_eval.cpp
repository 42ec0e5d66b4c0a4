#include "d2d/eval/geval.hpp"
#include "d2d/llm/errors.hpp"

#include "fake_llm.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace d2d;
using eval::Metric;

namespace {

const eval::JudgeContext kContext{"Subscription customer retention", "churn rate -> churned; plan tier -> plan"};
const std::string kArtifact = "Customers on the monthly plan churn at twice the rate of annual subscribers.";

llm::ChatResponse reply(const std::string& text)
{
    llm::ChatResponse r;
    r.text = text;
    return r;
}

// Score token "4" chosen, alternatives 3 and 2; score 1 gets no mass.
llm::ChatResponse weighted_reply()
{
    auto r = reply("The insight ties churn to plan tier.\nScore: 4");
    llm::TokenScore s;
    s.token = "4";
    s.logprob = std::log(0.70);
    s.top = {{"4", std::log(0.70)}, {"3", std::log(0.25)}, {"2", std::log(0.05)}};
    r.token_scores = std::vector<llm::TokenScore>{{"Score", -0.01, {}}, {":", -0.01, {}}, {" ", -0.02, {}}, s};
    return r;
}

} // namespace

TEST_CASE("normalize maps the rubric ends and a midpoint")
{
    CHECK(std::fabs(eval::normalize(1.0) - 0.0) <= 1e-12);
    CHECK(std::fabs(eval::normalize(2.95) - 0.65) <= 1e-12);
    CHECK(std::fabs(eval::normalize(4.0) - 1.0) <= 1e-12);
    CHECK_THROWS_AS(eval::normalize(0.99), eval::RangeError);
    CHECK_THROWS_AS(eval::normalize(4.01), eval::RangeError);
    CHECK_THROWS_AS(eval::normalize(std::nan("")), eval::RangeError);
}

TEST_CASE("lift is relative percentage change rounded half away from zero")
{
    const auto r = eval::compare_reports({{Metric::insightfulness, 0.78}, {Metric::novelty, 0.65}, {Metric::depth, 0.75}},
                                         {{Metric::insightfulness, 0.88}, {Metric::novelty, 0.83}, {Metric::depth, 0.99}});
    REQUIRE(r.entries.size() == 3);
    std::map<Metric, long> got;
    for (const auto& e : r.entries) {
        got[e.metric] = e.lift_rounded;
        CHECK(std::fabs(e.lift - (e.candidate - e.baseline) / e.baseline * 100.0) < 1e-12);
    }
    CHECK(got[Metric::insightfulness] == 13); // 12.82
    CHECK(got[Metric::novelty] == 28);        // 27.69
    CHECK(got[Metric::depth] == 32);          // 32.00

    const auto half = eval::compare_reports({{Metric::depth, 0.8}}, {{Metric::depth, 0.6}});
    CHECK(half.entries[0].lift_rounded == -25);

    const auto table = eval::lift_table(r);
    CHECK(table.find("+13%") != std::string::npos);
    CHECK(table.find("insightfulness") != std::string::npos);
}

TEST_CASE("lift against a zero baseline is refused")
{
    CHECK_THROWS_AS(eval::compare_reports({{Metric::novelty, 0.0}}, {{Metric::novelty, 0.5}}), eval::DivisionByZero);
    CHECK_THROWS_AS(eval::compare_reports({{Metric::novelty, 0.1}}, {{Metric::depth, 0.5}}), std::invalid_argument);
}

TEST_CASE("weighted score over (0, .05, .25, .70) is 3.65")
{
    const auto w = eval::weighted_score(*weighted_reply().token_scores);
    REQUIRE(w.has_value());
    CHECK(*w == doctest::Approx(3.65).epsilon(1e-12));
    CHECK(eval::normalize(*w) == doctest::Approx(0.8833333333).epsilon(1e-9));
}

TEST_CASE("a point mass gives the same score as unanimous samples")
{
    llm::TokenScore s{"3", 0.0, {{"3", 0.0}}};
    CHECK(*eval::weighted_score({s}) == 3.0);
    // unnormalized mass is renormalized
    llm::TokenScore half{"2", std::log(0.3), {{"2", std::log(0.3)}, {"4", std::log(0.3)}}};
    CHECK(*eval::weighted_score({half}) == doctest::Approx(3.0));
    CHECK_FALSE(eval::weighted_score({{"Score", -0.1, {}}}).has_value());
}

TEST_CASE("parse_score takes the final score line")
{
    CHECK(eval::parse_score("Step 1: novelty looks like 2.\nScore: 3") == 3);
    CHECK(eval::parse_score("**Score:** 4") == 4);
    CHECK(eval::parse_score("score = 2") == 2);
    CHECK_FALSE(eval::parse_score("Score: 7").has_value());
    CHECK_FALSE(eval::parse_score("I would say quite good.").has_value());
}

TEST_CASE("weighted judging uses one sample")
{
    auto t = std::make_shared<testing::ScriptedTransport>();
    t->set_responder([](const llm::ChatRequest&) { return weighted_reply(); });
    auto gw = testing::scripted_gateway(t);
    const auto s = eval::g_eval_score(Metric::depth, kArtifact, kContext, gw, {});
    CHECK(s.weighted);
    CHECK(s.n_samples == 1);
    CHECK(s.raw == doctest::Approx(3.65));
    CHECK(s.normalized == doctest::Approx(0.8833333333));
    REQUIRE(t->requests().size() == 1);
    CHECK(t->requests()[0].logprobs_requested);
}

TEST_CASE("without log-probabilities the raw score is a mean of samples at temperature 1.0")
{
    auto t = std::make_shared<testing::ScriptedTransport>(
        std::vector<std::string>{"Score: 3", "Score: 4", "Score: 2", "Score: 3", "Score: 4"});
    auto gw = testing::scripted_gateway(t);
    const auto s = eval::g_eval_score(Metric::novelty, kArtifact, kContext, gw, {});
    CHECK_FALSE(s.weighted);
    CHECK(s.n_samples == 5);
    CHECK(s.raw == doctest::Approx(3.2).epsilon(1e-12));
    CHECK(s.normalized == doctest::Approx(2.2 / 3.0).epsilon(1e-12));
    REQUIRE(t->requests().size() == 5);
    std::set<std::string> fps;
    std::set<std::string> tags;
    for (const auto& r : t->requests()) {
        CHECK(r.temperature == 1.0);
        fps.insert(llm::request_fingerprint(r));
        tags.insert(*r.schema_tag);
    }
    CHECK(fps.size() == 5);
    CHECK(tags.size() == 5);
}

TEST_CASE("all fours and all ones hit the rubric ends")
{
    for (const auto& [text, expected] : std::vector<std::pair<std::string, double>>{{"Score: 4", 1.0}, {"Score: 1", 0.0}}) {
        auto t = std::make_shared<testing::ScriptedTransport>();
        t->set_responder([text = text](const llm::ChatRequest&) { return reply(text); });
        auto gw = testing::scripted_gateway(t);
        const auto s = eval::g_eval_score(Metric::insightfulness, kArtifact, kContext, gw, {});
        CHECK(s.normalized == expected);
        CHECK(s.n_samples == 5);
    }
}

TEST_CASE("an unparseable judge fails after the repair budget")
{
    auto t = std::make_shared<testing::ScriptedTransport>();
    t->set_responder([](const llm::ChatRequest&) { return reply("It is a fine insight overall."); });
    auto gw = testing::scripted_gateway(t);
    eval::GEvalConfig cfg;
    cfg.judge.max_repairs = 2;
    CHECK_THROWS_AS(eval::g_eval_score(Metric::depth, kArtifact, kContext, gw, cfg), llm::StructuredOutputError);
    CHECK(t->requests().size() == 3);
}

TEST_CASE("a repaired reply is accepted")
{
    auto t = std::make_shared<testing::ScriptedTransport>(
        std::vector<std::string>{"Pretty deep.", "Score: 2", "Score: 2", "Score: 2", "Score: 2", "Score: 2"});
    auto gw = testing::scripted_gateway(t);
    const auto s = eval::g_eval_score(Metric::depth, kArtifact, kContext, gw, {});
    CHECK(s.raw == 2.0);
    CHECK(t->requests().size() == 6);
    CHECK(t->requests()[1].messages.size() > t->requests()[0].messages.size());
}

TEST_CASE("judge prompt carries rubric, context and reasoning steps")
{
    const auto req = eval::geval_request(Metric::novelty, kArtifact, kContext, 1, {});
    std::string all;
    for (const auto& m : req.messages) {
        all += m.content + "\n";
    }
    CHECK(all.find(eval::metric_rubric(Metric::novelty)) != std::string::npos);
    CHECK(all.find(kContext.domain) != std::string::npos);
    CHECK(all.find(kContext.concepts_digest) != std::string::npos);
    CHECK(all.find(kArtifact) != std::string::npos);
    CHECK(all.find("Score:") != std::string::npos);
    CHECK(req.logprobs_requested);
    CHECK_FALSE(eval::geval_request(Metric::novelty, kArtifact, kContext, 2, {}).logprobs_requested);
    for (auto m : eval::kMetrics) {
        CHECK(eval::metric_from_string(eval::to_string(m)) == m);
    }
}
