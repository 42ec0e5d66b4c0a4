#include "d2d/eval/geval.hpp"

#include "d2d/common/text.hpp"
#include "d2d/llm/structured.hpp"

#include <cmath>
#include <iomanip>
#include <regex>
#include <sstream>

namespace d2d::eval {

std::string to_string(Metric m)
{
    switch (m) {
    case Metric::insightfulness: return "insightfulness";
    case Metric::novelty: return "novelty";
    case Metric::depth: return "depth";
    }
    return "depth";
}

std::optional<Metric> metric_from_string(const std::string& s)
{
    for (auto m : kMetrics) {
        if (to_string(m) == s) {
            return m;
        }
    }
    return std::nullopt;
}

double normalize(double raw)
{
    if (!(raw >= 1.0 && raw <= 4.0)) {
        throw RangeError("rubric score " + text::format_number(raw) + " is outside [1, 4]");
    }
    return (raw - 1.0) / 3.0;
}

LiftReport compare_reports(const std::map<Metric, double>& baseline, const std::map<Metric, double>& candidate)
{
    if (baseline.size() != candidate.size()) {
        throw std::invalid_argument("baseline and candidate report different metrics");
    }
    LiftReport report;
    for (const auto& [metric, b] : baseline) {
        auto it = candidate.find(metric);
        if (it == candidate.end()) {
            throw std::invalid_argument("candidate has no " + to_string(metric) + " score");
        }
        if (b == 0.0) {
            throw DivisionByZero("baseline " + to_string(metric) + " score is 0, lift is undefined");
        }
        const double lift = (it->second - b) / b * 100.0;
        report.entries.push_back({metric, b, it->second, lift, std::lround(lift)});
    }
    return report;
}

const std::string& metric_rubric(Metric m)
{
    static const std::array<std::string, 3> rubrics{
        "Insightfulness (1-4): how much business reasoning the analysis shows. A 1 restates numbers without "
        "interpretation; a 2 offers generic observations; a 3 explains what most findings mean for the business; "
        "a 4 turns findings into specific, actionable conclusions tied to the domain's concepts.",
        "Novelty (1-4): how far the analysis goes beyond what is evident from column names and single summary "
        "statistics. A 1 is entirely obvious; a 2 has one or two less evident points; a 3 contains several "
        "findings a practitioner in the domain would not assume; a 4 is consistently non-obvious.",
        "Depth (1-4): how thoroughly claims are supported and reasoned. A 1 asserts without support; a 2 cites "
        "thin evidence; a 3 backs most claims with statistics aligned with the domain concepts; a 4 quantifies "
        "every claim and reasons through interactions between variables and caveats.",
    };
    return rubrics[static_cast<std::size_t>(m)];
}

llm::ChatRequest geval_request(Metric metric, const std::string& artifact_text, const JudgeContext& context,
                               std::size_t sample, const GEvalConfig& config)
{
    llm::ChatRequest req;
    req.model_id = config.judge.model_id;
    req.temperature = config.judge.temperature;
    req.schema_tag = "geval/" + to_string(metric) + "/sample-" + std::to_string(sample);
    req.logprobs_requested = sample == 1;
    req.messages.push_back({llm::Role::system, "You are an expert reviewer of business analytics reports."});
    std::string user = "Domain: " + (context.domain.empty() ? std::string("not stated") : context.domain) + "\n";
    if (!context.concepts_digest.empty()) {
        user += "Domain concepts:\n" + context.concepts_digest;
    }
    user += "\nEvaluation criterion:\n" + metric_rubric(metric) + "\n\n";
    user += "Evaluation steps:\n"
            "1. Read the analysis and list the claims it makes.\n"
            "2. For each claim, judge it against the criterion in the context of the domain and its concepts.\n"
            "3. Weigh the claims together and choose the rubric level that fits the analysis as a whole.\n\n";
    user += "Analysis to evaluate:\n" + artifact_text + "\n\n";
    user += "Work through the steps briefly, then end with a final line of the form \"Score: N\" where N is 1, "
            "2, 3 or 4.";
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

std::optional<int> parse_score(const std::string& reply)
{
    static const std::regex pattern(R"(score\s*[:=]?\s*\**\s*([1-4])\b)", std::regex::ECMAScript | std::regex::icase);
    std::optional<int> last;
    for (auto it = std::sregex_iterator(reply.begin(), reply.end(), pattern); it != std::sregex_iterator(); ++it) {
        last = (*it)[1].str()[0] - '0';
    }
    return last;
}

namespace {

std::optional<int> score_token(const std::string& token)
{
    const auto t = text::trim(token);
    if (t.size() == 1 && t[0] >= '1' && t[0] <= '4') {
        return t[0] - '0';
    }
    return std::nullopt;
}

} // namespace

std::optional<double> weighted_score(const std::vector<llm::TokenScore>& tokens)
{
    // the final score token is the last one that spells a rubric level
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        if (!score_token(it->token)) {
            continue;
        }
        std::array<double, 5> p{};
        bool any = false;
        auto add = [&](const std::string& tok, double logprob) {
            if (auto s = score_token(tok); s && p[static_cast<std::size_t>(*s)] == 0.0) {
                p[static_cast<std::size_t>(*s)] = std::exp(logprob);
                any = true;
            }
        };
        for (const auto& [tok, lp] : it->top) {
            add(tok, lp);
        }
        add(it->token, it->logprob);
        if (!any) {
            return std::nullopt;
        }
        double mass = 0;
        double expectation = 0;
        for (int s = 1; s <= 4; ++s) {
            mass += p[static_cast<std::size_t>(s)];
            expectation += s * p[static_cast<std::size_t>(s)];
        }
        if (mass <= 0) {
            return std::nullopt;
        }
        return expectation / mass;
    }
    return std::nullopt;
}

namespace {

// One judge sample with the repair loop for unparseable replies.
std::pair<int, llm::ChatResponse> judge_once(llm::ChatRequest req, llm::Gateway& gateway, int max_repairs)
{
    std::vector<std::vector<std::string>> attempts;
    for (int attempt = 0; attempt <= max_repairs; ++attempt) {
        auto resp = gateway.complete(req);
        if (auto s = parse_score(resp.text)) {
            return {*s, std::move(resp)};
        }
        const std::vector<std::string> errors{"the reply does not end with a line \"Score: N\" where N is 1 to 4"};
        attempts.push_back(errors);
        req.messages.push_back({llm::Role::assistant, resp.text});
        req.messages.push_back({llm::Role::user, llm::repair_message(errors)});
    }
    throw llm::StructuredOutputError(req.schema_tag.value_or("geval"), std::move(attempts));
}

} // namespace

MetricScore g_eval_score(Metric metric, const std::string& artifact_text, const JudgeContext& context,
                         llm::Gateway& gateway, const GEvalConfig& config)
{
    if (text::trim(artifact_text).empty()) {
        throw std::invalid_argument("artifact text is empty");
    }
    if (config.n_samples < 1) {
        throw std::invalid_argument("n_samples must be at least 1");
    }
    MetricScore score;
    score.metric = metric;
    auto [first, response] = judge_once(geval_request(metric, artifact_text, context, 1, config), gateway,
                                        config.judge.max_repairs);
    if (response.token_scores) {
        if (auto w = weighted_score(*response.token_scores)) {
            score.raw = *w;
            score.weighted = true;
            score.n_samples = 1;
            score.normalized = normalize(score.raw);
            return score;
        }
    }
    long total = first;
    for (std::size_t k = 2; k <= config.n_samples; ++k) {
        total += judge_once(geval_request(metric, artifact_text, context, k, config), gateway, config.judge.max_repairs).first;
    }
    score.n_samples = config.n_samples;
    score.raw = static_cast<double>(total) / static_cast<double>(config.n_samples);
    score.normalized = normalize(score.raw);
    return score;
}

nlohmann::ordered_json to_json(const MetricScore& s)
{
    return {{"metric", to_string(s.metric)},
            {"raw", s.raw},
            {"normalized", s.normalized},
            {"weighted", s.weighted},
            {"n_samples", s.n_samples}};
}

nlohmann::ordered_json to_json(const LiftReport& r)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : r.entries) {
        arr.push_back({{"metric", to_string(e.metric)},
                       {"baseline", e.baseline},
                       {"candidate", e.candidate},
                       {"lift_percent", e.lift_rounded},
                       {"lift_percent_unrounded", e.lift}});
    }
    return arr;
}

std::string lift_table(const LiftReport& r)
{
    std::ostringstream os;
    os << std::left << std::setw(16) << "metric" << std::right << std::setw(10) << "baseline" << std::setw(11)
       << "candidate" << std::setw(8) << "lift" << "\n";
    for (const auto& e : r.entries) {
        const auto lift = (e.lift_rounded >= 0 ? "+" : "") + std::to_string(e.lift_rounded) + "%";
        os << std::left << std::setw(16) << to_string(e.metric) << std::right << std::setw(10)
           << text::format_fixed(e.baseline, 3) << std::setw(11) << text::format_fixed(e.candidate, 3)
           << std::setw(8) << lift << "\n";
    }
    return os.str();
}

} // namespace d2d::eval
