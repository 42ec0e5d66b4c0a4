#pragma once

// Loop agents driven by a fixed score script, plus an independent checker for
// the loop's call-count, termination, memory and best-entry laws.

#include "d2d/reflexion/loop.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace d2d::testing {

using Scores = std::array<int, 5>;

class ScriptedAgents : public reflexion::LoopAgents {
public:
    explicit ScriptedAgents(std::vector<Scores> script) : script_(std::move(script)) {}

    insight::InsightBundle generate(const reflexion::ReflectionMemory& memory, std::size_t iteration) override
    {
        ++generate_calls;
        memory_sizes.push_back(memory.size());
        if (fail_generate_at && *fail_generate_at == iteration) {
            throw std::runtime_error("scripted generate failure");
        }
        insight::InsightBundle b;
        b.iteration = iteration;
        b.descriptive.push_back({insight::Lens::descriptive, "insight " + std::to_string(iteration), {}, std::nullopt});
        return b;
    }

    reflexion::EvaluationReport evaluate(const insight::InsightBundle& bundle) override
    {
        ++evaluate_calls;
        reflexion::EvaluationReport r;
        r.scores = script_.at(bundle.iteration);
        for (auto& j : r.justifications) {
            j = "scripted";
        }
        return r;
    }

    std::string reflect(const reflexion::EvaluationReport&, const insight::InsightBundle& bundle,
                        const reflexion::ReflectionMemory&) override
    {
        ++reflect_calls;
        if (fail_reflect_at && *fail_reflect_at == bundle.iteration) {
            throw std::runtime_error("scripted reflect failure");
        }
        return "reflection " + std::to_string(bundle.iteration);
    }

    std::size_t generate_calls = 0;
    std::size_t evaluate_calls = 0;
    std::size_t reflect_calls = 0;
    std::vector<std::size_t> memory_sizes;
    std::optional<std::size_t> fail_generate_at;
    std::optional<std::size_t> fail_reflect_at;

private:
    std::vector<Scores> script_;
};

struct ExpectedLoop {
    std::size_t iterations = 0;
    reflexion::Termination termination = reflexion::Termination::budget_exhausted;
    std::size_t best = 0;
    std::size_t memory_length = 0;
};

// Direct reading of the loop rules, written without the library's helpers.
inline ExpectedLoop expected_loop(const std::vector<Scores>& script, std::size_t n_max, int threshold)
{
    ExpectedLoop e;
    for (std::size_t k = 0; k < n_max; ++k) {
        e.iterations = k + 1;
        int lo = 4;
        for (int s : script[k]) {
            lo = std::min(lo, s);
        }
        if (lo >= threshold) {
            e.termination = reflexion::Termination::threshold_met;
            e.best = k;
            e.memory_length = k == 0 ? 0 : e.iterations;
            return e;
        }
    }
    e.termination = reflexion::Termination::budget_exhausted;
    e.memory_length = e.iterations;
    double best_mean = -1;
    for (std::size_t k = 0; k < e.iterations; ++k) {
        double sum = 0;
        for (int s : script[k]) {
            sum += s;
        }
        const double mean = sum / 5.0;
        if (mean >= best_mean - 1e-12) {
            best_mean = std::max(best_mean, mean);
            e.best = k;
        }
    }
    return e;
}

// Returns a description of every violated law; empty when all hold.
inline std::vector<std::string> loop_law_violations(const std::vector<Scores>& script, std::size_t n_max, int threshold,
                                                    const reflexion::LoopResult& result, const ScriptedAgents& agents)
{
    std::vector<std::string> v;
    const auto e = expected_loop(script, n_max, threshold);
    const auto& t = result.trace;
    const auto n = t.entries.size();
    if (n != e.iterations) v.push_back("iterations " + std::to_string(n) + " != " + std::to_string(e.iterations));
    if (agents.generate_calls != n) v.push_back("generate calls != iterations");
    if (agents.evaluate_calls != n) v.push_back("evaluate calls != iterations");
    if (agents.reflect_calls != n - 1) v.push_back("reflect calls != iterations - 1");
    if (!t.termination || *t.termination != e.termination) v.push_back("termination reason");
    if (t.best_iteration != e.best) v.push_back("best iteration " + std::to_string(t.best_iteration) + " != " + std::to_string(e.best));
    if (t.memory.size() != e.memory_length) v.push_back("memory length " + std::to_string(t.memory.size()) + " != " + std::to_string(e.memory_length));
    if (t.memory.size() > n_max) v.push_back("memory longer than n_max");
    for (std::size_t i = 0; i < t.memory.entries.size(); ++i) {
        if (t.memory.entries[i].iteration != i) v.push_back("memory iterations not 0,1,2,...");
        try {
            t.memory.entries[i].report.check();
        } catch (const std::exception&) {
            v.push_back("memory entry report invalid");
        }
    }
    if (t.termination == reflexion::Termination::threshold_met && t.best_iteration < n &&
        t.entries[t.best_iteration].report.min_score() < threshold) {
        v.push_back("threshold met but best entry below threshold");
    }
    if (result.best.iteration != t.best_iteration) v.push_back("returned bundle is not the best entry's");
    for (std::size_t k = 0; k < n; ++k) {
        const bool terminal = k + 1 == n;
        if (t.entries[k].reflection.has_value() == terminal) v.push_back("reflection presence at iteration " + std::to_string(k));
    }
    // generate at iteration k sees the reflections of every earlier iteration
    for (std::size_t k = 0; k < agents.memory_sizes.size(); ++k) {
        if (agents.memory_sizes[k] != k) v.push_back("memory seen by generate at iteration " + std::to_string(k));
    }
    return v;
}

} // namespace d2d::testing
