#pragma once

#include "d2d/chart/plan.hpp"
#include "d2d/insight/insight.hpp"
#include "d2d/render/spec.hpp"
#include "d2d/semantics/semantics.hpp"

#include <string>
#include <vector>

namespace d2d::render {

inline constexpr const char* kVegaScript = "https://cdn.jsdelivr.net/npm/vega@5.30.0";
inline constexpr const char* kVegaLiteScript = "https://cdn.jsdelivr.net/npm/vega-lite@5.21.0";
inline constexpr const char* kVegaEmbedScript = "https://cdn.jsdelivr.net/npm/vega-embed@6.26.0";

struct Dashboard {
    std::string html;
    std::size_t chart_count = 0;
    std::string domain_header;
};

// JSON text safe to place inside a <script> element.
std::string script_safe_json(const nlohmann::ordered_json& doc);

// specs[i] renders plans[specs[i].plan_ref]. run_digest is printed in the
// footer; it identifies the run configuration and input, not the plans, so
// editing one plan changes only that chart's section.
Dashboard assemble_dashboard(const std::vector<ChartSpec>& specs, const insight::InsightBundle& bundle,
                             const semantics::DomainFinding& domain, const std::vector<chart::ChartPlan>& plans,
                             const std::string& run_digest);

} // namespace d2d::render
