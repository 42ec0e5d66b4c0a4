#pragma once

#include "d2d/chart/plan.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/profile/types.hpp"
#include "d2d/render/data.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace d2d::render {

inline constexpr const char* kGrammarSchemaUrl = "https://vega.github.io/schema/vega-lite/v5.21.0.json";
inline constexpr const char* kGrammarSchemaFile = "vega-lite-v5.21.0.schema.json";
inline constexpr std::size_t kTitleMaxChars = 80;
inline constexpr int kChartWidth = 480;
inline constexpr int kChartHeight = 300;

struct ChartSpec {
    std::size_t plan_ref = 0;
    nlohmann::ordered_json grammar_doc;
    std::size_t inline_data_rows = 0;
};

// key_insight_narrative cut to 80 code points with a trailing ellipsis.
std::string chart_title(const std::string& narrative);

// Column name plus its detected unit, e.g. "monthly_spend ($)".
std::string axis_label(const std::string& column, const profile::TableProfile& profile);

// Escapes characters the grammar treats as field-path syntax.
std::string field_ref(const std::string& name);

// Deterministic template expansion of a validated plan into a Vega-Lite
// document. Color encodings always carry an explicit legend; annotations
// become text marks (or the subtitle for faceted charts).
ChartSpec emit_spec(const chart::ChartPlan& plan, const ChartData& data, const profile::TableProfile& profile,
                    std::size_t plan_ref);

// Pinned Vega-Lite schema, loaded once. The directory defaults to the
// schemas/ folder of the source tree and can be overridden with
// D2D_SCHEMA_DIR.
const jsonschema::JsonSchema& grammar_schema();
std::filesystem::path schema_dir();

// House rules (mark, title, axis titles, legend law, inline data) followed by
// schema validation. Returns the problems found; never throws.
std::vector<std::string> validate_spec(const nlohmann::json& grammar_doc);
std::vector<std::string> validate_spec(const ChartSpec& spec);

// True when the document has a legend for every color channel and none elsewhere.
bool legend_law_holds(const nlohmann::json& grammar_doc);

} // namespace d2d::render
