#pragma once

#include "d2d/chart/plan.hpp"
#include "d2d/common/error.hpp"
#include "d2d/profile/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace d2d::render {

class AggregationError : public Error {
public:
    using Error::Error;
};

inline constexpr std::size_t kMaxInlineRows = 5000;
inline constexpr const char* kNullGroup = "(null)";

struct ChartData {
    std::vector<std::string> fields;
    std::vector<std::vector<nlohmann::json>> rows; // one value per field
    std::size_t source_rows = 0;                   // rows before sampling
    bool sampled = false;
    // Field holding the aggregated measure, when the plan aggregates.
    std::optional<std::string> measure_field;

    nlohmann::ordered_json values() const;
};

struct DataOptions {
    std::uint64_t sample_seed = 42;
    std::size_t max_rows = kMaxInlineRows;
};

// Column carrying the measure for an aggregating plan: y, or color for a
// heatmap. Empty for count.
std::optional<std::string> measure_column(const chart::ChartPlan& plan);

// Columns a plan groups by when it aggregates, in x, y, color, facet order.
std::vector<std::string> grouping_columns(const chart::ChartPlan& plan);

// Projects the table onto the plan's encodings. With an aggregate, rows are
// grouped by the non-measure encodings (null keys form a "(null)" group,
// groups sorted by key with nulls last) and count/sum/mean/median computed
// over non-null measure values. Output beyond max_rows is uniformly sampled
// with a fixed seed, keeping source order.
ChartData prepare_chart_data(const profile::TypedTable& table, const chart::ChartPlan& plan,
                             const DataOptions& options = {});

// Seeded uniform sample of k indices out of n, sorted ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

} // namespace d2d::render
