#include "d2d/render/data.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace d2d::render {

using nlohmann::json;
using profile::Value;

nlohmann::ordered_json ChartData::values() const
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            obj[fields[i]] = row[i];
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::optional<std::string> measure_column(const chart::ChartPlan& plan)
{
    if (!plan.aggregate || *plan.aggregate == chart::Aggregate::count) {
        return std::nullopt;
    }
    return plan.chart_type == chart::ChartType::heatmap ? plan.encodings.color : plan.encodings.y;
}

std::vector<std::string> grouping_columns(const chart::ChartPlan& plan)
{
    const auto measure = measure_column(plan);
    std::vector<std::string> keys;
    for (const auto* ch : {&plan.encodings.x, &plan.encodings.y, &plan.encodings.color, &plan.encodings.facet}) {
        if (*ch && *ch != measure && std::find(keys.begin(), keys.end(), **ch) == keys.end()) {
            keys.push_back(**ch);
        }
    }
    return keys;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (k >= n) {
        return idx;
    }
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates: the first k slots end up a uniform k-subset
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

json to_json_value(const Value& v)
{
    return std::visit(
        [](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else {
                return x;
            }
        },
        v);
}

double numeric_value(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
        return static_cast<double>(*i);
    }
    return std::get<double>(v);
}

// Total order over group keys: nulls last, otherwise by value within a type.
bool key_less(const Value& a, const Value& b)
{
    const bool an = profile::is_null(a);
    const bool bn = profile::is_null(b);
    if (an || bn) {
        return !an && bn;
    }
    if (a.index() != b.index()) {
        return a.index() < b.index();
    }
    return a < b;
}

struct KeyLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const
    {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (key_less(a[i], b[i])) {
                return true;
            }
            if (key_less(b[i], a[i])) {
                return false;
            }
        }
        return false;
    }
};

const profile::TypedColumn& require(const profile::TypedTable& table, const std::string& name)
{
    const auto* c = table.find(name);
    if (c == nullptr) {
        throw AggregationError("chart references unknown column '" + name + "'");
    }
    return *c;
}

double median_of(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

} // namespace

ChartData prepare_chart_data(const profile::TypedTable& table, const chart::ChartPlan& plan, const DataOptions& options)
{
    ChartData out;
    if (!plan.aggregate) {
        std::vector<const profile::TypedColumn*> cols;
        for (const auto* ch : {&plan.encodings.x, &plan.encodings.y, &plan.encodings.color, &plan.encodings.facet}) {
            if (*ch && std::find(out.fields.begin(), out.fields.end(), **ch) == out.fields.end()) {
                out.fields.push_back(**ch);
                cols.push_back(&require(table, **ch));
            }
        }
        out.source_rows = table.row_count;
        const auto keep = sample_indices(table.row_count, options.max_rows, options.sample_seed);
        out.sampled = keep.size() < table.row_count;
        out.rows.reserve(keep.size());
        for (auto r : keep) {
            std::vector<json> row;
            row.reserve(cols.size());
            for (const auto* c : cols) {
                row.push_back(to_json_value(c->values[r]));
            }
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    const auto agg = *plan.aggregate;
    const auto keys = grouping_columns(plan);
    const auto measure_name = measure_column(plan);
    const profile::TypedColumn* measure = nullptr;
    if (measure_name) {
        measure = &require(table, *measure_name);
        if (!profile::is_numeric(measure->type)) {
            throw AggregationError(chart::to_string(agg) + " needs a numeric measure but '" + *measure_name + "' is " +
                                   std::string(profile::to_string(measure->type)));
        }
    } else if (agg != chart::Aggregate::count) {
        throw AggregationError(chart::to_string(agg) + " needs a measure column");
    }
    std::vector<const profile::TypedColumn*> key_cols;
    for (const auto& k : keys) {
        key_cols.push_back(&require(table, k));
    }

    struct Acc {
        std::size_t rows = 0;
        std::vector<double> values;
    };
    std::map<std::vector<Value>, Acc, KeyLess> groups;
    for (std::size_t r = 0; r < table.row_count; ++r) {
        std::vector<Value> key;
        key.reserve(key_cols.size());
        for (const auto* c : key_cols) {
            key.push_back(c->values[r]);
        }
        auto& acc = groups[std::move(key)];
        ++acc.rows;
        if (measure != nullptr && !profile::is_null(measure->values[r])) {
            acc.values.push_back(numeric_value(measure->values[r]));
        }
    }

    out.fields = keys;
    std::string measure_field = measure_name.value_or("count");
    while (std::find(out.fields.begin(), out.fields.end(), measure_field) != out.fields.end()) {
        measure_field = "_" + measure_field;
    }
    out.fields.push_back(measure_field);
    out.measure_field = measure_field;
    out.source_rows = groups.size();

    std::vector<std::vector<json>> all;
    all.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        std::vector<json> row;
        for (const auto& v : key) {
            row.push_back(profile::is_null(v) ? json(kNullGroup) : to_json_value(v));
        }
        switch (agg) {
        case chart::Aggregate::count:
            row.emplace_back(acc.rows);
            break;
        case chart::Aggregate::sum: {
            double s = 0;
            for (double x : acc.values) {
                s += x;
            }
            row.emplace_back(s);
            break;
        }
        case chart::Aggregate::mean: {
            if (acc.values.empty()) {
                row.emplace_back(nullptr);
            } else {
                double s = 0;
                for (double x : acc.values) {
                    s += x;
                }
                row.emplace_back(s / static_cast<double>(acc.values.size()));
            }
            break;
        }
        case chart::Aggregate::median:
            row.emplace_back(acc.values.empty() ? json(nullptr) : json(median_of(acc.values)));
            break;
        }
        all.push_back(std::move(row));
    }
    const auto keep = sample_indices(all.size(), options.max_rows, options.sample_seed);
    out.sampled = keep.size() < all.size();
    for (auto i : keep) {
        out.rows.push_back(std::move(all[i]));
    }
    return out;
}

} // namespace d2d::render
