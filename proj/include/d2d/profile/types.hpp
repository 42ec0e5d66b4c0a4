#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace d2d::profile {

enum class ColumnType { boolean, integer, decimal, datetime, categorical, text };

std::string_view to_string(ColumnType t);
std::optional<ColumnType> column_type_from_string(std::string_view s);

bool is_numeric(ColumnType t);
// Usable as a discrete axis or grouping key.
bool is_discrete(ColumnType t);
// Has a natural order suitable for a line chart x axis.
bool is_ordered(ColumnType t);

// Parsed cell. monostate is null; datetimes are stored in canonical ISO-8601 text.
using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Canonical text for a non-null value ("true", "42", "4.5", "2024-01-31", ...).
std::string value_text(const Value& v);

struct TypedColumn {
    std::string name;
    ColumnType type = ColumnType::text;
    std::vector<Value> values;
    std::optional<std::string> unit;
    std::size_t source_null_count = 0;
    // Cells that failed to parse under the accepted type and were nulled.
    std::size_t coerced_null_count = 0;
};

struct TypedTable {
    std::vector<TypedColumn> columns;
    std::size_t row_count = 0;

    const TypedColumn* find(std::string_view name) const;
};

struct NumericSummary {
    double min = 0;
    double max = 0;
    double mean = 0;
    double std_dev = 0; // population
};

struct ValueCount {
    std::string value;
    std::size_t count = 0;

    friend bool operator==(const ValueCount&, const ValueCount&) = default;
};

struct ColumnProfile {
    std::string name;
    ColumnType inferred_type = ColumnType::text;
    std::size_t null_count = 0;
    std::size_t coerced_null_count = 0;
    std::size_t distinct_count = 0;
    std::optional<NumericSummary> numeric_summary;
    std::optional<std::pair<std::string, std::string>> datetime_range;
    std::vector<ValueCount> top_values;
    std::optional<std::string> detected_unit;
};

struct FunctionalDependency {
    std::vector<std::string> determinant; // 1 or 2 names, in column order
    std::string dependent;

    friend bool operator==(const FunctionalDependency&, const FunctionalDependency&) = default;
    friend auto operator<=>(const FunctionalDependency&, const FunctionalDependency&) = default;
};

struct TableProfile {
    std::size_t row_count = 0;
    std::vector<ColumnProfile> columns;
    std::vector<FunctionalDependency> fds;
    std::vector<std::vector<std::string>> candidate_keys;
    std::optional<std::string> narrative;

    const ColumnProfile* find(std::string_view name) const;
    bool has_column(std::string_view name) const { return find(name) != nullptr; }
};

} // namespace d2d::profile
