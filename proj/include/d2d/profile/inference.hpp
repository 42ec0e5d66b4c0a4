#pragma once

#include "d2d/ingest/table.hpp"
#include "d2d/profile/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace d2d::profile {

// Share of non-null cells that must parse for a cascade level to be accepted.
inline constexpr int kAcceptPercent = 98;
// A unit token must appear on at least this share of non-null cells.
inline constexpr int kUnitPercent = 90;
inline constexpr std::size_t kCategoricalMinCap = 20;

struct InferredColumn {
    ColumnType type = ColumnType::text;
    std::vector<Value> values; // one per input cell, monostate for null
    std::optional<std::string> unit;
    std::size_t source_null_count = 0;
    std::size_t coerced_null_count = 0;
};

// Trial-parse cascade: boolean, integer, decimal, datetime, categorical, text.
// `row_count` drives the categorical cutoff and defaults to cells.size().
InferredColumn infer_type(std::span<const ingest::Cell> cells, std::optional<std::size_t> row_count = std::nullopt);

// Convenience overload treating every cell as non-null text.
InferredColumn infer_type(const std::vector<std::string>& cells);

std::optional<bool> parse_boolean(std::string_view s);
std::optional<std::int64_t> parse_integer(std::string_view s);

struct DecimalParts {
    double value = 0;
    std::string unit; // empty when the cell is a bare number
};

// Number with optional thousands separators and at most one leading or
// trailing unit token ("$4.50", "12 %", "1,200 kg").
std::optional<DecimalParts> parse_decimal(std::string_view s);

// ISO-8601 dates/times and day-first D/M/Y forms, returned in canonical ISO text.
std::optional<std::string> parse_datetime(std::string_view s);

std::vector<ingest::Cell> column_cells(const ingest::RawTable& table, std::size_t column);

// Types every column; columns are processed concurrently.
TypedTable type_table(const ingest::RawTable& table);
// Same result computed on one thread; kept as the reference for tests and benchmarks.
TypedTable type_table_serial(const ingest::RawTable& table);

} // namespace d2d::profile
