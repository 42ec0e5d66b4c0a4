#pragma once

// Brute-force reference computations used by unit and acceptance tests. These
// deliberately avoid the dictionary encoding and partition machinery of the
// library: they compare parsed values row pair by row pair.

#include "d2d/profile/types.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace d2d::testing {

using profile::FunctionalDependency;
using profile::TypedColumn;
using profile::TypedTable;
using profile::Value;

inline bool same(const TypedTable& t, const std::vector<std::size_t>& cols, std::size_t i, std::size_t j)
{
    for (auto c : cols) {
        if (!(t.columns[c].values[i] == t.columns[c].values[j])) {
            return false;
        }
    }
    return true;
}

inline bool fd_holds_brute(const TypedTable& t, const std::vector<std::size_t>& lhs, std::size_t rhs)
{
    for (std::size_t i = 0; i < t.row_count; ++i) {
        for (std::size_t j = i + 1; j < t.row_count; ++j) {
            if (same(t, lhs, i, j) && !same(t, {rhs}, i, j)) {
                return false;
            }
        }
    }
    return true;
}

inline std::set<FunctionalDependency> brute_force_fds(const TypedTable& t, int max_lhs = 2)
{
    std::set<FunctionalDependency> out;
    const auto n = t.columns.size();
    if (n < 2) {
        return out;
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < n; ++c) {
            if (c != a && fd_holds_brute(t, {a}, c)) {
                out.insert({{t.columns[a].name}, t.columns[c].name});
            }
        }
    }
    if (max_lhs < 2) {
        return out;
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                if (c == a || c == b) {
                    continue;
                }
                if (fd_holds_brute(t, {a}, c) || fd_holds_brute(t, {b}, c)) {
                    continue; // not minimal
                }
                if (fd_holds_brute(t, {a, b}, c)) {
                    out.insert({{t.columns[a].name, t.columns[b].name}, t.columns[c].name});
                }
            }
        }
    }
    return out;
}

inline bool key_holds_brute(const TypedTable& t, const std::vector<std::size_t>& cols)
{
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.row_count; ++r) {
        bool has_null = false;
        for (auto c : cols) {
            has_null = has_null || profile::is_null(t.columns[c].values[r]);
        }
        if (!has_null) {
            rows.push_back(r);
        }
    }
    if (rows.size() * 100 < 95 * t.row_count) {
        return false;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (same(t, cols, rows[i], rows[j])) {
                return false;
            }
        }
    }
    return true;
}

inline std::set<std::vector<std::string>> brute_force_keys(const TypedTable& t, int max_width = 2)
{
    std::set<std::vector<std::string>> out;
    const auto n = t.columns.size();
    std::vector<bool> single(n, false);
    for (std::size_t a = 0; a < n; ++a) {
        single[a] = key_holds_brute(t, {a});
        if (single[a]) {
            out.insert({t.columns[a].name});
        }
    }
    if (max_width < 2) {
        return out;
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (!single[a] && !single[b] && key_holds_brute(t, {a, b})) {
                out.insert({t.columns[a].name, t.columns[b].name});
            }
        }
    }
    return out;
}

// Random mixed-type table with planted dependencies, duplicates and nulls.
inline TypedTable random_table(std::mt19937_64& rng, std::size_t max_cols = 8, std::size_t max_rows = 200)
{
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    };
    const std::size_t cols = pick(1, max_cols);
    const std::size_t rows = pick(1, max_rows);
    TypedTable t;
    t.row_count = rows;
    const double null_rate = (rng() % 3 == 0) ? 0.0 : static_cast<double>(rng() % 8) / 100.0;
    auto maybe_null = [&](Value v) -> Value {
        if (null_rate > 0 && static_cast<double>(rng() % 1000) / 1000.0 < null_rate) {
            return std::monostate{};
        }
        return v;
    };
    for (std::size_t c = 0; c < cols; ++c) {
        TypedColumn col;
        col.name = "c" + std::to_string(c);
        const auto kind = rng() % 7;
        col.values.resize(rows);
        if (kind == 0 && c > 0) {
            // function of an earlier column
            const auto src = pick(0, c - 1);
            const auto mod = pick(1, 4);
            col.type = profile::ColumnType::integer;
            for (std::size_t r = 0; r < rows; ++r) {
                const auto& sv = t.columns[src].values[r];
                col.values[r] = profile::is_null(sv)
                                    ? Value{std::monostate{}}
                                    : Value{static_cast<std::int64_t>(std::hash<std::string>{}(profile::value_text(sv)) % mod)};
            }
        } else if (kind == 1 && c > 1) {
            // function of a pair of earlier columns
            const auto a = pick(0, c - 1);
            auto b = pick(0, c - 1);
            col.type = profile::ColumnType::categorical;
            for (std::size_t r = 0; r < rows; ++r) {
                const auto h = std::hash<std::string>{}(profile::value_text(t.columns[a].values[r]) + "|" +
                                                         profile::value_text(t.columns[b].values[r]));
                col.values[r] = std::string("g") + std::to_string(h % 5);
            }
        } else if (kind == 2) {
            col.type = profile::ColumnType::integer;
            for (std::size_t r = 0; r < rows; ++r) {
                col.values[r] = maybe_null(static_cast<std::int64_t>(r)); // unique id
            }
        } else if (kind == 3) {
            col.type = profile::ColumnType::boolean;
            for (std::size_t r = 0; r < rows; ++r) {
                col.values[r] = maybe_null(rng() % 2 == 0);
            }
        } else if (kind == 4) {
            col.type = profile::ColumnType::decimal;
            const auto card = pick(1, 30);
            for (std::size_t r = 0; r < rows; ++r) {
                col.values[r] = maybe_null(static_cast<double>(rng() % card) * 0.5);
            }
        } else {
            col.type = profile::ColumnType::categorical;
            const auto card = pick(1, kind == 5 ? 3 : 12);
            for (std::size_t r = 0; r < rows; ++r) {
                col.values[r] = maybe_null(std::string("v") + std::to_string(rng() % card));
            }
        }
        t.columns.push_back(std::move(col));
    }
    // duplicate some full rows
    if (rows > 2 && rng() % 2 == 0) {
        const auto dups = pick(1, std::max<std::size_t>(1, rows / 10));
        for (std::size_t k = 0; k < dups; ++k) {
            const auto from = pick(0, rows - 1);
            const auto to = pick(0, rows - 1);
            for (auto& col : t.columns) {
                col.values[to] = col.values[from];
            }
        }
    }
    return t;
}

} // namespace d2d::testing
