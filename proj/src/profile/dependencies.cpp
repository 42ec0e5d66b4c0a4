#include "d2d/profile/dependencies.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace d2d::profile {

namespace {

constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

void check_width(int w, const char* what)
{
    if (w < 1 || w > 2) {
        throw std::invalid_argument(std::string(what) + " must be 1 or 2");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> column_pairs(std::size_t n)
{
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    return pairs;
}

// single[i * n + j] == 1 iff column i determines column j
std::vector<char> single_fds(const EncodedTable& t, bool parallel)
{
    const std::size_t n = t.codes.size();
    std::vector<char> single(n * n, 0);
    const auto total = static_cast<std::ptrdiff_t>(n * n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::ptrdiff_t k = 0; k < total; ++k) {
            const auto i = static_cast<std::size_t>(k) / n;
            const auto j = static_cast<std::size_t>(k) % n;
            if (i != j) {
                single[static_cast<std::size_t>(k)] = refines(t.codes[i], t.cardinality[i], t.codes[j]) ? 1 : 0;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    single[i * n + j] = refines(t.codes[i], t.cardinality[i], t.codes[j]) ? 1 : 0;
                }
            }
        }
    }
    return single;
}

std::vector<FdIndex> pair_fds(const EncodedTable& t, const std::vector<char>& single, std::size_t a, std::size_t b)
{
    const std::size_t n = t.codes.size();
    std::vector<FdIndex> out;
    std::vector<std::size_t> targets;
    for (std::size_t c = 0; c < n; ++c) {
        if (c != a && c != b && !single[a * n + c] && !single[b * n + c]) {
            targets.push_back(c);
        }
    }
    if (targets.empty()) {
        return out;
    }
    std::vector<std::uint32_t> groups;
    const auto count = pair_groups(t, a, b, groups);
    for (auto c : targets) {
        if (refines(groups, count, t.codes[c])) {
            out.push_back(FdIndex{{a, b}, c});
        }
    }
    return out;
}

std::vector<FdIndex> collect_singles(const std::vector<char>& single, std::size_t n)
{
    std::vector<FdIndex> out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (single[i * n + j]) {
                out.push_back(FdIndex{{i}, j});
            }
        }
    }
    return out;
}

bool covered(std::size_t non_null, std::size_t rows)
{
    return non_null * 100 >= static_cast<std::size_t>(kKeyCoveragePercent) * rows;
}

bool unique_single(const EncodedTable& t, std::size_t a)
{
    std::vector<char> seen(t.cardinality[a], 0);
    std::size_t non_null = 0;
    for (auto code : t.codes[a]) {
        if (code == 0) {
            continue;
        }
        ++non_null;
        if (seen[code]) {
            return false;
        }
        seen[code] = 1;
    }
    return covered(non_null, t.rows);
}

bool unique_pair(const EncodedTable& t, std::size_t a, std::size_t b)
{
    std::unordered_map<std::uint64_t, char> seen;
    seen.reserve(t.rows);
    std::size_t non_null = 0;
    for (std::size_t r = 0; r < t.rows; ++r) {
        const auto ca = t.codes[a][r];
        const auto cb = t.codes[b][r];
        if (ca == 0 || cb == 0) {
            continue;
        }
        ++non_null;
        const auto key = (static_cast<std::uint64_t>(ca) << 32U) | cb;
        if (!seen.emplace(key, 1).second) {
            return false;
        }
    }
    return covered(non_null, t.rows);
}

std::vector<KeyIndex> discover_keys_impl(const EncodedTable& t, int max_width, bool parallel)
{
    check_width(max_width, "max_width");
    const std::size_t n = t.codes.size();
    std::vector<char> single_key(n, 0);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t a = 0; a < sn; ++a) {
            single_key[static_cast<std::size_t>(a)] = unique_single(t, static_cast<std::size_t>(a)) ? 1 : 0;
        }
    } else {
        for (std::size_t a = 0; a < n; ++a) {
            single_key[a] = unique_single(t, a) ? 1 : 0;
        }
    }
    std::vector<KeyIndex> keys;
    for (std::size_t a = 0; a < n; ++a) {
        if (single_key[a]) {
            keys.push_back({a});
        }
    }
    if (max_width < 2) {
        return keys;
    }
    const auto pairs = column_pairs(n);
    std::vector<char> pair_key(pairs.size(), 0);
    const auto pn = static_cast<std::ptrdiff_t>(pairs.size());
    auto check = [&](std::size_t k) {
        const auto [a, b] = pairs[k];
        if (!single_key[a] && !single_key[b]) {
            pair_key[k] = unique_pair(t, a, b) ? 1 : 0;
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t k = 0; k < pn; ++k) {
            check(static_cast<std::size_t>(k));
        }
    } else {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            check(k);
        }
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pair_key[k]) {
            keys.push_back({pairs[k].first, pairs[k].second});
        }
    }
    return keys;
}

} // namespace

EncodedTable encode(const TypedTable& table)
{
    EncodedTable out;
    out.rows = table.row_count;
    out.codes.resize(table.columns.size());
    out.cardinality.resize(table.columns.size());
    out.has_null.resize(table.columns.size());
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        const auto& col = table.columns[j];
        std::unordered_map<std::string, std::uint32_t> dict;
        auto& codes = out.codes[j];
        codes.resize(table.row_count);
        bool any_null = false;
        for (std::size_t r = 0; r < table.row_count; ++r) {
            const auto& v = col.values[r];
            if (is_null(v)) {
                codes[r] = 0;
                any_null = true;
                continue;
            }
            auto [it, inserted] = dict.emplace(value_text(v), static_cast<std::uint32_t>(dict.size() + 1));
            codes[r] = it->second;
        }
        out.cardinality[j] = static_cast<std::uint32_t>(dict.size() + 1);
        out.has_null[j] = any_null;
    }
    return out;
}

bool refines(const std::vector<std::uint32_t>& group, std::uint32_t group_count,
             const std::vector<std::uint32_t>& dependent)
{
    std::vector<std::uint32_t> first(group_count, kUnset);
    for (std::size_t r = 0; r < group.size(); ++r) {
        auto& slot = first[group[r]];
        if (slot == kUnset) {
            slot = dependent[r];
        } else if (slot != dependent[r]) {
            return false;
        }
    }
    return true;
}

std::uint32_t pair_groups(const EncodedTable& table, std::size_t a, std::size_t b, std::vector<std::uint32_t>& out)
{
    out.resize(table.rows);
    const std::uint64_t span = static_cast<std::uint64_t>(table.cardinality[a]) * table.cardinality[b];
    std::uint32_t next = 0;
    if (span <= std::max<std::uint64_t>(1U << 16U, 4 * static_cast<std::uint64_t>(table.rows))) {
        std::vector<std::uint32_t> dense(span, kUnset);
        for (std::size_t r = 0; r < table.rows; ++r) {
            auto& slot = dense[static_cast<std::uint64_t>(table.codes[a][r]) * table.cardinality[b] + table.codes[b][r]];
            if (slot == kUnset) {
                slot = next++;
            }
            out[r] = slot;
        }
        return next;
    }
    std::unordered_map<std::uint64_t, std::uint32_t> sparse;
    sparse.reserve(table.rows);
    for (std::size_t r = 0; r < table.rows; ++r) {
        const auto key = (static_cast<std::uint64_t>(table.codes[a][r]) << 32U) | table.codes[b][r];
        auto [it, inserted] = sparse.emplace(key, next);
        if (inserted) {
            ++next;
        }
        out[r] = it->second;
    }
    return next;
}

std::vector<FdIndex> discover_fds_serial(const EncodedTable& table, int max_lhs)
{
    check_width(max_lhs, "max_lhs");
    const std::size_t n = table.codes.size();
    const auto single = single_fds(table, false);
    auto out = collect_singles(single, n);
    if (max_lhs < 2) {
        return out;
    }
    for (const auto& [a, b] : column_pairs(n)) {
        auto found = pair_fds(table, single, a, b);
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

std::vector<FdIndex> discover_fds_parallel(const EncodedTable& table, int max_lhs)
{
    check_width(max_lhs, "max_lhs");
    const std::size_t n = table.codes.size();
    const auto single = single_fds(table, true);
    auto out = collect_singles(single, n);
    if (max_lhs < 2) {
        return out;
    }
    const auto pairs = column_pairs(n);
    std::vector<std::vector<FdIndex>> per_pair(pairs.size());
    const auto pn = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < pn; ++k) {
        const auto [a, b] = pairs[static_cast<std::size_t>(k)];
        per_pair[static_cast<std::size_t>(k)] = pair_fds(table, single, a, b);
    }
    for (auto& found : per_pair) {
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

std::vector<KeyIndex> discover_keys_serial(const EncodedTable& table, int max_width)
{
    return discover_keys_impl(table, max_width, false);
}

std::vector<KeyIndex> discover_keys_parallel(const EncodedTable& table, int max_width)
{
    return discover_keys_impl(table, max_width, true);
}

namespace {

std::vector<std::string> names_of(const TypedTable& table, const std::vector<std::size_t>& idx)
{
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(table.columns[i].name);
    }
    return out;
}

} // namespace

std::vector<FunctionalDependency> discover_fds(const TypedTable& table, const DependencyOptions& options)
{
    if (table.columns.size() < 2) {
        return {};
    }
    const auto enc = encode(table);
    auto fds = discover_fds_parallel(enc, options.max_lhs);
    if (options.prune_key_determinants) {
        const auto keys = discover_keys_parallel(enc, options.max_key_width);
        std::erase_if(fds, [&](const FdIndex& fd) { return std::find(keys.begin(), keys.end(), fd.lhs) != keys.end(); });
    }
    std::vector<FunctionalDependency> out;
    out.reserve(fds.size());
    for (const auto& fd : fds) {
        out.push_back({names_of(table, fd.lhs), table.columns[fd.rhs].name});
    }
    return out;
}

std::vector<std::vector<std::string>> discover_keys(const TypedTable& table, const DependencyOptions& options)
{
    const auto enc = encode(table);
    std::vector<std::vector<std::string>> out;
    for (const auto& key : discover_keys_parallel(enc, options.max_key_width)) {
        out.push_back(names_of(table, key));
    }
    return out;
}

} // namespace d2d::profile
