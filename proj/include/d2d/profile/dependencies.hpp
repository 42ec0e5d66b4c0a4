#pragma once

#include "d2d/profile/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace d2d::profile {

// Dictionary-encoded view of a typed table. Code 0 is reserved for null, so
// nulls form one equivalence class (nulls compare equal to nulls only).
struct EncodedTable {
    std::size_t rows = 0;
    std::vector<std::vector<std::uint32_t>> codes; // [column][row]
    std::vector<std::uint32_t> cardinality;       // codes in use per column, including the null code
    std::vector<bool> has_null;
};

EncodedTable encode(const TypedTable& table);

struct FdIndex {
    std::vector<std::size_t> lhs; // sorted column indices, size 1..2
    std::size_t rhs = 0;

    friend bool operator==(const FdIndex&, const FdIndex&) = default;
    friend auto operator<=>(const FdIndex&, const FdIndex&) = default;
};

using KeyIndex = std::vector<std::size_t>;

// Rows free of nulls in a key's columns must reach this share for the key to count.
inline constexpr int kKeyCoveragePercent = 95;

// Minimal exact FDs with |lhs| <= max_lhs by partition refinement. Output is
// ordered by (lhs size, lhs, rhs). The parallel and serial variants return
// identical vectors.
std::vector<FdIndex> discover_fds_parallel(const EncodedTable& table, int max_lhs = 2);
std::vector<FdIndex> discover_fds_serial(const EncodedTable& table, int max_lhs = 2);

// Minimal candidate keys with width <= max_width, ordered by (width, columns).
std::vector<KeyIndex> discover_keys_parallel(const EncodedTable& table, int max_width = 2);
std::vector<KeyIndex> discover_keys_serial(const EncodedTable& table, int max_width = 2);

// True when the partition induced by `group` refines the one induced by `dependent`.
bool refines(const std::vector<std::uint32_t>& group, std::uint32_t group_count,
             const std::vector<std::uint32_t>& dependent);

// Dense group ids for the column pair (a, b); returns the group count.
std::uint32_t pair_groups(const EncodedTable& table, std::size_t a, std::size_t b, std::vector<std::uint32_t>& out);

struct DependencyOptions {
    int max_lhs = 2;
    int max_key_width = 2;
    // Drop FDs whose determinant equals a reported candidate key.
    bool prune_key_determinants = false;
};

std::vector<FunctionalDependency> discover_fds(const TypedTable& table, const DependencyOptions& options = {});
std::vector<std::vector<std::string>> discover_keys(const TypedTable& table, const DependencyOptions& options = {});

} // namespace d2d::profile
