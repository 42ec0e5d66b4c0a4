#pragma once

#include "d2d/ingest/table.hpp"
#include "d2d/profile/dependencies.hpp"
#include "d2d/profile/types.hpp"

#include "json.hpp"

#include <string>

namespace d2d::profile {

inline constexpr int kProfileSchemaVersion = 1;
inline constexpr std::size_t kTopValues = 10;
inline constexpr std::size_t kSynopsisMaxFds = 40;

// Statistics over non-null values. Frequency ties in top_values are broken by
// lexicographic order of the value.
ColumnProfile profile_column(const TypedColumn& column);

struct ProfileOptions {
    DependencyOptions dependencies;
};

// Deterministic synopsis; narrative is left empty.
TableProfile build_profile(const TypedTable& table, const ProfileOptions& options = {});
TableProfile build_profile(const ingest::RawTable& table, const ProfileOptions& options = {});

nlohmann::ordered_json to_json(const TableProfile& profile);
TableProfile profile_from_json(const nlohmann::json& j);

// Compact plain-text rendering embedded in every LLM prompt.
std::string synopsis(const TableProfile& profile);

} // namespace d2d::profile
