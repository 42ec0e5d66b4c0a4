#pragma once

#include "d2d/common/diagnostics.hpp"
#include "d2d/jsonschema/schema.hpp"
#include "d2d/llm/gateway.hpp"
#include "d2d/llm/settings.hpp"
#include "d2d/profile/types.hpp"

namespace d2d::profile {

inline constexpr const char* kNarrativeSchemaTag = "profile/narrative";

const jsonschema::JsonSchema& narrative_schema();

llm::ChatRequest narrative_request(const TableProfile& profile, const llm::StageModel& model);

// Asks the model for competing readings of the table, a critique of each and
// a final committed reading; only the committed reading becomes the
// narrative. A reply that never validates leaves the profile unchanged and
// records a warning. Gateway errors propagate.
TableProfile enrich_profile(const TableProfile& profile, llm::Gateway& gateway, const llm::StageModel& model,
                            Warnings& warnings);

} // namespace d2d::profile
