// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"
#include <string>

#include "molmimo/harness.hpp"

namespace molmimo {

using json = nlohmann::json;

/// Applies a partial JSON object onto `cfg`. Unknown keys and ill-typed
/// values raise InvalidConfig. Changing "mode" without "timing.symbol_period"
/// switches to that mode's calibrated symbol period.
void apply_overrides(RunConfig& cfg, const json& overrides);

/// Calibrated defaults (mode from the object, MIMO if absent) plus overrides.
RunConfig config_from_json(const json& j);

json to_json(const RunConfig& cfg);
json to_json(const LinkReport& report);
json to_json(const ComparisonReport& report);
json to_json(const ChannelValidation& v);

/// Compact, key-sorted serialisation; identical reports give identical bytes.
std::string dump(const json& j);

} // namespace molmimo
