#pragma once

// Wire formats. See docs/formats.md for the byte-level description.

#include <string>
#include <string_view>

#include "json.hpp"
#include "repute/core.hpp"

namespace repute {

using Json = nlohmann::ordered_json;

/// One rating as a single-line JSON object (keys in fixed order).
std::string record_to_jsonl(const RatingRecord& rec);
Json record_to_json(const RatingRecord& rec);

/// Parses and validates; structural problems raise MissingField/InvalidField.
RatingRecord record_from_json(const Json& obj);
RawRecord raw_record_from_json(const Json& obj);

Json state_to_json(const ReputationState& state);
std::string state_to_snapshot(const ReputationState& state);

/// Rebuilds a state and checks the stored hash. Throws HashMismatch when the
/// recomputed digest differs or the document is malformed.
ReputationState state_from_json(const Json& doc);
ReputationState state_from_snapshot(std::string_view text);

Json config_to_json(const EngineConfig& config);
/// Overlays keys present in `obj` onto `base`; unknown keys raise InvalidConfig.
EngineConfig config_from_json(const Json& obj, EngineConfig base = {});

}  // namespace repute
