#include "repute/core.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <tuple>

namespace repute {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SelfRating: return "SelfRating";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonPositiveAmount: return "NonPositiveAmount";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::RecordOutsideWindow: return "RecordOutsideWindow";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::InvalidPolicy: return "InvalidPolicy";
    case ErrorCode::DuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::RoundClosed: return "RoundClosed";
    case ErrorCode::LateSubmission: return "LateSubmission";
    case ErrorCode::UnknownAgencyReputation: return "UnknownAgencyReputation";
    case ErrorCode::NoEligibleProposer: return "NoEligibleProposer";
    case ErrorCode::RoundNotValid: return "RoundNotValid";
    case ErrorCode::UnreadableInput: return "UnreadableInput";
    case ErrorCode::SnapshotConflict: return "SnapshotConflict";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

std::string_view to_string(RatingKind kind) {
  switch (kind) {
    case RatingKind::Endorse: return "endorse";
    case RatingKind::Vote: return "vote";
    case RatingKind::Finance: return "finance";
  }
  return "vote";
}

std::optional<RatingKind> parse_rating_kind(std::string_view text) {
  if (text == "endorse") return RatingKind::Endorse;
  if (text == "vote") return RatingKind::Vote;
  if (text == "finance") return RatingKind::Finance;
  return std::nullopt;
}

namespace {

template <typename T>
const T& require(const std::optional<T>& field, const char* name) {
  if (!field) {
    throw Error(ErrorCode::MissingField, std::string("missing field '") + name + "'");
  }
  return *field;
}

std::string optional_key(const std::optional<std::string>& field, const char* name) {
  if (!field) return {};
  if (field->empty()) {
    throw Error(ErrorCode::InvalidField, std::string("field '") + name + "' is empty");
  }
  return *field;
}

double clamp_rating_value(double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::ValueOutOfRange, "rating value is not finite");
  }
  if (value > 1.0) {
    if (value - 1.0 <= kValueClampTolerance) return 1.0;
    throw Error(ErrorCode::ValueOutOfRange, "rating value " + std::to_string(value) + " > 1");
  }
  if (value < -1.0) {
    if (-1.0 - value <= kValueClampTolerance) return -1.0;
    throw Error(ErrorCode::ValueOutOfRange, "rating value " + std::to_string(value) + " < -1");
  }
  return value;
}

}  // namespace

RatingRecord validate_record(const RawRecord& raw) {
  const auto& kind_text = require(raw.kind, "kind");
  const auto kind = parse_rating_kind(kind_text);
  if (!kind) {
    throw Error(ErrorCode::InvalidField, "unknown rating kind '" + kind_text + "'");
  }
  const auto& from = require(raw.from, "from");
  const auto& to = require(raw.to, "to");
  if (from.empty() || to.empty()) {
    throw Error(ErrorCode::InvalidField, "member ids must be nonempty");
  }
  if (from == to) {
    throw Error(ErrorCode::SelfRating, "member '" + from + "' rates itself");
  }
  const Tick time = require(raw.time, "time");
  if (time < 0) {
    throw Error(ErrorCode::InvalidField, "time must be non-negative");
  }

  RatingRecord rec;
  rec.kind = *kind;
  rec.from = MemberId(from);
  rec.to = MemberId(to);
  rec.time = time;
  rec.aspect = optional_key(raw.aspect, "aspect");
  rec.category = optional_key(raw.category, "category");
  rec.event = optional_key(raw.event, "event");

  if (rec.kind == RatingKind::Finance) {
    // A payment is an implicit positive rating; the amount is its weight.
    rec.value = raw.value ? clamp_rating_value(*raw.value) : 1.0;
    if (rec.value != 1.0) {
      throw Error(ErrorCode::ValueOutOfRange, "finance records carry value +1");
    }
    rec.weight = require(raw.weight, "weight");
    if (!std::isfinite(rec.weight) || rec.weight <= 0.0) {
      throw Error(ErrorCode::NonPositiveAmount, "finance amount must be > 0");
    }
  } else {
    rec.value = clamp_rating_value(require(raw.value, "value"));
    rec.weight = raw.weight.value_or(1.0);
    if (!std::isfinite(rec.weight)) {
      throw Error(ErrorCode::NegativeWeight, "weight is not finite");
    }
    if (rec.weight < 0.0) {
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(rec.weight) + " < 0");
    }
  }
  return rec;
}

bool record_time_less(const RatingRecord& a, const RatingRecord& b) {
  return std::tie(a.time, a.from, a.to, a.kind) < std::tie(b.time, b.from, b.to, b.kind);
}

bool record_canonical_less(const RatingRecord& a, const RatingRecord& b) {
  return std::tie(a.time, a.from, a.to, a.kind, a.value, a.weight, a.aspect, a.category,
                  a.event) < std::tie(b.time, b.from, b.to, b.kind, b.value, b.weight,
                                      b.aspect, b.category, b.event);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string canonical_form(Tick as_of, Tick origin, const ReputationMap& entries,
                           int precision) {
  if (precision < 0 || precision > 17) {
    throw Error(ErrorCode::InvalidConfig, "hash precision must be within [0, 17]");
  }
  std::string out = "repute-state/1\n";
  out += "as_of=" + std::to_string(as_of) + "\n";
  out += "origin=" + std::to_string(origin) + "\n";
  out += "precision=" + std::to_string(precision) + "\n";
  char buf[64];
  for (const auto& [member, value] : entries) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteValue, "entry for '" + member.str() + "' is not finite");
    }
    std::snprintf(buf, sizeof buf, "%.*f", precision, value);
    std::string_view text(buf);
    // -0.000... and 0.000... denote the same rounded value
    if (text.front() == '-' && text.find_first_not_of("-0.") == std::string_view::npos) {
      text.remove_prefix(1);
    }
    out += std::to_string(member.str().size());
    out += ':';
    out += member.str();
    out += '=';
    out += text;
    out += '\n';
  }
  return out;
}

std::string canonical_hash(Tick as_of, Tick origin, const ReputationMap& entries,
                           int precision) {
  return sha256_hex(canonical_form(as_of, origin, entries, precision));
}

ReputationState::ReputationState(Tick origin, Tick as_of, ReputationMap entries, int precision)
    : origin_(origin), as_of_(as_of), entries_(std::move(entries)), precision_(precision) {
  if (origin_ < 0 || as_of_ < origin_) {
    throw Error(ErrorCode::InvalidState, "state requires 0 <= origin <= as_of");
  }
  for (const auto& [member, value] : entries_) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteValue, "entry for '" + member.str() + "' is not finite");
    }
    if (value < -1.0 || value > 1.0) {
      throw Error(ErrorCode::InvalidState,
                  "entry for '" + member.str() + "' lies outside [-1, 1]");
    }
  }
  hash_ = canonical_hash(as_of_, origin_, entries_, precision_);
}

std::optional<double> ReputationState::find(const MemberId& member) const {
  auto it = entries_.find(member);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double ReputationState::value_or(const MemberId& member, double fallback) const {
  return find(member).value_or(fallback);
}

double EngineConfig::aspect_weight(const std::string& aspect) const {
  auto it = aspect_weights.find(aspect);
  return it == aspect_weights.end() ? 1.0 : it->second;
}

void EngineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(default_reputation >= 0.0 && default_reputation <= 1.0)) {
    fail("default_reputation must lie in [0, 1]");
  }
  if (!(endorse_blend >= 0.0) || !(transact_blend >= 0.0) ||
      !(endorse_blend + transact_blend > 0.0)) {
    fail("blend factors must be >= 0 with a positive sum");
  }
  if (!(decay_prev > 0.0) || !(decay_new > 0.0)) fail("decay factors must be > 0");
  if (!(rater_weight_floor >= 0.0)) fail("rater_weight_floor must be >= 0");
  if (hash_precision < 0 || hash_precision > 17) fail("hash_precision must lie in [0, 17]");
  bool any_positive = aspect_weights.empty();
  for (const auto& [aspect, w] : aspect_weights) {
    if (!(w >= 0.0)) fail("aspect weight for '" + aspect + "' must be >= 0");
    if (w > 0.0) any_positive = true;
  }
  if (!any_positive) fail("at least one aspect weight must be > 0");
}

}  // namespace repute
