#pragma once

// Shared vocabulary: member identifiers, rating records, reputation states
// and engine configuration. Nothing here computes reputations.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "repute/error.hpp"

namespace repute {

/// Opaque nonempty token. Ordering is plain byte-wise lexicographic.
template <typename Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) {
      throw Error(ErrorCode::InvalidField, "identifier must be nonempty");
    }
  }

  const std::string& str() const noexcept { return value_; }

  friend bool operator==(const StrongId&, const StrongId&) = default;
  friend std::strong_ordering operator<=>(const StrongId& a, const StrongId& b) {
    return a.value_.compare(b.value_) <=> 0;
  }

 private:
  std::string value_;
};

struct MemberTag {};
struct AgencyTag {};
using MemberId = StrongId<MemberTag>;
using AgencyId = StrongId<AgencyTag>;

/// Abstract time unit. The simulator treats one tick as one day.
using Tick = std::int64_t;

enum class RatingKind { Endorse, Vote, Finance };

std::string_view to_string(RatingKind kind);
std::optional<RatingKind> parse_rating_kind(std::string_view text);

/// One endorsement or transactional rating event from `from` to `to`.
///
/// `weight` is the stake Q for endorsements and the financial value G for
/// votes and payments. Payments always carry value +1 with the amount in
/// `weight`. Absent aspect/category/event are empty strings; the engine
/// treats the empty key as the "default" slice.
struct RatingRecord {
  RatingKind kind = RatingKind::Vote;
  MemberId from;
  MemberId to;
  Tick time = 0;
  double value = 0.0;
  double weight = 1.0;
  std::string aspect;
  std::string category;
  std::string event;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

/// Ingestion-side record before validation: every field may be missing.
struct RawRecord {
  std::optional<std::string> kind;
  std::optional<std::string> from;
  std::optional<std::string> to;
  std::optional<Tick> time;
  std::optional<double> value;
  std::optional<double> weight;
  std::optional<std::string> aspect;
  std::optional<std::string> category;
  std::optional<std::string> event;
};

/// Values within this distance of +-1 are clamped instead of rejected.
inline constexpr double kValueClampTolerance = 1e-9;

RatingRecord validate_record(const RawRecord& raw);

/// Ordering used wherever records must be time-sorted: (time, from, to, kind).
bool record_time_less(const RatingRecord& a, const RatingRecord& b);

/// Total order over every field. Summations run in this order so results do
/// not depend on how the caller arranged its input.
bool record_canonical_less(const RatingRecord& a, const RatingRecord& b);

inline constexpr int kDefaultHashPrecision = 10;

using ReputationMap = std::map<MemberId, double>;

/// Hex SHA-256 over the canonical serialization of a reputation state.
std::string canonical_hash(Tick as_of, Tick origin, const ReputationMap& entries,
                           int precision = kDefaultHashPrecision);

/// The exact bytes that canonical_hash digests.
std::string canonical_form(Tick as_of, Tick origin, const ReputationMap& entries,
                           int precision = kDefaultHashPrecision);

/// Timestamped member -> reputation map. Immutable once built; the digest is
/// computed at construction.
class ReputationState {
 public:
  ReputationState() : ReputationState(0, 0, {}) {}
  ReputationState(Tick origin, Tick as_of, ReputationMap entries,
                  int precision = kDefaultHashPrecision);

  static ReputationState genesis(Tick origin, int precision = kDefaultHashPrecision) {
    return ReputationState(origin, origin, {}, precision);
  }

  Tick origin() const noexcept { return origin_; }
  Tick as_of() const noexcept { return as_of_; }
  const ReputationMap& entries() const noexcept { return entries_; }
  const std::string& hash() const noexcept { return hash_; }
  int precision() const noexcept { return precision_; }

  std::optional<double> find(const MemberId& member) const;
  double value_or(const MemberId& member, double fallback) const;

 private:
  Tick origin_;
  Tick as_of_;
  ReputationMap entries_;
  int precision_;
  std::string hash_;
};

/// Hex SHA-256 of arbitrary bytes; used for states, manifests and snapshots.
std::string sha256_hex(std::string_view bytes);

enum class NoEvidenceRule {
  DecayToDefault,  // blend toward default_reputation
  Hold,            // keep the previous value untouched
};

/// Every free parameter of the reputation model.
struct EngineConfig {
  double default_reputation = 0.5;
  std::map<std::string, double> aspect_weights;  // unlisted aspects weigh 1
  double endorse_blend = 1.0;
  double transact_blend = 1.0;
  bool use_log_differential = false;
  double decay_prev = 1.0;
  double decay_new = 1.0;
  double rater_weight_floor = 0.0;
  bool financial_log_normalize = true;
  int hash_precision = kDefaultHashPrecision;
  NoEvidenceRule no_evidence = NoEvidenceRule::DecayToDefault;

  double aspect_weight(const std::string& aspect) const;
  /// Throws InvalidConfig when an invariant fails.
  void validate() const;
};

}  // namespace repute

template <typename Tag>
struct std::hash<repute::StrongId<Tag>> {
  std::size_t operator()(const repute::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
