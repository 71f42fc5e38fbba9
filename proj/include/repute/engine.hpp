#pragma once

// Incremental reputation computation for one recalculation window
// (t_{n-1}, t_n]. Every function is pure.
//
//   ratings --normalize_financial--> differential_endorsing / _transactional
//           --blend_differential--> dP --(log_differential)--> normalize
//           --update_reputation--> R(t_n)

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "repute/core.hpp"

namespace repute::engine {

/// A (member, aspect[, category, event]) cell that produced no value.
struct SkippedCell {
  enum class Reason { ZeroDenominator, ZeroAspectWeight };

  MemberId member;
  std::string aspect;
  std::string category;
  std::string event;
  Reason reason = Reason::ZeroDenominator;

  friend bool operator==(const SkippedCell&, const SkippedCell&) = default;
};

std::string_view to_string(SkippedCell::Reason reason);

struct Differential {
  ReputationMap values;
  std::vector<SkippedCell> skipped;
};

using CategoryKey = std::pair<MemberId, std::string>;
using AspectKey = std::pair<MemberId, std::string>;
using AspectEventKey = std::tuple<MemberId, std::string, std::string>;

/// Slice-restricted transactional differentials. Empty strings are the
/// default aspect/category/event.
struct FineGrained {
  std::map<CategoryKey, double> by_category;         // dF_ic
  std::map<AspectKey, double> by_aspect;             // dF_ik
  std::map<AspectEventKey, double> by_aspect_event;  // dF_ike
  std::vector<SkippedCell> skipped;
};

struct DifferentialResult {
  ReputationMap endorsing;      // dS
  ReputationMap transactional;  // dF
  ReputationMap blended;        // dP
  ReputationMap normalized;     // P (after optional log compression)
  FineGrained fine_grained;
  std::vector<SkippedCell> skipped;
};

/// log10(1 + x) / max log10(1 + x) over the batch; the largest maps to 1.
std::vector<double> normalize_financial(std::span<const double> amounts);

/// max(R_j, floor), with R_j taken from `prior` or the default reputation.
double rater_weight(const MemberId& rater, const ReputationState& prior,
                    const EngineConfig& config);

/// dS_i: aspect-blended, rater-weighted mean of endorsement values.
/// Every record must be an endorsement.
Differential differential_endorsing(std::span<const RatingRecord> ratings,
                                    const ReputationState& prior, const EngineConfig& config);

/// dF_i: same kernel over votes and payments, pooled across categories.
/// Payment amounts should already be normalized when the config asks for it.
Differential differential_transactional(std::span<const RatingRecord> ratings,
                                        const ReputationState& prior,
                                        const EngineConfig& config);

FineGrained differential_fine_grained(std::span<const RatingRecord> ratings,
                                      const ReputationState& prior, const EngineConfig& config);

/// (S*dS + F*dF)/(S + F); a member with only one component keeps that one.
ReputationMap blend_differential(const ReputationMap& endorsing,
                                 const ReputationMap& transactional, const EngineConfig& config);

/// Divides by max |dP|. An all-zero map stays all zero.
ReputationMap normalize_differential(const ReputationMap& differential);

double log_differential(double value);
ReputationMap log_differential(const ReputationMap& differential);

/// Time-weighted blend of the prior reputation with the new differential.
/// Throws NonMonotonicTime unless t_n > prior.as_of().
ReputationState update_reputation(const ReputationState& prior, const ReputationMap& normalized,
                                  Tick t_n, const EngineConfig& config);

/// Extra weight 2^(-(reference - t) / half_life) for lifetime recomputation.
struct RecencyWeighting {
  double half_life = 0.0;
  Tick reference = 0;

  double factor(Tick t) const;
};

struct PeriodResult {
  ReputationState state;
  DifferentialResult differential;
};

/// Runs the full pipeline for ratings stamped in (prior.as_of, t_n].
/// The result depends only on the multiset of ratings, not their order.
PeriodResult compute_period(std::span<const RatingRecord> ratings, const ReputationState& prior,
                            Tick t_n, const EngineConfig& config,
                            std::optional<RecencyWeighting> recency = std::nullopt);

}  // namespace repute::engine
