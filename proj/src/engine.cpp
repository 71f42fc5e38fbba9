#include "repute/engine.hpp"

#include <algorithm>
#include <cmath>

namespace repute::engine {

std::string_view to_string(SkippedCell::Reason reason) {
  switch (reason) {
    case SkippedCell::Reason::ZeroDenominator: return "ZeroDenominator";
    case SkippedCell::Reason::ZeroAspectWeight: return "ZeroAspectWeight";
  }
  return "ZeroDenominator";
}

namespace {

struct Accumulator {
  double numerator = 0.0;
  double denominator = 0.0;
};

// aspect -> weighted sums
using AspectCells = std::map<std::string, Accumulator>;

std::vector<RatingRecord> canonical_copy(std::span<const RatingRecord> ratings) {
  std::vector<RatingRecord> sorted(ratings.begin(), ratings.end());
  std::sort(sorted.begin(), sorted.end(), record_canonical_less);
  return sorted;
}

void accumulate(Accumulator& cell, const RatingRecord& rec, double rater) {
  cell.numerator += rec.value * rec.weight * rater;
  cell.denominator += rec.weight * rater;
}

// Blends per-aspect weighted means with H_k. `make_skip` builds the report
// entry for a key/aspect pair; aspect is empty for ZeroAspectWeight.
template <typename Key, typename MakeSkip>
std::map<Key, double> blend_aspects(const std::map<Key, AspectCells>& cells,
                                    const EngineConfig& config,
                                    std::vector<SkippedCell>& skipped, MakeSkip make_skip) {
  std::map<Key, double> out;
  for (const auto& [key, aspects] : cells) {
    double weighted = 0.0;
    double total_weight = 0.0;
    bool any_cell = false;
    for (const auto& [aspect, cell] : aspects) {
      if (cell.denominator == 0.0) {
        skipped.push_back(make_skip(key, aspect, SkippedCell::Reason::ZeroDenominator));
        continue;
      }
      any_cell = true;
      const double h = config.aspect_weight(aspect);
      weighted += h * (cell.numerator / cell.denominator);
      total_weight += h;
    }
    if (!any_cell) continue;
    if (total_weight == 0.0) {
      skipped.push_back(make_skip(key, std::string(), SkippedCell::Reason::ZeroAspectWeight));
      continue;
    }
    out.emplace(key, weighted / total_weight);
  }
  return out;
}

template <typename Key, typename MakeSkip>
std::map<Key, double> pooled_means(const std::map<Key, Accumulator>& cells,
                                   std::vector<SkippedCell>& skipped, MakeSkip make_skip) {
  std::map<Key, double> out;
  for (const auto& [key, cell] : cells) {
    if (cell.denominator == 0.0) {
      skipped.push_back(make_skip(key));
      continue;
    }
    out.emplace(key, cell.numerator / cell.denominator);
  }
  return out;
}

Differential member_differential(std::span<const RatingRecord> ratings,
                                 const ReputationState& prior, const EngineConfig& config) {
  std::map<MemberId, AspectCells> cells;
  for (const auto& rec : canonical_copy(ratings)) {
    accumulate(cells[rec.to][rec.aspect], rec, rater_weight(rec.from, prior, config));
  }
  Differential result;
  auto make_skip = [](const MemberId& member, const std::string& aspect,
                      SkippedCell::Reason reason) {
    return SkippedCell{member, aspect, {}, {}, reason};
  };
  result.values = blend_aspects(cells, config, result.skipped, make_skip);
  return result;
}

void require_kinds(std::span<const RatingRecord> ratings, bool endorse, const char* op) {
  for (const auto& rec : ratings) {
    if ((rec.kind == RatingKind::Endorse) != endorse) {
      throw Error(ErrorCode::InvalidField,
                  std::string(op) + " received a " + std::string(to_string(rec.kind)) +
                      " record");
    }
  }
}

}  // namespace

std::vector<double> normalize_financial(std::span<const double> amounts) {
  if (amounts.empty()) {
    throw Error(ErrorCode::EmptyBatch, "no financial amounts to normalize");
  }
  std::vector<double> out;
  out.reserve(amounts.size());
  double max_log = 0.0;
  for (double amount : amounts) {
    if (!(amount > 0.0) || !std::isfinite(amount)) {
      throw Error(ErrorCode::NonPositiveAmount, "financial amount must be finite and > 0");
    }
    out.push_back(std::log10(1.0 + amount));
    max_log = std::max(max_log, out.back());
  }
  for (double& v : out) v /= max_log;
  return out;
}

double rater_weight(const MemberId& rater, const ReputationState& prior,
                    const EngineConfig& config) {
  const double reputation = prior.value_or(rater, config.default_reputation);
  return std::max(reputation, config.rater_weight_floor);
}

Differential differential_endorsing(std::span<const RatingRecord> ratings,
                                    const ReputationState& prior, const EngineConfig& config) {
  require_kinds(ratings, true, "differential_endorsing");
  // Endorsements carry no category dimension.
  return member_differential(ratings, prior, config);
}

Differential differential_transactional(std::span<const RatingRecord> ratings,
                                        const ReputationState& prior,
                                        const EngineConfig& config) {
  require_kinds(ratings, false, "differential_transactional");
  return member_differential(ratings, prior, config);
}

FineGrained differential_fine_grained(std::span<const RatingRecord> ratings,
                                      const ReputationState& prior, const EngineConfig& config) {
  require_kinds(ratings, false, "differential_fine_grained");

  std::map<CategoryKey, AspectCells> by_category;
  std::map<AspectKey, Accumulator> by_aspect;
  std::map<AspectEventKey, Accumulator> by_aspect_event;
  for (const auto& rec : canonical_copy(ratings)) {
    const double w = rater_weight(rec.from, prior, config);
    accumulate(by_category[{rec.to, rec.category}][rec.aspect], rec, w);
    accumulate(by_aspect[{rec.to, rec.aspect}], rec, w);
    accumulate(by_aspect_event[{rec.to, rec.aspect, rec.event}], rec, w);
  }

  FineGrained out;
  out.by_category = blend_aspects(
      by_category, config, out.skipped,
      [](const CategoryKey& key, const std::string& aspect, SkippedCell::Reason reason) {
        return SkippedCell{key.first, aspect, key.second, {}, reason};
      });
  out.by_aspect = pooled_means(by_aspect, out.skipped, [](const AspectKey& key) {
    return SkippedCell{key.first, key.second, {}, {}, SkippedCell::Reason::ZeroDenominator};
  });
  out.by_aspect_event = pooled_means(by_aspect_event, out.skipped, [](const AspectEventKey& key) {
    return SkippedCell{std::get<0>(key), std::get<1>(key), {}, std::get<2>(key),
                       SkippedCell::Reason::ZeroDenominator};
  });
  return out;
}

ReputationMap blend_differential(const ReputationMap& endorsing,
                                 const ReputationMap& transactional, const EngineConfig& config) {
  const double s = config.endorse_blend;
  const double f = config.transact_blend;
  if (!(s >= 0.0 && f >= 0.0 && s + f > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "blend factors must be >= 0 with a positive sum");
  }
  ReputationMap out;
  for (const auto& [member, ds] : endorsing) {
    auto it = transactional.find(member);
    if (it != transactional.end()) {
      out.emplace(member, (s * ds + f * it->second) / (s + f));
    } else if (s > 0.0) {
      out.emplace(member, ds);
    }
  }
  for (const auto& [member, df] : transactional) {
    if (!endorsing.contains(member) && f > 0.0) out.emplace(member, df);
  }
  return out;
}

ReputationMap normalize_differential(const ReputationMap& differential) {
  double max_abs = 0.0;
  for (const auto& [member, value] : differential) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteValue, "differential for '" + member.str() + "'");
    }
    max_abs = std::max(max_abs, std::abs(value));
  }
  ReputationMap out;
  for (const auto& [member, value] : differential) {
    out.emplace(member, max_abs == 0.0 ? 0.0 : value / max_abs);
  }
  return out;
}

double log_differential(double value) {
  if (value == 0.0) return 0.0;
  return std::copysign(std::log10(1.0 + std::abs(value)), value);
}

ReputationMap log_differential(const ReputationMap& differential) {
  ReputationMap out;
  for (const auto& [member, value] : differential) out.emplace(member, log_differential(value));
  return out;
}

ReputationState update_reputation(const ReputationState& prior, const ReputationMap& normalized,
                                  Tick t_n, const EngineConfig& config) {
  if (t_n <= prior.as_of()) {
    throw Error(ErrorCode::NonMonotonicTime, "t_n=" + std::to_string(t_n) +
                                                 " must exceed prior as_of=" +
                                                 std::to_string(prior.as_of()));
  }
  const double earned = config.decay_prev * static_cast<double>(prior.as_of() - prior.origin());
  const double latest = config.decay_new * static_cast<double>(t_n - prior.as_of());
  auto blend = [&](double previous, double differential) {
    const double r = (earned * previous + latest * differential) / (earned + latest);
    return std::clamp(r, -1.0, 1.0);
  };

  ReputationMap next;
  for (const auto& [member, p] : normalized) {
    next.emplace(member, blend(prior.value_or(member, config.default_reputation), p));
  }
  for (const auto& [member, previous] : prior.entries()) {
    if (next.contains(member)) continue;
    next.emplace(member, config.no_evidence == NoEvidenceRule::Hold
                             ? previous
                             : blend(previous, config.default_reputation));
  }
  return ReputationState(prior.origin(), t_n, std::move(next), config.hash_precision);
}

double RecencyWeighting::factor(Tick t) const {
  if (std::isinf(half_life)) return 1.0;
  return std::exp2(-static_cast<double>(reference - t) / half_life);
}

PeriodResult compute_period(std::span<const RatingRecord> ratings, const ReputationState& prior,
                            Tick t_n, const EngineConfig& config,
                            std::optional<RecencyWeighting> recency) {
  config.validate();
  if (t_n <= prior.as_of()) {
    throw Error(ErrorCode::NonMonotonicTime, "t_n=" + std::to_string(t_n) +
                                                 " must exceed prior as_of=" +
                                                 std::to_string(prior.as_of()));
  }
  if (recency && !(recency->half_life > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "recency half-life must be > 0");
  }

  std::vector<RatingRecord> records = canonical_copy(ratings);
  for (const auto& rec : records) {
    if (rec.time <= prior.as_of() || rec.time > t_n) {
      throw Error(ErrorCode::RecordOutsideWindow,
                  "record at t=" + std::to_string(rec.time) + " outside (" +
                      std::to_string(prior.as_of()) + ", " + std::to_string(t_n) + "]");
    }
  }

  if (config.financial_log_normalize) {
    std::vector<double> amounts;
    for (const auto& rec : records) {
      if (rec.kind == RatingKind::Finance) amounts.push_back(rec.weight);
    }
    if (!amounts.empty()) {
      const auto normalized = normalize_financial(amounts);
      std::size_t next = 0;
      for (auto& rec : records) {
        if (rec.kind == RatingKind::Finance) rec.weight = normalized[next++];
      }
    }
  }
  if (recency) {
    for (auto& rec : records) rec.weight *= recency->factor(rec.time);
  }

  std::vector<RatingRecord> endorsements;
  std::vector<RatingRecord> transactions;
  for (auto& rec : records) {
    (rec.kind == RatingKind::Endorse ? endorsements : transactions).push_back(std::move(rec));
  }

  DifferentialResult diff;
  auto ds = differential_endorsing(endorsements, prior, config);
  auto df = differential_transactional(transactions, prior, config);
  diff.endorsing = std::move(ds.values);
  diff.transactional = std::move(df.values);
  diff.skipped = std::move(ds.skipped);
  diff.skipped.insert(diff.skipped.end(), df.skipped.begin(), df.skipped.end());
  diff.fine_grained = differential_fine_grained(transactions, prior, config);

  diff.blended = blend_differential(diff.endorsing, diff.transactional, config);
  diff.normalized = normalize_differential(
      config.use_log_differential ? log_differential(diff.blended) : diff.blended);

  auto state = update_reputation(prior, diff.normalized, t_n, config);
  return PeriodResult{std::move(state), std::move(diff)};
}

}  // namespace repute::engine
