#include "repute/scoping.hpp"

#include <algorithm>
#include <cmath>

namespace repute::scoping {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Lifetime: return "lifetime";
    case Mode::Incremental: return "incremental";
    case Mode::UpToDate: return "up-to-date";
    case Mode::BlockedIncremental: return "blocked-incremental";
  }
  return "up-to-date";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "lifetime") return Mode::Lifetime;
  if (text == "incremental") return Mode::Incremental;
  if (text == "up-to-date" || text == "uptodate") return Mode::UpToDate;
  if (text == "blocked-incremental" || text == "blocked") return Mode::BlockedIncremental;
  return std::nullopt;
}

void ScopingPolicy::validate() const {
  if (window < 1) throw Error(ErrorCode::InvalidPolicy, "window must be >= 1");
  if (block_size < 1) throw Error(ErrorCode::InvalidPolicy, "block_size must be >= 1");
  if (!(recency_half_life > 0.0)) {
    throw Error(ErrorCode::InvalidPolicy, "recency half-life must be > 0");
  }
}

namespace {

void check_stream(std::span<const RatingRecord> ratings, Tick origin) {
  for (std::size_t k = 0; k < ratings.size(); ++k) {
    if (ratings[k].time <= origin) {
      throw Error(ErrorCode::RecordOutsideWindow,
                  "record at t=" + std::to_string(ratings[k].time) + " is not after origin " +
                      std::to_string(origin));
    }
    if (k > 0 && record_time_less(ratings[k], ratings[k - 1])) {
      throw Error(ErrorCode::UnsortedInput, "record " + std::to_string(k) + " is out of order");
    }
  }
}

// Calendar windows (origin + (m-1)w, origin + m*w] up to the later of the last
// record and the horizon. Lifetime windows are cumulative.
std::vector<Window> aligned_windows(std::span<const RatingRecord> ratings, Tick origin, Tick width,
                                    std::optional<Tick> horizon, bool cumulative) {
  Tick last = ratings.empty() ? origin : ratings.back().time;
  if (horizon) last = std::max(last, *horizon);
  std::vector<Window> out;
  if (last <= origin) return out;
  const Tick count = (last - origin + width - 1) / width;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t next = 0;
  for (Tick m = 1; m <= count; ++m) {
    Window w;
    w.end = origin + m * width;
    const std::size_t begin = cumulative ? 0 : next;
    while (next < ratings.size() && ratings[next].time <= w.end) ++next;
    w.records.assign(ratings.begin() + static_cast<long>(begin),
                     ratings.begin() + static_cast<long>(next));
    out.push_back(std::move(w));
  }
  return out;
}

// Windows end on record times, so records sharing a tick always stay together:
// incremental groups a tick, and a block absorbs ties at its boundary.
std::vector<Window> record_windows(std::span<const RatingRecord> ratings, std::size_t block) {
  std::vector<Window> out;
  std::size_t k = 0;
  while (k < ratings.size()) {
    std::size_t stop = std::min(k + block, ratings.size());
    while (stop < ratings.size() && ratings[stop].time == ratings[stop - 1].time) ++stop;
    Window w;
    w.end = ratings[stop - 1].time;
    w.records.assign(ratings.begin() + static_cast<long>(k),
                     ratings.begin() + static_cast<long>(stop));
    out.push_back(std::move(w));
    k = stop;
  }
  return out;
}

}  // namespace

std::vector<Window> partition(std::span<const RatingRecord> ratings, const ScopingPolicy& policy,
                              Tick origin, std::optional<Tick> horizon) {
  policy.validate();
  check_stream(ratings, origin);
  switch (policy.mode) {
    case Mode::Lifetime: return aligned_windows(ratings, origin, policy.window, horizon, true);
    case Mode::UpToDate: return aligned_windows(ratings, origin, policy.window, horizon, false);
    case Mode::Incremental: return record_windows(ratings, 1);
    case Mode::BlockedIncremental: return record_windows(ratings, policy.block_size);
  }
  return {};
}

engine::PeriodResult step_window(const Window& window, const ScopingPolicy& policy,
                                 const ReputationState& prior, const ReputationState& genesis,
                                 const EngineConfig& config) {
  if (policy.mode != Mode::Lifetime) {
    return engine::compute_period(window.records, prior, window.end, config);
  }
  std::optional<engine::RecencyWeighting> recency;
  if (std::isfinite(policy.recency_half_life)) {
    recency = engine::RecencyWeighting{policy.recency_half_life, window.end};
  }
  return engine::compute_period(window.records, genesis, window.end, config, recency);
}

ScheduleResult run_schedule(std::span<const RatingRecord> ratings, const ScopingPolicy& policy,
                            const EngineConfig& config, const ReputationState& genesis,
                            std::optional<Tick> horizon) {
  const auto windows = partition(ratings, policy, genesis.as_of(), horizon);
  ScheduleResult result{genesis, {}};
  result.log.reserve(windows.size());
  for (const auto& window : windows) {
    auto period = step_window(window, policy, result.final_state, genesis, config);
    result.log.push_back(WindowLog{window.end, window.records.size(), period.state,
                                   std::move(period.differential.skipped)});
    result.final_state = std::move(period.state);
  }
  return result;
}

void insert_backdated(std::vector<RatingRecord>& log, RatingRecord record) {
  auto pos = std::upper_bound(log.begin(), log.end(), record, record_time_less);
  log.insert(pos, std::move(record));
}

Json policy_to_json(const ScopingPolicy& policy) {
  Json out;
  out["mode"] = std::string(to_string(policy.mode));
  out["window"] = policy.window;
  out["block_size"] = policy.block_size;
  if (std::isinf(policy.recency_half_life)) {
    out["half_life"] = nullptr;
  } else {
    out["half_life"] = policy.recency_half_life;
  }
  return out;
}

ScopingPolicy policy_from_json(const Json& obj, ScopingPolicy base) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidPolicy, "scoping must be a JSON object");
  try {
    for (const auto& [key, value] : obj.items()) {
      if (key == "mode") {
        const auto mode = parse_mode(value.get<std::string>());
        if (!mode) throw Error(ErrorCode::InvalidPolicy, "unknown scoping mode");
        base.mode = *mode;
      } else if (key == "window") {
        base.window = value.get<Tick>();
      } else if (key == "block_size") {
        base.block_size = value.get<std::size_t>();
      } else if (key == "half_life") {
        base.recency_half_life =
            value.is_null() ? std::numeric_limits<double>::infinity() : value.get<double>();
      } else {
        throw Error(ErrorCode::InvalidPolicy, "unknown scoping key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidPolicy, e.what());
  }
  base.validate();
  return base;
}

}  // namespace repute::scoping
