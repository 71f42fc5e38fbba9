#pragma once

// Temporal scoping: which ratings feed each recalculation and when it runs.

#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "repute/core.hpp"
#include "repute/engine.hpp"
#include "repute/json_io.hpp"

namespace repute::scoping {

enum class Mode {
  Lifetime,            // full recomputation from t0, recency-weighted
  Incremental,         // one recalculation per transaction tick
  UpToDate,            // fixed-width calendar windows aligned to t0
  BlockedIncremental,  // fixed-size blocks of consecutive records
};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct ScopingPolicy {
  Mode mode = Mode::UpToDate;
  /// Window width for UpToDate; recomputation cadence for Lifetime.
  Tick window = 1;
  std::size_t block_size = 1;
  double recency_half_life = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct Window {
  Tick end = 0;
  /// For Lifetime this holds every record up to `end`.
  std::vector<RatingRecord> records;
};

/// Splits a time-sorted stream into recalculation windows after `origin`.
/// `horizon` extends calendar-aligned modes with trailing empty windows.
/// Throws UnsortedInput, or RecordOutsideWindow for records at or before origin.
std::vector<Window> partition(std::span<const RatingRecord> ratings, const ScopingPolicy& policy,
                              Tick origin, std::optional<Tick> horizon = std::nullopt);

struct WindowLog {
  Tick end = 0;
  std::size_t record_count = 0;
  ReputationState state;
  std::vector<engine::SkippedCell> skipped;
};

struct ScheduleResult {
  ReputationState final_state;
  std::vector<WindowLog> log;
};

/// Computes the state for one window. `prior` is the previous window's state
/// and `genesis` the starting state; Lifetime windows restart from genesis.
engine::PeriodResult step_window(const Window& window, const ScopingPolicy& policy,
                                 const ReputationState& prior, const ReputationState& genesis,
                                 const EngineConfig& config);

ScheduleResult run_schedule(std::span<const RatingRecord> ratings, const ScopingPolicy& policy,
                            const EngineConfig& config, const ReputationState& genesis,
                            std::optional<Tick> horizon = std::nullopt);

/// Keys: mode, window, block_size, half_life (null means infinite).
Json policy_to_json(const ScopingPolicy& policy);
/// Overlays keys present in `obj`; unknown keys raise InvalidPolicy.
ScopingPolicy policy_from_json(const Json& obj, ScopingPolicy base = {});

/// Inserts a late-arriving record at its sorted position.
void insert_backdated(std::vector<RatingRecord>& log, RatingRecord record);

}  // namespace repute::scoping
