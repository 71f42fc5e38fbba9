#pragma once

// Synthetic societies: generate rating logs from behavioral archetypes, run
// them through scoping, engine and consensus, and score the outcome.
// Scenario file schema: docs/formats.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repute/consensus.hpp"
#include "repute/core.hpp"
#include "repute/json_io.hpp"
#include "repute/scoping.hpp"

namespace repute::simnet {

enum class Archetype { Honest, SybilRing, CollusionClique, Spammer };

std::string_view to_string(Archetype archetype);
std::optional<Archetype> parse_archetype(std::string_view text);

/// Draws a value in [0, 1]. Pareto draws are scale * u^(-1/alpha), capped at 1.
struct Distribution {
  enum class Kind { Fixed, Uniform, Pareto };
  Kind kind = Kind::Fixed;
  double value = 1.0;  // Fixed
  double low = 0.0;    // Uniform
  double high = 1.0;
  double alpha = 1.5;  // Pareto
  double scale = 1.0;
};

struct Population {
  Archetype archetype = Archetype::Honest;
  std::string prefix;  // members are <prefix>-000, <prefix>-001, ...
  std::size_t count = 0;
  Distribution quality;
  /// Genesis reputation; members without one start outside the state.
  std::optional<double> initial_reputation;
  /// Expected ratings per member per tick; the fractional part is a coin flip.
  double rate = 1.0;
  double noise = 0.0;  // std dev of the normal noise on honest values
  RatingKind kind = RatingKind::Vote;
  /// Financial weight G of votes, or the payment amount for finance records.
  /// Unbounded Pareto here gives heavy tails.
  Distribution weight;
  bool honest_targets_only = true;  // Honest and Spammer target choice
};

struct FaultInjection {
  std::size_t agency = 1;  // 1-based position among the agencies
  double delta = 1e-6;     // added to the first member's reputation
};

struct RunOptions {
  std::size_t agencies = 3;
  std::size_t quorum = 2;
  std::int64_t reward = 1000;  // units per valid round
  std::optional<FaultInjection> fault;
};

struct ScenarioSpec {
  std::string name;
  std::uint64_t seed = 0;
  Tick ticks = 1;
  std::vector<Population> populations;
  EngineConfig engine;
  scoping::ScopingPolicy scoping;
  RunOptions run;

  /// Throws InvalidSpec.
  void validate() const;
};

ScenarioSpec spec_from_json(const Json& doc);
Json spec_to_json(const ScenarioSpec& spec);

struct Member {
  MemberId id;
  Archetype archetype = Archetype::Honest;
  std::size_t population = 0;
  double quality = 0.0;
};

/// Members in population order, with qualities drawn from each member's own stream.
std::vector<Member> members(const ScenarioSpec& spec);
ReputationState genesis_state(const ScenarioSpec& spec);

/// Time-sorted rating log, ticks 1..spec.ticks.
std::vector<RatingRecord> generate(const ScenarioSpec& spec);

struct MetricsReport {
  double spearman_quality_vs_reputation = 0.0;  // honest members only
  double gini = 0.0;
  double entropy = 0.0;  // bits
  double attacker_gain = 0.0;
  std::size_t honest = 0;
  std::size_t attackers = 0;
};

/// Members missing from `state` count as the default reputation.
MetricsReport measure(const ScenarioSpec& spec, const std::vector<Member>& roster,
                      const ReputationState& state, const EngineConfig& config);
Json metrics_to_json(const MetricsReport& report);

struct RoundSummary {
  std::uint64_t round = 0;
  Tick end = 0;
  consensus::VerdictKind verdict = consensus::VerdictKind::Pending;
  std::string hash;
  bool disputed = false;
  std::vector<AgencyId> blamed;  // union of Blame warnings
};

struct ScenarioResult {
  std::vector<RatingRecord> log;
  std::vector<Member> roster;
  ReputationState final_state;
  std::vector<ReputationState> trajectory;  // accepted state after each valid round
  std::vector<RoundSummary> rounds;
  std::vector<Json> transcript;
  consensus::MiningLedger ledger;
  MetricsReport metrics;
};

/// Every agency folds each window onto the last accepted state and submits
/// its hash. A valid round advances the shared state and pays the miners; a
/// broken one carries its records into the next round.
ScenarioResult run_scenario(const ScenarioSpec& spec, const scoping::ScopingPolicy& policy,
                            const EngineConfig& config, const RunOptions& options);
ScenarioResult run_scenario(const ScenarioSpec& spec);

/// tick,member,reputation rows for every accepted state.
std::string trajectories_csv(const ScenarioResult& result);

struct LogComparison {
  MetricsReport linear;
  MetricsReport log;
};

/// Runs the scenario with use_log_differential off and then on.
LogComparison compare_linear_vs_log(const ScenarioSpec& spec);

struct CollusionReport {
  double clique_gain = 0.0;
  /// Gain when the clique's internal ratings come from the top honest member.
  double counterfactual_gain = 0.0;
  MemberId top_honest;
};

CollusionReport measure_collusion(const ScenarioSpec& spec);

}  // namespace repute::simnet
