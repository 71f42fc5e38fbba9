#pragma once

// Coordinated agencies agreeing on a reputation state, Proof-of-Reputation
// proposer selection and reputation-mining rewards.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repute/core.hpp"
#include "repute/json_io.hpp"

namespace repute::consensus {

struct StateSubmission {
  AgencyId agency;
  std::uint64_t round = 0;
  std::string state_hash;
  Tick received_at = 0;
};

enum class VerdictKind { Pending, Valid, Broken };

struct Verdict {
  VerdictKind kind = VerdictKind::Pending;
  std::string hash;  // set when Valid

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

enum class WarningKind {
  Dispute,  // a submission disagreed with an earlier one
  Blame,    // round closed by plurality at the submission cap
  Broken,   // deadline passed without agreement
};

std::string_view to_string(WarningKind kind);
std::string_view to_string(VerdictKind kind);

struct Warning {
  WarningKind kind = WarningKind::Dispute;
  std::vector<AgencyId> blamed;  // in submission order

  friend bool operator==(const Warning&, const Warning&) = default;
};

struct RoundRules {
  std::uint64_t round = 0;
  std::size_t quorum_min = 1;
  std::size_t submissions_max = 1;
  Tick deadline = 0;
  /// Support needed for acceptance under reputation-weighted voting;
  /// defaults to quorum_min, so unit reputations reproduce counting.
  std::optional<double> quorum_mass;

  void validate() const;
  double threshold() const { return quorum_mass.value_or(static_cast<double>(quorum_min)); }
};

/// One calculation cycle. Single owner; submissions are applied in arrival
/// order. The verdict is final once it leaves Pending.
class ConsensusRound {
 public:
  struct Entry {
    StateSubmission submission;
    double mass = 1.0;
  };

  explicit ConsensusRound(RoundRules rules);

  /// Counting mode: every agency carries one unit of support.
  void submit(const StateSubmission& s);

  /// Support is the submitter's reputation floored at zero. Throws
  /// UnknownAgencyReputation when the submitter is not in `reputations`.
  void submit_weighted(const StateSubmission& s, const std::map<AgencyId, double>& reputations);

  /// Breaks a still-pending round once `now` is past the deadline.
  void expire(Tick now);

  const RoundRules& rules() const noexcept { return rules_; }
  const Verdict& verdict() const noexcept { return verdict_; }
  bool disputed() const noexcept { return disputed_; }
  const std::vector<Entry>& submissions() const noexcept { return entries_; }
  const std::vector<Warning>& warnings() const noexcept { return warnings_; }

  /// Agencies whose hash equals the valid hash, in submission order.
  std::vector<AgencyId> consistent_agencies() const;

  /// Round log as JSON Lines events; see docs/formats.md.
  const std::vector<Json>& events() const noexcept { return events_; }

 private:
  void accept(const StateSubmission& s, double mass);
  double support(const std::string& hash) const;
  std::string leading_hash() const;
  std::vector<AgencyId> dissenters(const std::string& hash) const;
  void warn(WarningKind kind, std::vector<AgencyId> blamed);
  void settle(VerdictKind kind, std::string hash);

  RoundRules rules_;
  Verdict verdict_;
  bool disputed_ = false;
  std::vector<Entry> entries_;
  std::vector<Warning> warnings_;
  std::vector<Json> events_;
};

// Value-style wrappers: each returns the updated round.
ConsensusRound submit(ConsensusRound round, const StateSubmission& s);
ConsensusRound submit_weighted(ConsensusRound round, const StateSubmission& s,
                               const std::map<AgencyId, double>& reputations);
ConsensusRound expire(ConsensusRound round, Tick now);

/// Proof-of-Reputation: picks a member with probability proportional to
/// max(R, 0). Algorithm "splitmix64-cdf-v1" (docs/formats.md): draw
/// u = (splitmix64(seed) >> 11) * 2^-53, walk members in id order and return
/// the first whose cumulative mass exceeds u * total.
MemberId select_proposer(const ReputationMap& reputations, std::uint64_t seed);

inline constexpr std::string_view kProposerAlgorithm = "splitmix64-cdf-v1";

/// Reward balances in integer units so every split is exact.
class MiningLedger {
 public:
  std::int64_t balance(const AgencyId& agency) const;
  std::int64_t total() const;
  const std::map<AgencyId, std::int64_t>& balances() const noexcept { return balances_; }
  void credit(const AgencyId& agency, std::int64_t units);

 private:
  std::map<AgencyId, std::int64_t> balances_;
};

/// Splits `reward` among agencies that submitted the valid hash; any
/// remainder goes one unit each to the earliest of them. Throws RoundNotValid.
/// Appends one reward event per credited agency to `events` when given.
MiningLedger credit_miners(const ConsensusRound& round, MiningLedger ledger, std::int64_t reward,
                           std::vector<Json>* events = nullptr);

std::string events_to_jsonl(const std::vector<Json>& events);

}  // namespace repute::consensus
