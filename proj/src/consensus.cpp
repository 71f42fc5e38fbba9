#include "repute/consensus.hpp"

#include <algorithm>
#include <cmath>

namespace repute::consensus {

std::string_view to_string(WarningKind kind) {
  switch (kind) {
    case WarningKind::Dispute: return "dispute";
    case WarningKind::Blame: return "blame";
    case WarningKind::Broken: return "broken";
  }
  return "dispute";
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Pending: return "pending";
    case VerdictKind::Valid: return "valid";
    case VerdictKind::Broken: return "broken";
  }
  return "pending";
}

void RoundRules::validate() const {
  if (quorum_min < 1) throw Error(ErrorCode::InvalidConfig, "quorum_min must be >= 1");
  if (submissions_max < quorum_min) {
    throw Error(ErrorCode::InvalidConfig, "submissions_max must be >= quorum_min");
  }
  if (quorum_mass && !(*quorum_mass > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "quorum_mass must be > 0");
  }
}

ConsensusRound::ConsensusRound(RoundRules rules) : rules_(rules) { rules_.validate(); }

void ConsensusRound::submit(const StateSubmission& s) { accept(s, 1.0); }

void ConsensusRound::submit_weighted(const StateSubmission& s,
                                     const std::map<AgencyId, double>& reputations) {
  auto it = reputations.find(s.agency);
  if (it == reputations.end()) {
    throw Error(ErrorCode::UnknownAgencyReputation,
                "no reputation for agency '" + s.agency.str() + "'");
  }
  accept(s, std::isfinite(it->second) ? std::max(it->second, 0.0) : 0.0);
}

void ConsensusRound::accept(const StateSubmission& s, double mass) {
  if (verdict_.kind != VerdictKind::Pending) {
    throw Error(ErrorCode::RoundClosed, "round " + std::to_string(rules_.round) + " is " +
                                            std::string(to_string(verdict_.kind)));
  }
  if (s.round != rules_.round) {
    throw Error(ErrorCode::InvalidField, "submission for round " + std::to_string(s.round) +
                                             " sent to round " + std::to_string(rules_.round));
  }
  if (s.received_at > rules_.deadline) {
    throw Error(ErrorCode::LateSubmission, "received at " + std::to_string(s.received_at) +
                                               " after deadline " +
                                               std::to_string(rules_.deadline));
  }
  for (const auto& e : entries_) {
    if (e.submission.agency == s.agency) {
      throw Error(ErrorCode::DuplicateSubmission,
                  "agency '" + s.agency.str() + "' already submitted");
    }
  }
  if (entries_.size() >= rules_.submissions_max) {
    // Cap reached without a quorum: the round can only expire now.
    throw Error(ErrorCode::RoundClosed, "round " + std::to_string(rules_.round) +
                                            " reached its submission cap");
  }

  const bool conflicts = std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.submission.state_hash != s.state_hash;
  });
  entries_.push_back(Entry{s, mass});

  Json ev;
  ev["event"] = "submission";
  ev["round"] = rules_.round;
  ev["agency"] = s.agency.str();
  ev["hash"] = s.state_hash;
  ev["received_at"] = s.received_at;
  ev["mass"] = mass;
  events_.push_back(std::move(ev));

  if (conflicts) {
    disputed_ = true;
    warn(WarningKind::Dispute, dissenters(leading_hash()));
  }

  const double threshold = rules_.threshold();
  if (entries_.size() == rules_.submissions_max) {
    const std::string winner = leading_hash();
    if (support(winner) >= threshold) {
      auto blamed = dissenters(winner);
      if (!blamed.empty()) warn(WarningKind::Blame, std::move(blamed));
      settle(VerdictKind::Valid, winner);
      return;
    }
  }
  if (support(s.state_hash) >= threshold) {
    settle(VerdictKind::Valid, s.state_hash);
  }
}

void ConsensusRound::expire(Tick now) {
  if (verdict_.kind != VerdictKind::Pending || now <= rules_.deadline) return;
  warn(WarningKind::Broken, {});
  settle(VerdictKind::Broken, {});
}

double ConsensusRound::support(const std::string& hash) const {
  double mass = 0.0;
  for (const auto& e : entries_) {
    if (e.submission.state_hash == hash) mass += e.mass;
  }
  return mass;
}

// Greatest support; ties go to the lexicographically smallest hash.
std::string ConsensusRound::leading_hash() const {
  std::map<std::string, double> mass;
  for (const auto& e : entries_) mass[e.submission.state_hash] += e.mass;
  std::string best;
  double best_mass = -1.0;
  for (const auto& [hash, m] : mass) {
    if (m > best_mass) {
      best = hash;
      best_mass = m;
    }
  }
  return best;
}

std::vector<AgencyId> ConsensusRound::dissenters(const std::string& hash) const {
  std::vector<AgencyId> out;
  for (const auto& e : entries_) {
    if (e.submission.state_hash != hash) out.push_back(e.submission.agency);
  }
  return out;
}

std::vector<AgencyId> ConsensusRound::consistent_agencies() const {
  std::vector<AgencyId> out;
  if (verdict_.kind != VerdictKind::Valid) return out;
  for (const auto& e : entries_) {
    if (e.submission.state_hash == verdict_.hash) out.push_back(e.submission.agency);
  }
  return out;
}

void ConsensusRound::warn(WarningKind kind, std::vector<AgencyId> blamed) {
  Json ev;
  ev["event"] = "warning";
  ev["round"] = rules_.round;
  ev["kind"] = std::string(to_string(kind));
  Json names = Json::array();
  for (const auto& a : blamed) names.push_back(a.str());
  ev["blamed"] = std::move(names);
  events_.push_back(std::move(ev));
  warnings_.push_back(Warning{kind, std::move(blamed)});
}

void ConsensusRound::settle(VerdictKind kind, std::string hash) {
  verdict_ = Verdict{kind, std::move(hash)};
  Json ev;
  ev["event"] = "verdict";
  ev["round"] = rules_.round;
  ev["verdict"] = std::string(to_string(kind));
  if (kind == VerdictKind::Valid) ev["hash"] = verdict_.hash;
  ev["disputed"] = disputed_;
  events_.push_back(std::move(ev));
}

ConsensusRound submit(ConsensusRound round, const StateSubmission& s) {
  round.submit(s);
  return round;
}

ConsensusRound submit_weighted(ConsensusRound round, const StateSubmission& s,
                               const std::map<AgencyId, double>& reputations) {
  round.submit_weighted(s, reputations);
  return round;
}

ConsensusRound expire(ConsensusRound round, Tick now) {
  round.expire(now);
  return round;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

MemberId select_proposer(const ReputationMap& reputations, std::uint64_t seed) {
  double total = 0.0;
  for (const auto& [member, r] : reputations) total += std::max(r, 0.0);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::NoEligibleProposer, "no member has positive reputation");
  }
  const double u = static_cast<double>(splitmix64(seed) >> 11) * 0x1.0p-53;
  const double target = u * total;
  double cumulative = 0.0;
  const MemberId* last_eligible = nullptr;
  for (const auto& [member, r] : reputations) {
    if (r <= 0.0) continue;
    cumulative += r;
    last_eligible = &member;
    if (target < cumulative) return member;
  }
  // Rounding can leave target == cumulative at the very end.
  return *last_eligible;
}

std::int64_t MiningLedger::balance(const AgencyId& agency) const {
  auto it = balances_.find(agency);
  return it == balances_.end() ? 0 : it->second;
}

std::int64_t MiningLedger::total() const {
  std::int64_t sum = 0;
  for (const auto& [agency, units] : balances_) sum += units;
  return sum;
}

void MiningLedger::credit(const AgencyId& agency, std::int64_t units) {
  if (units < 0) throw Error(ErrorCode::InvalidField, "rewards are non-negative");
  balances_[agency] += units;
}

MiningLedger credit_miners(const ConsensusRound& round, MiningLedger ledger, std::int64_t reward,
                           std::vector<Json>* events) {
  if (round.verdict().kind != VerdictKind::Valid) {
    throw Error(ErrorCode::RoundNotValid, "round " + std::to_string(round.rules().round) +
                                              " has no valid state");
  }
  if (reward < 0) throw Error(ErrorCode::InvalidField, "reward must be >= 0");
  const auto miners = round.consistent_agencies();
  const auto n = static_cast<std::int64_t>(miners.size());
  const std::int64_t share = reward / n;
  std::int64_t remainder = reward % n;
  for (const auto& agency : miners) {
    const std::int64_t units = share + (remainder > 0 ? 1 : 0);
    if (remainder > 0) --remainder;
    ledger.credit(agency, units);
    if (events) {
      Json ev;
      ev["event"] = "reward";
      ev["round"] = round.rules().round;
      ev["agency"] = agency.str();
      ev["units"] = units;
      events->push_back(std::move(ev));
    }
  }
  return ledger;
}

std::string events_to_jsonl(const std::vector<Json>& events) {
  std::string out;
  for (const auto& ev : events) {
    out += ev.dump();
    out += '\n';
  }
  return out;
}

}  // namespace repute::consensus
