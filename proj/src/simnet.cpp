#include "repute/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "repute/metrics.hpp"

namespace repute::simnet {

std::string_view to_string(Archetype archetype) {
  switch (archetype) {
    case Archetype::Honest: return "honest";
    case Archetype::SybilRing: return "sybil-ring";
    case Archetype::CollusionClique: return "collusion-clique";
    case Archetype::Spammer: return "spammer";
  }
  return "honest";
}

std::optional<Archetype> parse_archetype(std::string_view text) {
  if (text == "honest") return Archetype::Honest;
  if (text == "sybil-ring" || text == "sybil") return Archetype::SybilRing;
  if (text == "collusion-clique" || text == "clique") return Archetype::CollusionClique;
  if (text == "spammer") return Archetype::Spammer;
  return std::nullopt;
}

namespace {

std::string_view default_prefix(Archetype archetype) {
  switch (archetype) {
    case Archetype::Honest: return "honest";
    case Archetype::SybilRing: return "sybil";
    case Archetype::CollusionClique: return "clique";
    case Archetype::Spammer: return "spammer";
  }
  return "member";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// mt19937_64 output is fixed by the standard; the std:: distributions are not,
// so the transforms below are spelled out.
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view purpose, const MemberId& member)
      : gen_(splitmix64(seed ^ fnv1a(std::string(purpose) + "/" + member.str()))) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

  double draw(const Distribution& d) {
    switch (d.kind) {
      case Distribution::Kind::Fixed: return d.value;
      case Distribution::Kind::Uniform: return d.low + (d.high - d.low) * uniform();
      case Distribution::Kind::Pareto: return d.scale * std::pow(1.0 - uniform(), -1.0 / d.alpha);
    }
    return d.value;
  }

 private:
  std::mt19937_64 gen_;
};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

void check_distribution(const Distribution& d, const std::string& where, bool unit_range) {
  auto finite = [](double x) { return std::isfinite(x); };
  switch (d.kind) {
    case Distribution::Kind::Fixed:
      if (!finite(d.value)) invalid(where + ": value must be finite");
      if (unit_range && (d.value < 0.0 || d.value > 1.0)) invalid(where + ": value outside [0, 1]");
      if (!unit_range && !(d.value > 0.0)) invalid(where + ": value must be > 0");
      break;
    case Distribution::Kind::Uniform:
      if (!finite(d.low) || !finite(d.high) || d.low > d.high) {
        invalid(where + ": need low <= high");
      }
      if (unit_range && (d.low < 0.0 || d.high > 1.0)) invalid(where + ": range outside [0, 1]");
      if (!unit_range && !(d.low > 0.0)) invalid(where + ": low must be > 0");
      break;
    case Distribution::Kind::Pareto:
      if (!(d.alpha > 0.0) || !(d.scale > 0.0) || !finite(d.alpha) || !finite(d.scale)) {
        invalid(where + ": alpha and scale must be > 0");
      }
      break;
  }
}

Distribution distribution_from_json(const Json& j, const std::string& where) {
  Distribution d;
  if (j.is_number()) {
    d.value = j.get<double>();
    return d;
  }
  if (!j.is_object()) invalid(where + " must be a number or an object");
  const auto kind = j.value("distribution", std::string("fixed"));
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known{"distribution", "value", "low", "high", "alpha",
                                             "scale"};
    if (!known.contains(key)) invalid(where + ": unknown key '" + key + "'");
  }
  if (kind == "fixed") {
    d.kind = Distribution::Kind::Fixed;
    d.value = j.value("value", 1.0);
  } else if (kind == "uniform") {
    d.kind = Distribution::Kind::Uniform;
    d.low = j.value("low", 0.0);
    d.high = j.value("high", 1.0);
  } else if (kind == "pareto") {
    d.kind = Distribution::Kind::Pareto;
    d.alpha = j.value("alpha", 1.5);
    d.scale = j.value("scale", 1.0);
  } else {
    invalid(where + ": unknown distribution '" + kind + "'");
  }
  return d;
}

Json distribution_to_json(const Distribution& d) {
  Json out;
  switch (d.kind) {
    case Distribution::Kind::Fixed:
      out["distribution"] = "fixed";
      out["value"] = d.value;
      break;
    case Distribution::Kind::Uniform:
      out["distribution"] = "uniform";
      out["low"] = d.low;
      out["high"] = d.high;
      break;
    case Distribution::Kind::Pareto:
      out["distribution"] = "pareto";
      out["alpha"] = d.alpha;
      out["scale"] = d.scale;
      break;
  }
  return out;
}

Population population_from_json(const Json& j, std::size_t index) {
  const std::string where = "populations[" + std::to_string(index) + "]";
  if (!j.is_object()) invalid(where + " must be an object");
  static const std::set<std::string> known{"archetype", "prefix", "count",  "quality",
                                           "initial_reputation", "rate", "noise", "kind",
                                           "weight", "targets"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) invalid(where + ": unknown key '" + key + "'");
  }
  Population p;
  if (!j.contains("archetype")) invalid(where + ": archetype is required");
  const auto archetype = parse_archetype(j.at("archetype").get<std::string>());
  if (!archetype) invalid(where + ": unknown archetype");
  p.archetype = *archetype;
  p.prefix = j.value("prefix", std::string(default_prefix(p.archetype)));
  const auto count = j.value("count", std::int64_t{0});
  if (count < 0) invalid(where + ": count must be >= 0");
  p.count = static_cast<std::size_t>(count);
  if (j.contains("quality")) p.quality = distribution_from_json(j.at("quality"), where + ".quality");
  if (j.contains("initial_reputation") && !j.at("initial_reputation").is_null()) {
    p.initial_reputation = j.at("initial_reputation").get<double>();
  }
  p.rate = j.value("rate", 1.0);
  p.noise = j.value("noise", 0.0);
  if (j.contains("kind")) {
    const auto kind = parse_rating_kind(j.at("kind").get<std::string>());
    if (!kind) invalid(where + ": unknown rating kind");
    p.kind = *kind;
  }
  if (j.contains("weight")) p.weight = distribution_from_json(j.at("weight"), where + ".weight");
  const auto targets = j.value("targets", std::string("honest"));
  if (targets != "honest" && targets != "all") invalid(where + ": targets must be honest or all");
  p.honest_targets_only = targets == "honest";
  return p;
}

Json run_to_json(const RunOptions& run) {
  Json out;
  out["agencies"] = run.agencies;
  out["quorum"] = run.quorum;
  out["reward"] = run.reward;
  if (run.fault) {
    out["fault"] = Json{{"agency", run.fault->agency}, {"delta", run.fault->delta}};
  } else {
    out["fault"] = nullptr;
  }
  return out;
}

RunOptions run_from_json(const Json& j) {
  if (!j.is_object()) invalid("run must be an object");
  RunOptions run;
  for (const auto& [key, value] : j.items()) {
    if (key == "agencies") {
      run.agencies = value.get<std::size_t>();
    } else if (key == "quorum") {
      run.quorum = value.get<std::size_t>();
    } else if (key == "reward") {
      run.reward = value.get<std::int64_t>();
    } else if (key == "fault") {
      if (value.is_null()) continue;
      FaultInjection f;
      f.agency = value.value("agency", std::size_t{1});
      f.delta = value.value("delta", 1e-6);
      run.fault = f;
    } else {
      invalid("run: unknown key '" + key + "'");
    }
  }
  return run;
}

void check_run(const RunOptions& run) {
  if (run.agencies < 1) invalid("run.agencies must be >= 1");
  if (run.quorum < 1 || run.quorum > run.agencies) invalid("run.quorum must be in [1, agencies]");
  if (run.reward < 0) invalid("run.reward must be >= 0");
  if (run.fault && (run.fault->agency < 1 || run.fault->agency > run.agencies)) {
    invalid("run.fault.agency must name one of the agencies");
  }
  if (run.fault && !std::isfinite(run.fault->delta)) invalid("run.fault.delta must be finite");
}

std::string member_name(const std::string& prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%03zu", k);
  return prefix + buf;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (ticks < 1) invalid("ticks must be >= 1");
  std::set<std::string> prefixes;
  std::size_t total = 0;
  for (std::size_t k = 0; k < populations.size(); ++k) {
    const auto& p = populations[k];
    const std::string where = "populations[" + std::to_string(k) + "]";
    if (p.prefix.empty()) invalid(where + ": prefix must be nonempty");
    if (!prefixes.insert(p.prefix).second) invalid(where + ": duplicate prefix '" + p.prefix + "'");
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) invalid(where + ": rate must be >= 0");
    if (!(p.noise >= 0.0) || !std::isfinite(p.noise)) invalid(where + ": noise must be >= 0");
    if (p.initial_reputation &&
        !(*p.initial_reputation >= -1.0 && *p.initial_reputation <= 1.0)) {
      invalid(where + ": initial_reputation outside [-1, 1]");
    }
    check_distribution(p.quality, where + ".quality", true);
    check_distribution(p.weight, where + ".weight", false);
    total += p.count;
  }
  if (total == 0) invalid("scenario has no members");
  try {
    engine.validate();
    scoping.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  check_run(run);
}

ScenarioSpec spec_from_json(const Json& doc) {
  if (!doc.is_object()) invalid("scenario must be a JSON object");
  ScenarioSpec spec;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "name") {
        spec.name = value.get<std::string>();
      } else if (key == "seed") {
        spec.seed = value.get<std::uint64_t>();
      } else if (key == "ticks") {
        spec.ticks = value.get<Tick>();
      } else if (key == "populations") {
        if (!value.is_array()) invalid("populations must be an array");
        for (std::size_t k = 0; k < value.size(); ++k) {
          spec.populations.push_back(population_from_json(value[k], k));
        }
      } else if (key == "engine") {
        spec.engine = config_from_json(value);
      } else if (key == "scoping") {
        spec.scoping = scoping::policy_from_json(value);
      } else if (key == "run") {
        spec.run = run_from_json(value);
      } else {
        invalid("unknown scenario key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidSpec) throw;
    invalid(e.what());
  }
  spec.validate();
  return spec;
}

Json spec_to_json(const ScenarioSpec& spec) {
  Json out;
  out["name"] = spec.name;
  out["seed"] = spec.seed;
  out["ticks"] = spec.ticks;
  Json pops = Json::array();
  for (const auto& p : spec.populations) {
    Json j;
    j["archetype"] = std::string(to_string(p.archetype));
    j["prefix"] = p.prefix;
    j["count"] = p.count;
    j["quality"] = distribution_to_json(p.quality);
    if (p.initial_reputation) {
      j["initial_reputation"] = *p.initial_reputation;
    } else {
      j["initial_reputation"] = nullptr;
    }
    j["rate"] = p.rate;
    j["noise"] = p.noise;
    j["kind"] = std::string(to_string(p.kind));
    j["weight"] = distribution_to_json(p.weight);
    j["targets"] = p.honest_targets_only ? "honest" : "all";
    pops.push_back(std::move(j));
  }
  out["populations"] = std::move(pops);
  out["engine"] = config_to_json(spec.engine);
  out["scoping"] = scoping::policy_to_json(spec.scoping);
  out["run"] = run_to_json(spec.run);
  return out;
}

std::vector<Member> members(const ScenarioSpec& spec) {
  std::vector<Member> out;
  for (std::size_t p = 0; p < spec.populations.size(); ++p) {
    const auto& pop = spec.populations[p];
    for (std::size_t k = 0; k < pop.count; ++k) {
      Member m;
      m.id = MemberId(member_name(pop.prefix, k));
      m.archetype = pop.archetype;
      m.population = p;
      Stream stream(spec.seed, "quality", m.id);
      m.quality = std::min(1.0, stream.draw(pop.quality));
      out.push_back(std::move(m));
    }
  }
  return out;
}

ReputationState genesis_state(const ScenarioSpec& spec) {
  ReputationMap entries;
  for (const auto& m : members(spec)) {
    const auto& initial = spec.populations[m.population].initial_reputation;
    if (initial) entries.emplace(m.id, *initial);
  }
  return ReputationState(0, 0, std::move(entries), spec.engine.hash_precision);
}

std::vector<RatingRecord> generate(const ScenarioSpec& spec) {
  spec.validate();
  const auto roster = members(spec);

  std::vector<std::size_t> honest;
  std::vector<std::size_t> everyone(roster.size());
  std::vector<std::vector<std::size_t>> by_population(spec.populations.size());
  for (std::size_t k = 0; k < roster.size(); ++k) {
    everyone[k] = k;
    if (roster[k].archetype == Archetype::Honest) honest.push_back(k);
    by_population[roster[k].population].push_back(k);
  }

  std::vector<Stream> streams;
  streams.reserve(roster.size());
  for (const auto& m : roster) streams.emplace_back(spec.seed, "behavior", m.id);

  std::vector<RatingRecord> log;
  for (Tick t = 1; t <= spec.ticks; ++t) {
    for (std::size_t k = 0; k < roster.size(); ++k) {
      const auto& member = roster[k];
      const auto& pop = spec.populations[member.population];
      auto& rng = streams[k];

      const double whole = std::floor(pop.rate);
      std::size_t n = static_cast<std::size_t>(whole);
      if (rng.uniform() < pop.rate - whole) ++n;

      const std::vector<std::size_t>* pool = &by_population[member.population];
      if (member.archetype == Archetype::Honest || member.archetype == Archetype::Spammer) {
        pool = pop.honest_targets_only ? &honest : &everyone;
      }
      // Pools hold roster indices in ascending order; draws skip over self.
      const auto self_at = std::lower_bound(pool->begin(), pool->end(), k);
      const bool self_in_pool = self_at != pool->end() && *self_at == k;
      const auto self_pos = static_cast<std::size_t>(self_at - pool->begin());
      const std::size_t choices = pool->size() - (self_in_pool ? 1 : 0);

      for (std::size_t r = 0; r < n; ++r) {
        if (choices == 0) break;
        std::size_t pick = rng.index(choices);
        if (self_in_pool && pick >= self_pos) ++pick;
        const std::size_t target = (*pool)[pick];

        RatingRecord rec;
        rec.kind = pop.kind;
        rec.from = member.id;
        rec.to = roster[target].id;
        rec.time = t;
        switch (member.archetype) {
          case Archetype::Honest:
            rec.value = roster[target].quality + pop.noise * rng.normal();
            break;
          case Archetype::Spammer:
            rec.value = 2.0 * rng.uniform() - 1.0;
            break;
          case Archetype::SybilRing:
          case Archetype::CollusionClique:
            rec.value = 1.0;
            break;
        }
        rec.value = std::clamp(rec.value, -1.0, 1.0);
        rec.weight = rng.draw(pop.weight);
        if (rec.kind == RatingKind::Finance) rec.value = 1.0;
        log.push_back(std::move(rec));
      }
    }
  }
  std::stable_sort(log.begin(), log.end(), record_time_less);
  return log;
}

MetricsReport measure(const ScenarioSpec& spec, const std::vector<Member>& roster,
                      const ReputationState& state, const EngineConfig& config) {
  (void)spec;
  const double r_d = config.default_reputation;
  MetricsReport out;
  std::vector<double> all, quality, honest_rep;
  double attack_sum = 0.0;
  for (const auto& m : roster) {
    const double r = state.value_or(m.id, r_d);
    all.push_back(r);
    if (m.archetype == Archetype::Honest) {
      quality.push_back(m.quality);
      honest_rep.push_back(r);
    } else {
      attack_sum += r;
      ++out.attackers;
    }
  }
  out.honest = honest_rep.size();
  out.spearman_quality_vs_reputation = metrics::spearman(quality, honest_rep);
  out.gini = metrics::gini(all);
  out.entropy = metrics::entropy(all);
  out.attacker_gain =
      out.attackers == 0 ? 0.0 : attack_sum / static_cast<double>(out.attackers) - r_d;
  return out;
}

Json metrics_to_json(const MetricsReport& report) {
  Json out;
  out["spearman_quality_vs_reputation"] = report.spearman_quality_vs_reputation;
  out["gini"] = report.gini;
  out["entropy"] = report.entropy;
  out["attacker_gain"] = report.attacker_gain;
  out["honest_members"] = report.honest;
  out["attacker_members"] = report.attackers;
  return out;
}

namespace {

ReputationState perturb(const ReputationState& state, double delta) {
  if (state.entries().empty()) return state;
  auto entries = state.entries();
  auto& value = entries.begin()->second;
  value = value + delta > 1.0 ? value - delta : value + delta;
  return ReputationState(state.origin(), state.as_of(), std::move(entries), state.precision());
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const scoping::ScopingPolicy& policy,
                            const EngineConfig& config, const RunOptions& options) {
  spec.validate();
  policy.validate();
  config.validate();
  check_run(options);

  ScenarioResult out;
  out.log = generate(spec);
  out.roster = members(spec);
  if (std::none_of(out.roster.begin(), out.roster.end(),
                   [](const Member& m) { return m.archetype == Archetype::Honest; })) {
    invalid("scoring needs at least one honest member");
  }

  const auto seed_state = genesis_state(spec);
  const ReputationState genesis(0, 0, seed_state.entries(), config.hash_precision);
  std::vector<AgencyId> agencies;
  for (std::size_t k = 1; k <= options.agencies; ++k) {
    agencies.emplace_back("ra-" + std::to_string(k));
  }

  auto windows = scoping::partition(out.log, policy, genesis.origin(), spec.ticks);
  ReputationState accepted = genesis;
  std::vector<RatingRecord> carried;
  std::uint64_t round_no = 0;
  for (auto& window : windows) {
    ++round_no;
    if (policy.mode != scoping::Mode::Lifetime && !carried.empty()) {
      window.records.insert(window.records.begin(), carried.begin(), carried.end());
    }

    consensus::RoundRules rules;
    rules.round = round_no;
    rules.quorum_min = options.quorum;
    rules.submissions_max = options.agencies;
    rules.deadline = window.end;
    consensus::ConsensusRound round(rules);

    std::map<std::string, ReputationState> by_hash;
    for (std::size_t k = 0; k < agencies.size(); ++k) {
      auto state = scoping::step_window(window, policy, accepted, genesis, config).state;
      if (options.fault && options.fault->agency == k + 1) {
        state = perturb(state, options.fault->delta);
      }
      round.submit({agencies[k], round_no, state.hash(), window.end});
      by_hash.emplace(state.hash(), std::move(state));
      if (round.verdict().kind != consensus::VerdictKind::Pending) break;
    }
    if (round.verdict().kind == consensus::VerdictKind::Pending) round.expire(window.end + 1);

    out.transcript.insert(out.transcript.end(), round.events().begin(), round.events().end());
    RoundSummary summary;
    summary.round = round_no;
    summary.end = window.end;
    summary.verdict = round.verdict().kind;
    summary.hash = round.verdict().hash;
    summary.disputed = round.disputed();
    for (const auto& w : round.warnings()) {
      if (w.kind != consensus::WarningKind::Blame) continue;
      summary.blamed.insert(summary.blamed.end(), w.blamed.begin(), w.blamed.end());
    }
    out.rounds.push_back(std::move(summary));

    if (round.verdict().kind == consensus::VerdictKind::Valid) {
      accepted = by_hash.at(round.verdict().hash);
      out.ledger = consensus::credit_miners(round, std::move(out.ledger), options.reward,
                                            &out.transcript);
      out.trajectory.push_back(accepted);
      carried.clear();
    } else {
      carried = std::move(window.records);
    }
  }

  out.final_state = accepted;
  out.metrics = measure(spec, out.roster, accepted, config);
  return out;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
  return run_scenario(spec, spec.scoping, spec.engine, spec.run);
}

std::string trajectories_csv(const ScenarioResult& result) {
  std::string out = "tick,member,reputation\n";
  char buf[64];
  for (const auto& state : result.trajectory) {
    for (const auto& [member, value] : state.entries()) {
      std::snprintf(buf, sizeof buf, "%.*f", state.precision(), value);
      out += std::to_string(state.as_of()) + "," + member.str() + "," + buf + "\n";
    }
  }
  return out;
}

LogComparison compare_linear_vs_log(const ScenarioSpec& spec) {
  auto config = spec.engine;
  LogComparison out;
  config.use_log_differential = false;
  out.linear = run_scenario(spec, spec.scoping, config, spec.run).metrics;
  config.use_log_differential = true;
  out.log = run_scenario(spec, spec.scoping, config, spec.run).metrics;
  return out;
}

CollusionReport measure_collusion(const ScenarioSpec& spec) {
  const auto roster = members(spec);
  std::set<MemberId> clique;
  for (const auto& m : roster) {
    if (m.archetype == Archetype::CollusionClique) clique.insert(m.id);
  }
  if (clique.empty()) invalid("collusion measurement needs a collusion-clique population");

  const auto genesis = genesis_state(spec);
  const double r_d = spec.engine.default_reputation;
  auto clique_gain = [&](const ReputationState& state) {
    double sum = 0.0;
    for (const auto& id : clique) sum += state.value_or(id, r_d);
    return sum / static_cast<double>(clique.size()) - r_d;
  };

  auto log = generate(spec);
  const auto baseline = scoping::run_schedule(log, spec.scoping, spec.engine, genesis, spec.ticks);

  CollusionReport out;
  out.clique_gain = clique_gain(baseline.final_state);
  std::optional<double> best;
  for (const auto& m : roster) {
    if (m.archetype != Archetype::Honest) continue;
    const double r = baseline.final_state.value_or(m.id, r_d);
    if (!best || r > *best) {
      best = r;
      out.top_honest = m.id;
    }
  }
  if (!best) invalid("collusion measurement needs an honest member");

  for (auto& rec : log) {
    if (clique.contains(rec.from) && clique.contains(rec.to)) rec.from = out.top_honest;
  }
  std::stable_sort(log.begin(), log.end(), record_time_less);
  const auto counterfactual =
      scoping::run_schedule(log, spec.scoping, spec.engine, genesis, spec.ticks);
  out.counterfactual_gain = clique_gain(counterfactual.final_state);
  return out;
}

}  // namespace repute::simnet
