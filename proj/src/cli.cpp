#include "repute/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "repute/consensus.hpp"
#include "repute/engine.hpp"
#include "repute/json_io.hpp"
#include "repute/scoping.hpp"
#include "repute/simnet.hpp"
#include "repute/storage.hpp"

namespace repute::cli {

namespace {

namespace fs = std::filesystem;

bool is_validation(ErrorCode code) {
  switch (code) {
    case ErrorCode::SelfRating:
    case ErrorCode::ValueOutOfRange:
    case ErrorCode::NegativeWeight:
    case ErrorCode::NonPositiveAmount:
    case ErrorCode::MissingField:
    case ErrorCode::InvalidField:
    case ErrorCode::EmptyBatch:
    case ErrorCode::InvalidConfig:
    case ErrorCode::RecordOutsideWindow:
    case ErrorCode::UnsortedInput:
    case ErrorCode::InvalidPolicy:
    case ErrorCode::UnreadableInput:
    case ErrorCode::InvalidSpec:
      return true;
    default:
      return false;
  }
}

// Submissions the round turns away; the script carries on.
bool is_rejection(ErrorCode code) {
  return code == ErrorCode::DuplicateSubmission || code == ErrorCode::RoundClosed ||
         code == ErrorCode::LateSubmission || code == ErrorCode::InvalidField ||
         code == ErrorCode::UnknownAgencyReputation;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Reads an input file and remembers its digest for the manifest.
class Inputs {
 public:
  std::string read(const std::string& role, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in || fs::is_directory(path)) {
      throw Error(ErrorCode::UnreadableInput, "cannot read " + role + " '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    digests_[role] = sha256_hex(ss.str());
    return ss.str();
  }

  Json parse(const std::string& role, const fs::path& path, ErrorCode on_error) {
    const auto text = read(role, path);
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(on_error, role + " is not valid JSON: " + e.what());
    }
  }

  Json digests() const {
    Json out = Json::object();
    for (const auto& [role, digest] : digests_) out[role] = digest;
    return out;
  }

 private:
  std::map<std::string, std::string> digests_;
};

/// Everything a command produces, held back until the command succeeded.
struct Artifacts {
  std::map<std::string, std::string> files;
  storage::StoreMode store = storage::StoreMode::Transient;
  std::vector<std::pair<AgencyId, ReputationState>> snapshots;
};

void publish(const fs::path& dir, const Artifacts& artifacts, Json manifest) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IoFailure, "cannot create output directory '" + dir.string() + "'");
  }
  std::map<std::string, std::string> digests;
  if (artifacts.store != storage::StoreMode::Transient) {
    storage::SnapshotStore store(artifacts.store, dir / "snapshots");
    for (const auto& [agency, state] : artifacts.snapshots) {
      const auto ref = store.save(state, agency);
      digests[ref.path->lexically_relative(dir).generic_string()] =
          sha256_hex(state_to_snapshot(state));
    }
  }
  for (const auto& [name, bytes] : artifacts.files) {
    storage::write_file_atomic(dir / name, bytes);
    digests[name] = sha256_hex(bytes);
  }
  Json outputs = Json::object();
  for (const auto& [name, digest] : digests) outputs[name] = digest;
  manifest["outputs"] = std::move(outputs);
  storage::write_file_atomic(dir / "manifest.json", dump(manifest));
}

fs::path default_out() {
  const char* env = std::getenv("REPUTE_OUT");
  return (env && *env) ? fs::path(env) : fs::path("repute-out");
}

// Flags shared by several subcommands. Unset optionals leave the config alone.
struct EngineFlags {
  std::optional<std::string> config;
  std::optional<double> default_reputation;
  std::optional<double> rater_floor;
  std::optional<int> precision;
  std::optional<std::string> no_evidence;
  bool log = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON file with optional 'engine' and 'scoping' sections");
    app->add_option("--default-reputation", default_reputation, "R_d for unknown members");
    app->add_option("--rater-floor", rater_floor, "lower bound on rater weights");
    app->add_option("--precision", precision, "decimal places in state hashes");
    app->add_option("--no-evidence", no_evidence, "decay or hold");
    app->add_flag("--log", log, "logarithmic differentials");
  }

  void apply(EngineConfig& cfg) const {
    if (default_reputation) cfg.default_reputation = *default_reputation;
    if (rater_floor) cfg.rater_weight_floor = *rater_floor;
    if (precision) cfg.hash_precision = *precision;
    if (no_evidence) cfg = config_from_json(Json{{"no_evidence", *no_evidence}}, cfg);
    if (log) cfg.use_log_differential = true;
    cfg.validate();
  }
};

struct ScopingFlags {
  std::optional<std::string> mode;
  std::optional<Tick> window;
  std::optional<std::size_t> block_size;
  std::optional<double> half_life;

  void attach(CLI::App* app) {
    app->add_option("--mode", mode, "lifetime, incremental, up-to-date or blocked-incremental");
    app->add_option("--window", window, "window width in ticks");
    app->add_option("--block-size", block_size, "records per block");
    app->add_option("--half-life", half_life, "lifetime recency half-life in ticks");
  }

  void apply(scoping::ScopingPolicy& policy) const {
    Json overlay = Json::object();
    if (mode) overlay["mode"] = *mode;
    if (window) overlay["window"] = *window;
    if (block_size) overlay["block_size"] = *block_size;
    if (half_life) overlay["half_life"] = *half_life;
    policy = scoping::policy_from_json(overlay, policy);
  }
};

struct Settings {
  EngineConfig engine;
  scoping::ScopingPolicy policy;
};

/// defaults < config file < flags
Settings load_settings(Inputs& inputs, const EngineFlags& ef, const ScopingFlags* sf,
                       Settings base = {}) {
  if (ef.config) {
    const auto doc = inputs.parse("config", *ef.config, ErrorCode::InvalidConfig);
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "engine") {
        base.engine = config_from_json(value, base.engine);
      } else if (key == "scoping") {
        base.policy = scoping::policy_from_json(value, base.policy);
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown config section '" + key + "'");
      }
    }
  }
  ef.apply(base.engine);
  if (sf) sf->apply(base.policy);
  return base;
}

storage::StoreMode store_mode(const std::string& text) {
  const auto mode = storage::parse_store_mode(text);
  if (!mode) throw Error(ErrorCode::InvalidConfig, "store must be transient, local or global");
  return *mode;
}

std::vector<RatingRecord> load_ratings(Inputs& inputs, const fs::path& path, Artifacts& artifacts,
                                       std::ostream& err) {
  const auto text = inputs.read("ratings", path);
  std::istringstream in(text);
  auto result = storage::ingest(in, path.extension() == ".csv" ? storage::LogFormat::Csv
                                                              : storage::LogFormat::Jsonl);
  if (!result.errors.empty()) {
    std::string lines;
    for (const auto& e : result.errors) {
      Json j;
      j["line"] = e.line;
      j["code"] = std::string(to_string(e.code));
      j["message"] = e.message;
      lines += j.dump() + "\n";
      err << "repute: warning: " << path.string() << ":" << e.line << ": " << e.message << "\n";
    }
    artifacts.files["ingest_errors.jsonl"] = lines;
  }
  return std::move(result.records);
}

Json skipped_to_json(const std::vector<engine::SkippedCell>& cells) {
  Json out = Json::array();
  for (const auto& c : cells) {
    Json j;
    j["member"] = c.member.str();
    j["aspect"] = c.aspect;
    j["category"] = c.category;
    j["event"] = c.event;
    j["reason"] = std::string(engine::to_string(c.reason));
    out.push_back(std::move(j));
  }
  return out;
}

Json map_to_json(const ReputationMap& m) {
  Json out = Json::object();
  for (const auto& [member, value] : m) out[member.str()] = value;
  return out;
}

std::string trajectory_csv(const std::vector<ReputationState>& states) {
  std::string out = "tick,member,reputation\n";
  char buf[64];
  for (const auto& state : states) {
    for (const auto& [member, value] : state.entries()) {
      std::snprintf(buf, sizeof buf, "%.*f", state.precision(), value);
      out += std::to_string(state.as_of()) + "," + member.str() + "," + buf + "\n";
    }
  }
  return out;
}

Json ledger_to_json(const consensus::MiningLedger& ledger) {
  Json out = Json::object();
  for (const auto& [agency, units] : ledger.balances()) out[agency.str()] = units;
  return out;
}

Json base_manifest(const std::string& command, Json config, const Inputs& inputs) {
  Json m;
  m["tool"] = "repute";
  m["command"] = command;
  m["config"] = std::move(config);
  m["inputs"] = inputs.digests();
  return m;
}

// ---- compute ---------------------------------------------------------------

struct ComputeArgs {
  std::string ratings;
  std::optional<std::string> genesis;
  std::optional<Tick> origin;
  std::optional<Tick> as_of;
  EngineFlags engine;
};

void compute(const ComputeArgs& a, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  Inputs inputs;
  Artifacts artifacts;
  const auto settings = load_settings(inputs, a.engine, nullptr);
  std::optional<ReputationState> prior;
  if (a.genesis) {
    if (a.origin) throw Error(ErrorCode::InvalidConfig, "--origin conflicts with --genesis");
    try {
      prior = state_from_snapshot(inputs.read("genesis", *a.genesis));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnreadableInput) throw;
      throw Error(ErrorCode::InvalidConfig, std::string("genesis snapshot: ") + e.what());
    }
  } else {
    prior = ReputationState::genesis(a.origin.value_or(0), settings.engine.hash_precision);
  }
  const auto records = load_ratings(inputs, a.ratings, artifacts, err);
  Tick t_n = prior->as_of() + 1;
  for (const auto& r : records) t_n = std::max(t_n, r.time);
  if (a.as_of) t_n = *a.as_of;

  auto result = engine::compute_period(records, *prior, t_n, settings.engine);

  artifacts.files["state.json"] = state_to_snapshot(result.state);
  Json diff;
  diff["endorsing"] = map_to_json(result.differential.endorsing);
  diff["transactional"] = map_to_json(result.differential.transactional);
  diff["blended"] = map_to_json(result.differential.blended);
  diff["normalized"] = map_to_json(result.differential.normalized);
  diff["skipped"] = skipped_to_json(result.differential.skipped);
  artifacts.files["differential.json"] = dump(diff);

  Json config;
  config["engine"] = config_to_json(settings.engine);
  config["origin"] = prior->origin();
  config["as_of"] = t_n;
  publish(out_dir, artifacts, base_manifest("compute", std::move(config), inputs));
  out << "state " << result.state.hash() << " (" << result.state.entries().size()
      << " members, as_of " << t_n << ") -> " << out_dir.string() << "\n";
}

// ---- schedule --------------------------------------------------------------

struct ScheduleArgs {
  std::string ratings;
  std::optional<Tick> horizon;
  std::string store = "local";
  std::string agency = "ra-1";
  EngineFlags engine;
  ScopingFlags scoping;
};

void schedule(const ScheduleArgs& a, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  Inputs inputs;
  Artifacts artifacts;
  const auto settings = load_settings(inputs, a.engine, &a.scoping);
  artifacts.store = store_mode(a.store);
  const AgencyId agency(a.agency);
  const auto records = load_ratings(inputs, a.ratings, artifacts, err);

  const auto genesis = ReputationState::genesis(0, settings.engine.hash_precision);
  auto result = scoping::run_schedule(records, settings.policy, settings.engine, genesis, a.horizon);

  std::string lines;
  std::vector<ReputationState> states;
  for (const auto& w : result.log) {
    Json j;
    j["end"] = w.end;
    j["records"] = w.record_count;
    j["members"] = w.state.entries().size();
    j["skipped"] = w.skipped.size();
    j["hash"] = w.state.hash();
    lines += j.dump() + "\n";
    states.push_back(w.state);
    artifacts.snapshots.emplace_back(agency, w.state);
  }
  artifacts.files["windows.jsonl"] = lines;
  artifacts.files["state.json"] = state_to_snapshot(result.final_state);
  artifacts.files["trajectories.csv"] = trajectory_csv(states);

  Json config;
  config["engine"] = config_to_json(settings.engine);
  config["scoping"] = scoping::policy_to_json(settings.policy);
  config["horizon"] = a.horizon ? Json(*a.horizon) : Json(nullptr);
  config["store"] = a.store;
  config["agency"] = a.agency;
  publish(out_dir, artifacts, base_manifest("schedule", std::move(config), inputs));
  out << result.log.size() << " windows, final state " << result.final_state.hash() << " -> "
      << out_dir.string() << "\n";
}

// ---- simulate / compare-log ------------------------------------------------

struct ScenarioArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<Tick> ticks;
  std::optional<std::size_t> agencies;
  std::optional<std::size_t> quorum;
  std::optional<std::size_t> fault_agency;
  double fault_delta = 1e-6;
  std::string store = "global";
  EngineFlags engine;
  ScopingFlags scoping;
};

simnet::ScenarioSpec load_scenario(Inputs& inputs, const ScenarioArgs& a) {
  auto spec = simnet::spec_from_json(inputs.parse("scenario", a.scenario, ErrorCode::InvalidSpec));
  const auto settings = load_settings(inputs, a.engine, &a.scoping, {spec.engine, spec.scoping});
  spec.engine = settings.engine;
  spec.scoping = settings.policy;
  if (a.seed) spec.seed = *a.seed;
  if (a.ticks) spec.ticks = *a.ticks;
  if (a.agencies) spec.run.agencies = *a.agencies;
  if (a.quorum) spec.run.quorum = *a.quorum;
  if (a.fault_agency) spec.run.fault = simnet::FaultInjection{*a.fault_agency, a.fault_delta};
  spec.validate();
  return spec;
}

void simulate(const ScenarioArgs& a, const fs::path& out_dir, std::ostream& out) {
  Inputs inputs;
  Artifacts artifacts;
  const auto spec = load_scenario(inputs, a);
  artifacts.store = store_mode(a.store);

  const auto result = simnet::run_scenario(spec);

  std::size_t valid = 0, broken = 0, disputed = 0;
  for (const auto& r : result.rounds) {
    valid += r.verdict == consensus::VerdictKind::Valid;
    broken += r.verdict == consensus::VerdictKind::Broken;
    disputed += r.disputed;
  }
  Json report;
  report["scenario"] = spec.name;
  report["seed"] = spec.seed;
  report["metrics"] = simnet::metrics_to_json(result.metrics);
  report["rounds"] = Json{{"total", result.rounds.size()},
                          {"valid", valid},
                          {"broken", broken},
                          {"disputed", disputed}};
  report["rewards"] = ledger_to_json(result.ledger);
  report["final_hash"] = result.final_state.hash();

  artifacts.files["ratings.jsonl"] = storage::to_jsonl(result.log);
  artifacts.files["transcript.jsonl"] = consensus::events_to_jsonl(result.transcript);
  artifacts.files["metrics.json"] = dump(report);
  artifacts.files["trajectories.csv"] = simnet::trajectories_csv(result);
  artifacts.files["state.json"] = state_to_snapshot(result.final_state);

  // Each agency that backed the accepted state keeps a snapshot of it.
  std::map<std::string, const ReputationState*> by_hash;
  for (const auto& s : result.trajectory) by_hash[s.hash()] = &s;
  for (const auto& r : result.rounds) {
    if (r.verdict != consensus::VerdictKind::Valid) continue;
    const auto* state = by_hash.at(r.hash);
    for (const auto& ev : result.transcript) {
      if (ev.value("event", "") == "submission" && ev.value("round", std::uint64_t{0}) == r.round &&
          ev.value("hash", "") == r.hash) {
        artifacts.snapshots.emplace_back(AgencyId(ev.at("agency").get<std::string>()), *state);
      }
    }
  }

  Json config = simnet::spec_to_json(spec);
  config["store"] = a.store;
  publish(out_dir, artifacts, base_manifest("simulate", std::move(config), inputs));
  out << spec.name << ": " << valid << "/" << result.rounds.size() << " rounds valid, spearman "
      << result.metrics.spearman_quality_vs_reputation << ", attacker gain "
      << result.metrics.attacker_gain << " -> " << out_dir.string() << "\n";
}

void compare_log(const ScenarioArgs& a, const fs::path& out_dir, std::ostream& out) {
  Inputs inputs;
  Artifacts artifacts;
  const auto spec = load_scenario(inputs, a);
  const auto cmp = simnet::compare_linear_vs_log(spec);
  Json report;
  report["scenario"] = spec.name;
  report["seed"] = spec.seed;
  report["linear"] = simnet::metrics_to_json(cmp.linear);
  report["log"] = simnet::metrics_to_json(cmp.log);
  report["entropy_log_minus_linear"] = cmp.log.entropy - cmp.linear.entropy;
  report["gini_log_minus_linear"] = cmp.log.gini - cmp.linear.gini;
  artifacts.files["comparison.json"] = dump(report);
  publish(out_dir, artifacts, base_manifest("compare-log", simnet::spec_to_json(spec), inputs));
  out << "entropy linear " << cmp.linear.entropy << " bits, log " << cmp.log.entropy
      << " bits -> " << out_dir.string() << "\n";
}

// ---- consensus-sim ---------------------------------------------------------

struct ConsensusArgs {
  std::string script;
};

consensus::RoundRules rules_from_json(const Json& j) {
  consensus::RoundRules rules;
  for (const auto& [key, value] : j.items()) {
    if (key == "round") {
      rules.round = value.get<std::uint64_t>();
    } else if (key == "quorum_min") {
      rules.quorum_min = value.get<std::size_t>();
    } else if (key == "submissions_max") {
      rules.submissions_max = value.get<std::size_t>();
    } else if (key == "deadline") {
      rules.deadline = value.get<Tick>();
    } else if (key == "quorum_mass") {
      if (!value.is_null()) rules.quorum_mass = value.get<double>();
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown rules key '" + key + "'");
    }
  }
  rules.validate();
  return rules;
}

void consensus_sim(const ConsensusArgs& a, const fs::path& out_dir, std::ostream& out) {
  Inputs inputs;
  Artifacts artifacts;
  const auto doc = inputs.parse("script", a.script, ErrorCode::InvalidConfig);

  consensus::RoundRules rules;
  std::optional<std::map<AgencyId, double>> reputations;
  std::vector<consensus::StateSubmission> submissions;
  std::optional<Tick> expire_at;
  std::optional<std::int64_t> reward;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "script must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "rules") {
        rules = rules_from_json(value);
      } else if (key == "reputations") {
        reputations.emplace();
        for (const auto& [agency, r] : value.items()) {
          reputations->emplace(AgencyId(agency), r.get<double>());
        }
      } else if (key == "submissions") {
        for (const auto& s : value) {
          consensus::StateSubmission sub;
          sub.agency = AgencyId(s.at("agency").get<std::string>());
          sub.state_hash = s.at("hash").get<std::string>();
          sub.received_at = s.at("received_at").get<Tick>();
          sub.round = s.contains("round") ? s.at("round").get<std::uint64_t>() : rules.round;
          submissions.push_back(std::move(sub));
        }
      } else if (key == "expire_at") {
        expire_at = value.get<Tick>();
      } else if (key == "reward") {
        reward = value.get<std::int64_t>();
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown script key '" + key + "'");
      }
    }
    if (!doc.contains("rules")) throw Error(ErrorCode::MissingField, "script needs 'rules'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  consensus::ConsensusRound round(rules);
  std::vector<Json> events;
  auto flush = [&, seen = std::size_t{0}]() mutable {
    const auto& evs = round.events();
    events.insert(events.end(), evs.begin() + static_cast<long>(seen), evs.end());
    seen = evs.size();
  };
  for (const auto& s : submissions) {
    try {
      if (reputations) {
        round.submit_weighted(s, *reputations);
      } else {
        round.submit(s);
      }
      flush();
    } catch (const Error& e) {
      if (!is_rejection(e.code())) throw;
      flush();
      Json j;
      j["event"] = "rejected";
      j["round"] = s.round;
      j["agency"] = s.agency.str();
      j["code"] = std::string(to_string(e.code()));
      events.push_back(std::move(j));
    }
  }
  if (expire_at) {
    round.expire(*expire_at);
    flush();
  }

  consensus::MiningLedger ledger;
  if (reward && round.verdict().kind == consensus::VerdictKind::Valid) {
    ledger = consensus::credit_miners(round, std::move(ledger), *reward, &events);
  }

  Json verdict;
  verdict["round"] = rules.round;
  verdict["verdict"] = std::string(consensus::to_string(round.verdict().kind));
  verdict["hash"] = round.verdict().hash;
  verdict["disputed"] = round.disputed();
  Json warnings = Json::array();
  for (const auto& w : round.warnings()) {
    Json blamed = Json::array();
    for (const auto& b : w.blamed) blamed.push_back(b.str());
    warnings.push_back(Json{{"kind", std::string(consensus::to_string(w.kind))},
                            {"blamed", std::move(blamed)}});
  }
  verdict["warnings"] = std::move(warnings);
  verdict["rewards"] = ledger_to_json(ledger);

  artifacts.files["transcript.jsonl"] = consensus::events_to_jsonl(events);
  artifacts.files["verdict.json"] = dump(verdict);
  publish(out_dir, artifacts, base_manifest("consensus-sim", doc, inputs));
  out << "round " << rules.round << ": " << consensus::to_string(round.verdict().kind)
      << (round.disputed() ? " (disputed)" : "") << " -> " << out_dir.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reputation engine and society simulator", "repute"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::optional<std::string> out_flag;
  app.add_option("--out", out_flag, "output directory (default $REPUTE_OUT or ./repute-out)");

  ComputeArgs compute_args;
  auto* compute_cmd = app.add_subcommand("compute", "one recalculation over a rating log");
  compute_cmd->add_option("--ratings", compute_args.ratings, "JSONL or CSV rating log")->required();
  compute_cmd->add_option("--genesis", compute_args.genesis, "prior state snapshot");
  compute_cmd->add_option("--origin", compute_args.origin, "t0 when no genesis is given");
  compute_cmd->add_option("--as-of", compute_args.as_of, "t_n (default: last rating time)");
  compute_args.engine.attach(compute_cmd);

  ScheduleArgs schedule_args;
  auto* schedule_cmd = app.add_subcommand("schedule", "scoped recalculations over a rating log");
  schedule_cmd->add_option("--ratings", schedule_args.ratings, "JSONL or CSV rating log")
      ->required();
  schedule_cmd->add_option("--horizon", schedule_args.horizon, "extend calendar windows to here");
  schedule_cmd->add_option("--store", schedule_args.store, "transient, local or global");
  schedule_cmd->add_option("--agency", schedule_args.agency, "agency id for local snapshots");
  schedule_args.engine.attach(schedule_cmd);
  schedule_args.scoping.attach(schedule_cmd);

  ScenarioArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "run a scenario through the agencies");
  ScenarioArgs compare_args;
  auto* compare_cmd = app.add_subcommand("compare-log", "linear versus logarithmic metrics");
  for (auto [cmd, sa] : {std::pair{simulate_cmd, &simulate_args}, {compare_cmd, &compare_args}}) {
    cmd->add_option("--scenario", sa->scenario, "scenario JSON file")->required();
    cmd->add_option("--seed", sa->seed, "override the scenario seed");
    cmd->add_option("--ticks", sa->ticks, "override the scenario length");
    cmd->add_option("--agencies", sa->agencies, "number of agencies");
    cmd->add_option("--quorum", sa->quorum, "matching submissions needed");
    cmd->add_option("--fault-agency", sa->fault_agency, "1-based agency that perturbs its state");
    cmd->add_option("--fault-delta", sa->fault_delta, "perturbation size");
    sa->engine.attach(cmd);
    sa->scoping.attach(cmd);
  }
  simulate_cmd->add_option("--store", simulate_args.store, "transient, local or global");

  ConsensusArgs consensus_args;
  auto* consensus_cmd = app.add_subcommand("consensus-sim", "replay a submission script");
  consensus_cmd->add_option("--script", consensus_args.script, "script JSON file")->required();

  // CLI11 consumes arguments from the back.
  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "repute: error: " << e.what() << "\n" << app.help();
    return kExitInvalid;
  }

  const fs::path out_dir = out_flag ? fs::path(*out_flag) : default_out();
  try {
    if (compute_cmd->parsed()) compute(compute_args, out_dir, out, err);
    if (schedule_cmd->parsed()) schedule(schedule_args, out_dir, out, err);
    if (simulate_cmd->parsed()) simulate(simulate_args, out_dir, out);
    if (compare_cmd->parsed()) compare_log(compare_args, out_dir, out);
    if (consensus_cmd->parsed()) consensus_sim(consensus_args, out_dir, out);
  } catch (const Error& e) {
    err << "repute: error: " << e.what() << "\n";
    return is_validation(e.code()) ? kExitInvalid : kExitRuntime;
  } catch (const std::exception& e) {
    err << "repute: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace repute::cli
