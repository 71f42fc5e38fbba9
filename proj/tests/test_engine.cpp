#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "repute/engine.hpp"

using namespace repute;
using namespace repute::engine;

namespace {

constexpr double kTol = 1e-12;

RatingRecord rating(RatingKind kind, const char* from, const char* to, double value,
                    double weight, Tick time = 1, std::string aspect = {},
                    std::string category = {}, std::string event = {}) {
  RatingRecord r;
  r.kind = kind;
  r.from = MemberId(from);
  r.to = MemberId(to);
  r.time = time;
  r.value = value;
  r.weight = weight;
  r.aspect = std::move(aspect);
  r.category = std::move(category);
  r.event = std::move(event);
  return r;
}

ReputationState prior_with(std::initializer_list<std::pair<const char*, double>> reps,
                           Tick origin = 0, Tick as_of = 0) {
  ReputationMap m;
  for (auto [id, v] : reps) m.emplace(MemberId(id), v);
  return ReputationState(origin, as_of, std::move(m));
}

MemberId id(const char* s) { return MemberId(s); }

}  // namespace

TEST_CASE("normalize_financial") {
  // log10(10)=1, log10(100)=2, log10(1000)=3
  auto out = normalize_financial(std::vector<double>{9, 99, 999});
  REQUIRE(out.size() == 3);
  CHECK(out[0] == doctest::Approx(1.0 / 3.0).epsilon(kTol));
  CHECK(out[1] == doctest::Approx(2.0 / 3.0).epsilon(kTol));
  CHECK(out[2] == 1.0);

  CHECK(normalize_financial(std::vector<double>{42}) == std::vector<double>{1.0});
  CHECK(normalize_financial(std::vector<double>{10, 10, 10}) == std::vector<double>{1, 1, 1});
  CHECK_THROWS_AS(normalize_financial(std::vector<double>{}), Error);
  CHECK_THROWS_AS(normalize_financial(std::vector<double>{5, 0}), Error);
}

TEST_CASE("differential_endorsing examples") {
  EngineConfig cfg;
  SUBCASE("single rater is its own weighted mean") {
    auto prior = prior_with({{"j", 0.8}});
    std::vector<RatingRecord> rs{rating(RatingKind::Endorse, "j", "i", 1.0, 5.0)};
    auto d = differential_endorsing(rs, prior, cfg);
    CHECK(std::abs(d.values.at(id("i")) - 1.0) <= kTol);
  }
  SUBCASE("two raters weighted by reputation") {
    auto prior = prior_with({{"a", 1.0}, {"b", 0.5}});
    std::vector<RatingRecord> rs{rating(RatingKind::Endorse, "a", "i", 1.0, 1.0),
                                 rating(RatingKind::Endorse, "b", "i", -1.0, 1.0)};
    auto d = differential_endorsing(rs, prior, cfg);
    // (1*1*1 + (-1)*1*0.5) / (1 + 0.5)
    CHECK(std::abs(d.values.at(id("i")) - 1.0 / 3.0) <= kTol);
  }
  SUBCASE("equal-weight aspect blend") {
    auto prior = prior_with({{"a", 1.0}});
    std::vector<RatingRecord> rs{
        rating(RatingKind::Endorse, "a", "i", 0.2, 1.0, 1, "quality"),
        rating(RatingKind::Endorse, "a", "i", 0.8, 1.0, 1, "timeliness")};
    cfg.aspect_weights = {{"quality", 1.0}, {"timeliness", 1.0}};
    auto d = differential_endorsing(rs, prior, cfg);
    CHECK(std::abs(d.values.at(id("i")) - 0.5) <= kTol);
  }
  SUBCASE("unequal aspect weights") {
    auto prior = prior_with({{"a", 1.0}});
    std::vector<RatingRecord> rs{
        rating(RatingKind::Endorse, "a", "i", 0.2, 1.0, 1, "quality"),
        rating(RatingKind::Endorse, "a", "i", 0.8, 1.0, 1, "timeliness")};
    cfg.aspect_weights = {{"quality", 3.0}, {"timeliness", 1.0}};
    auto d = differential_endorsing(rs, prior, cfg);
    CHECK(std::abs(d.values.at(id("i")) - (3 * 0.2 + 0.8) / 4) <= kTol);
  }
  SUBCASE("zero-weight aspect alone is reported") {
    auto prior = prior_with({{"a", 1.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Endorse, "a", "i", 0.2, 1.0, 1, "spam")};
    cfg.aspect_weights = {{"spam", 0.0}, {"quality", 1.0}};
    auto d = differential_endorsing(rs, prior, cfg);
    CHECK(d.values.empty());
    REQUIRE(d.skipped.size() == 1);
    CHECK(d.skipped[0].reason == SkippedCell::Reason::ZeroAspectWeight);
  }
  SUBCASE("wrong kind is rejected") {
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "a", "i", 0.2, 1.0)};
    CHECK_THROWS_AS(differential_endorsing(rs, prior_with({}), cfg), Error);
  }
}

TEST_CASE("differential_transactional examples") {
  EngineConfig cfg;
  SUBCASE("single vote") {
    auto prior = prior_with({{"j", 1.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "j", "i", 0.5, 2.0)};
    CHECK(std::abs(differential_transactional(rs, prior, cfg).values.at(id("i")) - 0.5) <= kTol);
  }
  SUBCASE("financial weights") {
    auto prior = prior_with({{"a", 1.0}, {"b", 1.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "a", "i", 1.0, 1.0),
                                 rating(RatingKind::Vote, "b", "i", 0.0, 3.0)};
    // (1 + 0) / (1 + 3)
    CHECK(std::abs(differential_transactional(rs, prior, cfg).values.at(id("i")) - 0.25) <=
          kTol);
  }
  SUBCASE("floored-to-zero rater contributes nothing") {
    cfg.rater_weight_floor = 0.0;
    auto prior = prior_with({{"z", 0.0}, {"a", 0.6}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "z", "i", -1.0, 10.0),
                                 rating(RatingKind::Vote, "a", "i", 0.7, 1.0)};
    CHECK(std::abs(differential_transactional(rs, prior, cfg).values.at(id("i")) - 0.7) <= kTol);
  }
  SUBCASE("negative rater reputation never weighs negatively") {
    auto prior = prior_with({{"z", -0.9}, {"a", 0.6}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "z", "i", -1.0, 10.0),
                                 rating(RatingKind::Vote, "a", "i", 0.7, 1.0)};
    CHECK(std::abs(differential_transactional(rs, prior, cfg).values.at(id("i")) - 0.7) <= kTol);
  }
  SUBCASE("all-zero weights give ZeroDenominator, not a fabricated zero") {
    auto prior = prior_with({{"z", 0.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "z", "i", 1.0, 1.0)};
    auto d = differential_transactional(rs, prior, cfg);
    CHECK(d.values.empty());
    REQUIRE(d.skipped.size() == 1);
    CHECK(d.skipped[0].member == id("i"));
    CHECK(d.skipped[0].reason == SkippedCell::Reason::ZeroDenominator);
  }
  SUBCASE("unknown raters weigh in at the default reputation") {
    cfg.default_reputation = 0.25;
    auto prior = prior_with({{"a", 1.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "a", "i", 1.0, 1.0),
                                 rating(RatingKind::Vote, "new", "i", 0.0, 1.0)};
    CHECK(std::abs(differential_transactional(rs, prior, cfg).values.at(id("i")) - 0.8) <= kTol);
  }
}

TEST_CASE("differential_fine_grained examples") {
  EngineConfig cfg;
  auto prior = prior_with({{"a", 1.0}, {"b", 1.0}});
  SUBCASE("one record defines every slice it belongs to") {
    std::vector<RatingRecord> rs{
        rating(RatingKind::Vote, "a", "i", 0.6, 1.0, 1, "quality", "pizza", "e1")};
    auto fg = differential_fine_grained(rs, prior, cfg);
    CHECK(std::abs(fg.by_category.at({id("i"), "pizza"}) - 0.6) <= kTol);
    CHECK(std::abs(fg.by_aspect.at({id("i"), "quality"}) - 0.6) <= kTol);
    CHECK(std::abs(fg.by_aspect_event.at({id("i"), "quality", "e1"}) - 0.6) <= kTol);
  }
  SUBCASE("slice versus pooled means") {
    std::vector<RatingRecord> rs{
        rating(RatingKind::Vote, "a", "i", 0.2, 1.0, 1, "quality", "pizza"),
        rating(RatingKind::Vote, "b", "i", 1.0, 1.0, 1, "quality", "painting")};
    auto fg = differential_fine_grained(rs, prior, cfg);
    CHECK(std::abs(fg.by_aspect.at({id("i"), "quality"}) - 0.6) <= kTol);
    CHECK(std::abs(fg.by_category.at({id("i"), "pizza"}) - 0.2) <= kTol);
    CHECK(std::abs(fg.by_category.at({id("i"), "painting"}) - 1.0) <= kTol);
  }
  SUBCASE("missing category lands in the default slice") {
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "a", "i", 0.4, 1.0, 1, "quality")};
    auto fg = differential_fine_grained(rs, prior, cfg);
    REQUIRE(fg.by_category.size() == 1);
    CHECK(fg.by_category.begin()->first == CategoryKey{id("i"), ""});
  }
  SUBCASE("dF_ic blends aspects within a category") {
    cfg.aspect_weights = {{"quality", 1.0}, {"timeliness", 3.0}};
    std::vector<RatingRecord> rs{
        rating(RatingKind::Vote, "a", "i", 0.2, 1.0, 1, "quality", "pizza"),
        rating(RatingKind::Vote, "b", "i", 1.0, 1.0, 1, "timeliness", "pizza")};
    auto fg = differential_fine_grained(rs, prior, cfg);
    CHECK(std::abs(fg.by_category.at({id("i"), "pizza"}) - (0.2 + 3.0) / 4.0) <= kTol);
  }
  SUBCASE("zero-weight slice is skipped and reported") {
    auto zero = prior_with({{"z", 0.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "z", "i", 0.4, 1.0, 1, "q", "c", "e")};
    auto fg = differential_fine_grained(rs, zero, cfg);
    CHECK(fg.by_category.empty());
    CHECK(fg.by_aspect.empty());
    CHECK(fg.by_aspect_event.empty());
    CHECK(fg.skipped.size() == 3);
  }
}

TEST_CASE("blend_differential") {
  EngineConfig cfg;
  ReputationMap ds{{id("m"), 0.4}, {id("s"), -0.2}};
  ReputationMap df{{id("m"), 0.8}, {id("f"), 0.3}};
  auto dp = blend_differential(ds, df, cfg);
  CHECK(std::abs(dp.at(id("m")) - 0.6) <= kTol);
  CHECK(dp.at(id("f")) == 0.3);
  CHECK(dp.at(id("s")) == -0.2);

  cfg.transact_blend = 0.0;
  auto only_s = blend_differential(ds, df, cfg);
  CHECK(only_s.at(id("m")) == 0.4);
  CHECK_FALSE(only_s.contains(id("f")));
}

TEST_CASE("normalize_differential") {
  auto p = normalize_differential({{id("a"), 0.2}, {id("b"), -0.5}, {id("c"), 0.1}});
  CHECK(std::abs(p.at(id("a")) - 0.4) <= kTol);
  CHECK(p.at(id("b")) == -1.0);
  CHECK(std::abs(p.at(id("c")) - 0.2) <= kTol);

  auto zeros = normalize_differential({{id("a"), 0.0}, {id("b"), 0.0}});
  CHECK(zeros.at(id("a")) == 0.0);
  CHECK(zeros.at(id("b")) == 0.0);

  CHECK(normalize_differential({{id("a"), -0.3}}).at(id("a")) == -1.0);
}

TEST_CASE("log_differential") {
  CHECK(log_differential(0.0) == 0.0);
  CHECK(std::abs(log_differential(1.0) - 0.30102999566398120) <= kTol);
  CHECK(log_differential(-1.0) == -log_differential(1.0));
}

TEST_CASE("update_reputation") {
  EngineConfig cfg;
  SUBCASE("blend of equal intervals") {
    ReputationState prior(0, 1, {{id("i"), 0.4}});
    auto next = update_reputation(prior, {{id("i"), 0.8}}, 2, cfg);
    CHECK(std::abs(*next.find(id("i")) - 0.6) <= kTol);
    CHECK(next.as_of() == 2);
    CHECK(next.origin() == 0);
  }
  SUBCASE("first period takes P exactly") {
    auto next = update_reputation(ReputationState::genesis(0), {{id("i"), 0.37}}, 5, cfg);
    CHECK(*next.find(id("i")) == 0.37);
  }
  SUBCASE("long history dominates") {
    ReputationState prior(0, 9, {{id("i"), 0.5}});
    auto next = update_reputation(prior, {{id("i"), 1.0}}, 10, cfg);
    CHECK(std::abs(*next.find(id("i")) - 0.55) <= kTol);
  }
  SUBCASE("decay factors shift the blend") {
    cfg.decay_prev = 0.5;
    cfg.decay_new = 2.0;
    ReputationState prior(0, 4, {{id("i"), 0.0}});
    auto next = update_reputation(prior, {{id("i"), 1.0}}, 5, cfg);
    // a = 0.5*4 = 2, b = 2*1 = 2
    CHECK(std::abs(*next.find(id("i")) - 0.5) <= kTol);
  }
  SUBCASE("no-evidence rule") {
    ReputationState prior(0, 1, {{id("i"), 0.9}});
    cfg.default_reputation = 0.1;
    auto decayed = update_reputation(prior, {}, 2, cfg);
    CHECK(std::abs(*decayed.find(id("i")) - 0.5) <= kTol);
    cfg.no_evidence = NoEvidenceRule::Hold;
    auto held = update_reputation(prior, {}, 2, cfg);
    CHECK(*held.find(id("i")) == 0.9);
  }
  SUBCASE("time must advance") {
    ReputationState prior(0, 3, {});
    CHECK_THROWS_AS(update_reputation(prior, {}, 3, cfg), Error);
  }
}

TEST_CASE("compute_period examples") {
  EngineConfig cfg;
  SUBCASE("empty ratings carry prior entries through the no-evidence rule") {
    ReputationState prior(0, 2, {{id("a"), 0.9}, {id("b"), 0.1}});
    auto out = compute_period({}, prior, 4, cfg);
    auto expected = update_reputation(prior, {}, 4, cfg);
    CHECK(out.state.hash() == expected.hash());
  }
  SUBCASE("single endorsement from a default-reputation rater") {
    cfg.default_reputation = 0.5;
    ReputationState prior(0, 1, {{id("i"), 0.5}});
    std::vector<RatingRecord> rs{rating(RatingKind::Endorse, "j", "i", 0.8, 1.0, 2)};
    auto out = compute_period(rs, prior, 2, cfg);
    // dS = 0.8, P = 0.8/0.8 = 1, R = (1*0.5 + 1*1)/2
    CHECK(std::abs(out.differential.endorsing.at(id("i")) - 0.8) <= kTol);
    CHECK(out.differential.normalized.at(id("i")) == 1.0);
    CHECK(std::abs(*out.state.find(id("i")) - 0.75) <= kTol);
  }
  SUBCASE("shuffled input gives an identical hash") {
    std::mt19937_64 gen(3);
    std::vector<RatingRecord> rs;
    const char* names[] = {"a", "b", "c", "d", "e"};
    for (int k = 0; k < 60; ++k) {
      const char* from = names[gen() % 5];
      const char* to = names[gen() % 5];
      if (std::string_view(from) == to) continue;
      rs.push_back(rating(k % 3 == 0 ? RatingKind::Endorse : RatingKind::Vote, from, to,
                          std::uniform_real_distribution<double>(-1, 1)(gen),
                          std::uniform_real_distribution<double>(0, 9)(gen),
                          1 + static_cast<Tick>(gen() % 10)));
    }
    rs.push_back(rating(RatingKind::Finance, "a", "b", 1.0, 500.0, 3));
    rs.push_back(rating(RatingKind::Finance, "c", "b", 1.0, 5.0, 4));
    auto prior = prior_with({{"a", 0.3}, {"b", 0.9}});
    auto first = compute_period(rs, prior, 10, cfg);
    for (int trial = 0; trial < 20; ++trial) {
      std::shuffle(rs.begin(), rs.end(), gen);
      CHECK(compute_period(rs, prior, 10, cfg).state.hash() == first.state.hash());
    }
  }
  SUBCASE("records outside the window are rejected") {
    ReputationState prior(0, 5, {});
    std::vector<RatingRecord> rs{rating(RatingKind::Vote, "a", "b", 0.1, 1.0, 5)};
    CHECK_THROWS_AS(compute_period(rs, prior, 8, cfg), Error);
  }
  SUBCASE("payments are log-normalized within the batch") {
    cfg.transact_blend = 1.0;
    auto prior = prior_with({{"a", 1.0}, {"b", 1.0}});
    std::vector<RatingRecord> rs{rating(RatingKind::Finance, "a", "i", 1.0, 999.0),
                                 rating(RatingKind::Vote, "b", "i", -1.0, 1.0)};
    auto out = compute_period(rs, prior, 1, cfg);
    // payment weight 1 after normalization, vote weight 1: mean of +1 and -1
    CHECK(std::abs(out.differential.transactional.at(id("i"))) <= kTol);
  }
}

// ---------------------------------------------------------------------------
// properties

namespace {

struct RandomInstance {
  std::vector<RatingRecord> records;
  ReputationState prior;
  std::vector<oracle::Rating> flat;
};

RandomInstance random_instance(std::mt19937_64& gen, RatingKind kind, double floor) {
  const int members = 2 + static_cast<int>(gen() % 19);
  const int count = 1 + static_cast<int>(gen() % 200);
  std::uniform_real_distribution<double> value(-1, 1), stake(0, 10), rep(-0.2, 1);
  ReputationMap reps;
  for (int m = 0; m < members; ++m) {
    if (gen() % 4 != 0) reps.emplace(MemberId("m" + std::to_string(m)), rep(gen));
  }
  RandomInstance inst{{}, ReputationState(0, 0, reps), {}};
  EngineConfig cfg;
  cfg.rater_weight_floor = floor;
  const char* aspects[] = {"", "quality", "timeliness"};
  for (int k = 0; k < count; ++k) {
    const int from = static_cast<int>(gen() % members);
    int to = static_cast<int>(gen() % members);
    if (to == from) to = (to + 1) % members;
    RatingRecord r;
    r.kind = kind;
    r.from = MemberId("m" + std::to_string(from));
    r.to = MemberId("m" + std::to_string(to));
    r.time = 1;
    r.value = value(gen);
    r.weight = stake(gen);
    r.aspect = aspects[gen() % 3];
    inst.records.push_back(r);
    inst.flat.push_back({r.from.str(), r.to.str(), r.aspect, r.value, r.weight,
                         rater_weight(r.from, inst.prior, cfg)});
  }
  return inst;
}

}  // namespace

TEST_CASE("property: kernel agrees with the direct formula and the weighted-mean bound") {
  std::mt19937_64 gen(101);
  EngineConfig cfg;
  cfg.rater_weight_floor = 0.05;
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(gen, trial % 2 ? RatingKind::Vote : RatingKind::Endorse,
                                cfg.rater_weight_floor);
    auto d = trial % 2 ? differential_transactional(inst.records, inst.prior, cfg)
                       : differential_endorsing(inst.records, inst.prior, cfg);
    for (const auto& [member, value] : d.values) {
      const double expected = oracle::differential(inst.flat, member.str(), oracle::unit_weight);
      CHECK(std::abs(value - expected) <= 1e-12);
      double lo = 1, hi = -1;
      for (const auto& r : inst.records) {
        if (r.to == member) {
          lo = std::min(lo, r.value);
          hi = std::max(hi, r.value);
        }
      }
      CHECK(value >= lo - 1e-12);
      CHECK(value <= hi + 1e-12);
    }
  }
}

TEST_CASE("property: log_differential is odd, increasing and contracting") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const double cap = std::log10(2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double x = u(gen);
    const double y = u(gen);
    CHECK(log_differential(-x) == -log_differential(x));
    CHECK(std::abs(log_differential(x)) <= std::abs(x));
    CHECK(std::abs(log_differential(x)) <= cap);
    if (x < y) CHECK(log_differential(x) < log_differential(y));
  }
}

TEST_CASE("property: update is a convex combination when lambda = 1") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1, 1);
  EngineConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    const Tick origin = static_cast<Tick>(gen() % 10);
    const Tick as_of = origin + static_cast<Tick>(gen() % 10);
    const Tick t_n = as_of + 1 + static_cast<Tick>(gen() % 10);
    const double r = u(gen), p = u(gen);
    ReputationState prior(origin, as_of, {{id("i"), r}});
    const double next = *update_reputation(prior, {{id("i"), p}}, t_n, cfg).find(id("i"));
    CHECK(next >= std::min(r, p) - 1e-15);
    CHECK(next <= std::max(r, p) + 1e-15);
  }
}

TEST_CASE("property: sybil null-gain at floor zero") {
  // Every rater of the target has zero reputation: no differential, only decay.
  EngineConfig cfg;
  cfg.default_reputation = 0.0;
  cfg.rater_weight_floor = 0.0;
  std::vector<RatingRecord> rs{rating(RatingKind::Vote, "s1", "s2", 1.0, 50.0, 1),
                               rating(RatingKind::Vote, "s2", "s1", 1.0, 50.0, 1),
                               rating(RatingKind::Endorse, "s3", "s1", 1.0, 50.0, 1)};
  auto out = compute_period(rs, ReputationState::genesis(0), 1, cfg);
  CHECK(out.differential.blended.empty());
  CHECK(out.state.entries().empty());
  CHECK(out.differential.skipped.size() == 3);
}
