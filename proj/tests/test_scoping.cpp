#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <limits>
#include <random>

#include "repute/scoping.hpp"

using namespace repute;
using namespace repute::scoping;

namespace {

RatingRecord vote(const std::string& from, const std::string& to, Tick t, double value = 0.5) {
  RatingRecord r;
  r.kind = RatingKind::Vote;
  r.from = MemberId(from);
  r.to = MemberId(to);
  r.time = t;
  r.value = value;
  r.weight = 1.0;
  return r;
}

std::vector<RatingRecord> ten_records() {
  std::vector<RatingRecord> rs;
  for (Tick t = 1; t <= 10; ++t) rs.push_back(vote("m" + std::to_string(t % 3), "x", t));
  return rs;
}

std::vector<RatingRecord> random_stream(std::mt19937_64& gen, int n, Tick span) {
  std::vector<RatingRecord> rs;
  std::uniform_real_distribution<double> value(-1, 1);
  for (int k = 0; k < n; ++k) {
    const auto from = "m" + std::to_string(gen() % 8);
    auto to = "m" + std::to_string(gen() % 8);
    if (to == from) to = "x";
    rs.push_back(vote(from, to, 1 + static_cast<Tick>(gen() % span), value(gen)));
  }
  std::stable_sort(rs.begin(), rs.end(), record_time_less);
  return rs;
}

std::size_t total_records(const std::vector<Window>& ws) {
  std::size_t n = 0;
  for (const auto& w : ws) n += w.records.size();
  return n;
}

}  // namespace

TEST_CASE("partition examples") {
  const auto rs = ten_records();
  ScopingPolicy p;

  p.mode = Mode::UpToDate;
  p.window = 5;
  auto up = partition(rs, p, 0);
  REQUIRE(up.size() == 2);
  CHECK(up[0].end == 5);
  CHECK(up[1].end == 10);
  CHECK(up[0].records.size() == 5);

  p.mode = Mode::BlockedIncremental;
  p.block_size = 4;
  auto blocks = partition(rs, p, 0);
  REQUIRE(blocks.size() == 3);
  CHECK(blocks[0].records.size() == 4);
  CHECK(blocks[1].records.size() == 4);
  CHECK(blocks[2].records.size() == 2);

  p.mode = Mode::Incremental;
  auto inc = partition(rs, p, 0);
  REQUIRE(inc.size() == 10);
  for (const auto& w : inc) CHECK(w.records.size() == 1);
}

TEST_CASE("up-to-date windows align to the origin, not the first record") {
  std::vector<RatingRecord> rs{vote("a", "b", 7), vote("a", "b", 8)};
  ScopingPolicy p;
  p.window = 5;
  auto ws = partition(rs, p, 0);
  REQUIRE(ws.size() == 2);
  CHECK(ws[0].end == 5);
  CHECK(ws[0].records.empty());
  CHECK(ws[1].end == 10);

  auto extended = partition(rs, p, 0, Tick{22});
  CHECK(extended.size() == 5);
  CHECK(extended.back().end == 25);
}

TEST_CASE("ties stay inside one window") {
  std::vector<RatingRecord> rs{vote("a", "b", 1), vote("b", "a", 1), vote("c", "a", 1),
                               vote("a", "c", 2), vote("c", "b", 3)};
  ScopingPolicy p;
  p.mode = Mode::Incremental;
  auto inc = partition(rs, p, 0);
  REQUIRE(inc.size() == 3);
  CHECK(inc[0].records.size() == 3);

  p.mode = Mode::BlockedIncremental;
  p.block_size = 2;
  auto blocks = partition(rs, p, 0);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].records.size() == 3);
  CHECK(blocks[0].end == 1);
  CHECK(blocks[1].records.size() == 2);
}

TEST_CASE("partition errors") {
  ScopingPolicy p;
  std::vector<RatingRecord> unsorted{vote("a", "b", 3), vote("a", "b", 2)};
  CHECK_THROWS_WITH_AS(partition(unsorted, p, 0), doctest::Contains("UnsortedInput"), Error);
  std::vector<RatingRecord> early{vote("a", "b", 0)};
  CHECK_THROWS_AS(partition(early, p, 0), Error);
  p.window = 0;
  CHECK_THROWS_AS(partition({}, p, 0), Error);
}

TEST_CASE("property: partition coverage and strictly increasing ends") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto rs = random_stream(gen, 1 + static_cast<int>(gen() % 80), 40);
    for (Mode mode : {Mode::Incremental, Mode::UpToDate, Mode::BlockedIncremental}) {
      ScopingPolicy p;
      p.mode = mode;
      p.window = 1 + static_cast<Tick>(gen() % 7);
      p.block_size = 1 + gen() % 9;
      auto ws = partition(rs, p, 0);
      CHECK(total_records(ws) == rs.size());
      for (std::size_t k = 1; k < ws.size(); ++k) CHECK(ws[k].end > ws[k - 1].end);
      std::size_t seen = 0;
      for (const auto& w : ws) {
        for (const auto& r : w.records) {
          CHECK(r == rs[seen]);
          CHECK(r.time <= w.end);
          ++seen;
        }
      }
    }
    ScopingPolicy life;
    life.mode = Mode::Lifetime;
    life.window = 5;
    auto ws = partition(rs, life, 0);
    REQUIRE_FALSE(ws.empty());
    CHECK(ws.back().records.size() == rs.size());
  }
}

TEST_CASE("run_schedule is deterministic") {
  std::mt19937_64 gen(5);
  auto rs = random_stream(gen, 120, 30);
  ScopingPolicy p;
  p.window = 4;
  EngineConfig cfg;
  auto a = run_schedule(rs, p, cfg, ReputationState::genesis(0));
  auto b = run_schedule(rs, p, cfg, ReputationState::genesis(0));
  CHECK(a.final_state.hash() == b.final_state.hash());
  REQUIRE(a.log.size() == 8);
  for (std::size_t k = 0; k < a.log.size(); ++k) CHECK(a.log[k].state.hash() == b.log[k].state.hash());
}

TEST_CASE("empty up-to-date windows still decay toward the default") {
  std::vector<RatingRecord> rs{vote("a", "b", 1, 1.0)};
  ScopingPolicy p;
  p.window = 1;
  EngineConfig cfg;
  cfg.default_reputation = 0.0;
  auto genesis = ReputationState(0, 0, {{MemberId("a"), 1.0}});
  auto out = run_schedule(rs, p, cfg, genesis, Tick{4});
  REQUIRE(out.log.size() == 4);
  // b: P=1 at t=1, then three empty windows blending toward 0: 1 * 1/4
  CHECK(std::abs(*out.final_state.find(MemberId("b")) - 0.25) <= 1e-12);
}

TEST_CASE("lifetime with infinite half-life equals one full-batch computation") {
  std::mt19937_64 gen(17);
  auto rs = random_stream(gen, 90, 20);
  ScopingPolicy p;
  p.mode = Mode::Lifetime;
  p.window = 20;
  EngineConfig cfg;
  auto genesis = ReputationState::genesis(0);
  auto life = run_schedule(rs, p, cfg, genesis);
  REQUIRE(life.log.size() == 1);
  auto batch = engine::compute_period(rs, genesis, 20, cfg);
  CHECK(life.final_state.hash() == batch.state.hash());

  p.recency_half_life = 1e300;
  CHECK(run_schedule(rs, p, cfg, genesis).final_state.hash() == batch.state.hash());
}

TEST_CASE("lifetime recency weighting favors recent ratings") {
  std::vector<RatingRecord> rs{vote("a", "x", 1, -1.0), vote("a", "y", 1, 1.0),
                               vote("b", "x", 10, 1.0), vote("b", "y", 10, 0.2)};
  ScopingPolicy p;
  p.mode = Mode::Lifetime;
  p.window = 10;
  p.recency_half_life = 2.0;
  EngineConfig cfg;
  auto out = run_schedule(rs, p, cfg, ReputationState::genesis(0));
  // The recent +1 outweighs the old -1 by 2^(9/2).
  CHECK(*out.final_state.find(MemberId("x")) > 0.9);
}

TEST_CASE("property: lifetime recomputation absorbs backdated records") {
  std::mt19937_64 gen(33);
  EngineConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    auto in_order = random_stream(gen, 40, 25);
    ScopingPolicy p;
    p.mode = Mode::Lifetime;
    p.window = 25;
    p.recency_half_life = 1.0 + static_cast<double>(gen() % 10);

    // Remove a random record, replay it as a late arrival.
    const auto pick = gen() % in_order.size();
    auto late = in_order[pick];
    auto arrived = in_order;
    arrived.erase(arrived.begin() + static_cast<long>(pick));
    insert_backdated(arrived, late);

    auto genesis = ReputationState::genesis(0);
    CHECK(run_schedule(arrived, p, cfg, genesis).final_state.hash() ==
          run_schedule(in_order, p, cfg, genesis).final_state.hash());
  }
}

TEST_CASE("mode names round-trip") {
  for (Mode m : {Mode::Lifetime, Mode::Incremental, Mode::UpToDate, Mode::BlockedIncremental}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
  CHECK_FALSE(parse_mode("weekly").has_value());
}
