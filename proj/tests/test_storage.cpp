#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "repute/json_io.hpp"
#include "repute/storage.hpp"

using namespace repute;
using namespace repute::storage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("repute-storage-" + std::to_string(::getpid()) + "-" + std::to_string(next++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static inline int next = 0;
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidField;
}

ReputationState sample_state(Tick as_of, double a = 0.5) {
  return ReputationState(0, as_of, {{MemberId("alice"), a}, {MemberId("bob"), -0.125}});
}

}  // namespace

TEST_CASE("ingest sorts valid lines and reports bad ones by line number") {
  std::istringstream in(
      R"({"kind":"vote","from":"b","to":"a","time":5,"value":0.5,"weight":1})"
      "\n"
      R"({"kind":"vote","from":"c","to":"c","time":2,"value":0.5})"
      "\n\n"
      R"({"kind":"endorse","from":"a","to":"b","time":1,"value":1.0,"weight":3})"
      "\n"
      "not json\n"
      R"({"kind":"finance","from":"a","to":"c","time":3,"weight":120.5})"
      "\n");
  auto out = ingest(in, LogFormat::Jsonl);
  REQUIRE(out.records.size() == 3);
  CHECK(out.records[0].time == 1);
  CHECK(out.records[1].time == 3);
  CHECK(out.records[2].time == 5);
  CHECK(out.records[1].value == 1.0);
  REQUIRE(out.errors.size() == 2);
  CHECK(out.errors[0].line == 2);
  CHECK(out.errors[0].code == ErrorCode::SelfRating);
  CHECK(out.errors[1].line == 5);
  CHECK(out.lines == out.records.size() + out.errors.size());
}

TEST_CASE("ingest CSV with the documented header") {
  std::istringstream in(
      "kind,from,to,time,value,weight,aspect,category,event\n"
      "vote,bob,alice,4,0.25,2,quality,pizza,order-7\n"
      "endorse,carol,alice,2,1,,,,\n"
      "vote,bob,alice,x,0.25,2,,,\n");
  auto out = ingest(in, LogFormat::Csv);
  REQUIRE(out.records.size() == 2);
  CHECK(out.records[0].kind == RatingKind::Endorse);
  CHECK(out.records[0].weight == 1.0);
  CHECK(out.records[1].aspect == "quality");
  CHECK(out.records[1].category == "pizza");
  CHECK(out.records[1].event == "order-7");
  REQUIRE(out.errors.size() == 1);
  CHECK(out.errors[0].line == 4);

  std::istringstream bad_header("a,b,c\nvote,bob,alice,4,0.25,2,,,\n");
  CHECK(ingest(bad_header, LogFormat::Csv).errors.size() == 1);
}

TEST_CASE("property: shuffled input ingests to the sorted order") {
  std::mt19937_64 gen(4);
  std::vector<std::string> lines;
  for (int k = 0; k < 200; ++k) {
    RatingRecord r;
    r.kind = RatingKind::Vote;
    r.from = MemberId("m" + std::to_string(gen() % 10));
    r.to = MemberId("n" + std::to_string(gen() % 10));
    r.time = static_cast<Tick>(gen() % 30);
    r.value = 0.1 * static_cast<double>(gen() % 10);
    lines.push_back(record_to_jsonl(r));
  }
  auto join = [](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    return s;
  };
  std::istringstream first(join(lines));
  auto reference = ingest(first, LogFormat::Jsonl).records;
  CHECK(std::is_sorted(reference.begin(), reference.end(), record_time_less));
  std::shuffle(lines.begin(), lines.end(), gen);
  std::istringstream second(join(lines));
  auto again = ingest(second, LogFormat::Jsonl).records;
  REQUIRE(again.size() == reference.size());
  for (std::size_t k = 0; k < again.size(); ++k) {
    CHECK_FALSE(record_time_less(again[k], reference[k]));
    CHECK_FALSE(record_time_less(reference[k], again[k]));
  }
}

TEST_CASE("ingest from a missing path") {
  CHECK(code_of([] { ingest(fs::path("/nonexistent/ratings.jsonl")); }) ==
        ErrorCode::UnreadableInput);
}

TEST_CASE("local snapshots round-trip") {
  TempDir dir;
  SnapshotStore store(StoreMode::LocalPersistent, dir.path);
  const auto state = sample_state(7);
  auto ref = store.save(state, AgencyId("ra-1"));
  REQUIRE(ref.path);
  CHECK(*ref.path == dir.path / "ra-1" / "7.json");
  auto back = store.load(AgencyId("ra-1"), 7);
  CHECK(back.hash() == state.hash());
  CHECK(back.entries() == state.entries());
  CHECK(code_of([&] { store.load(AgencyId("ra-2"), 7); }) == ErrorCode::NotFound);
}

TEST_CASE("global snapshots: idempotent writes and conflict detection") {
  TempDir dir;
  SnapshotStore store(StoreMode::GlobalPersistent, dir.path);
  const auto state = sample_state(3);
  store.save(state, AgencyId("ra-1"));
  store.save(state, AgencyId("ra-2"));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "shared")) ++files;
  CHECK(files == 1);
  CHECK(code_of([&] { store.save(sample_state(3, 0.75), AgencyId("ra-3")); }) ==
        ErrorCode::SnapshotConflict);
  CHECK(store.load(AgencyId("anyone"), 3).hash() == state.hash());
}

TEST_CASE("transient snapshots are never persisted") {
  SnapshotStore store(StoreMode::Transient);
  auto ref = store.save(sample_state(1), AgencyId("ra"));
  CHECK_FALSE(ref.path.has_value());
  CHECK(ref.hash == sample_state(1).hash());
  CHECK(code_of([&] { store.load(AgencyId("ra"), 1); }) == ErrorCode::NotFound);
}

TEST_CASE("corrupted snapshot fails its integrity check") {
  TempDir dir;
  SnapshotStore store(StoreMode::LocalPersistent, dir.path);
  auto ref = store.save(sample_state(2), AgencyId("ra"));
  auto text = read_file(*ref.path);
  auto pos = text.find("0.5");
  REQUIRE(pos != std::string::npos);
  text[pos + 2] = '7';
  std::ofstream(*ref.path, std::ios::trunc) << text;
  CHECK(code_of([&] { store.load(AgencyId("ra"), 2); }) == ErrorCode::HashMismatch);

  std::ofstream(*ref.path, std::ios::trunc) << "{ truncated";
  CHECK(code_of([&] { store.load(AgencyId("ra"), 2); }) == ErrorCode::HashMismatch);
}

TEST_CASE("atomic writes leave no temporary files behind") {
  TempDir dir;
  write_file_atomic(dir.path / "out" / "a.txt", "hello");
  write_file_atomic(dir.path / "out" / "a.txt", "world");
  CHECK(read_file(dir.path / "out" / "a.txt") == "world");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "out")) ++files;
  CHECK(files == 1);
}
