#include "repute/storage.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>

#include "repute/json_io.hpp"

namespace repute::storage {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCsvHeader = "kind,from,to,time,value,weight,aspect,category,event";

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(const std::string& text, const char* name) {
  if (text.empty()) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidField, std::string("field '") + name + "' is not a number");
  }
  return value;
}

RawRecord raw_from_csv(const std::vector<std::string>& f) {
  if (f.size() != 9) {
    throw Error(ErrorCode::MissingField, "expected 9 columns, found " + std::to_string(f.size()));
  }
  auto text = [](const std::string& s) -> std::optional<std::string> {
    if (s.empty()) return std::nullopt;
    return s;
  };
  RawRecord raw;
  raw.kind = text(f[0]);
  raw.from = text(f[1]);
  raw.to = text(f[2]);
  raw.time = parse_number<Tick>(f[3], "time");
  raw.value = parse_number<double>(f[4], "value");
  raw.weight = parse_number<double>(f[5], "weight");
  raw.aspect = text(f[6]);
  raw.category = text(f[7]);
  raw.event = text(f[8]);
  return raw;
}

}  // namespace

IngestResult ingest(std::istream& in, LogFormat format) {
  IngestResult out;
  std::string line;
  std::size_t number = 0;
  bool header_pending = format == LogFormat::Csv;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    if (header_pending) {
      header_pending = false;
      std::string header = line;
      header.erase(std::remove(header.begin(), header.end(), '\r'), header.end());
      if (header != kCsvHeader) {
        out.errors.push_back({number, ErrorCode::MissingField,
                              "CSV header must be '" + std::string(kCsvHeader) + "'"});
        return out;
      }
      continue;
    }
    ++out.lines;
    try {
      if (format == LogFormat::Jsonl) {
        out.records.push_back(validate_record(raw_record_from_json(Json::parse(line))));
      } else {
        out.records.push_back(validate_record(raw_from_csv(split_csv(line))));
      }
    } catch (const Error& e) {
      out.errors.push_back({number, e.code(), e.what()});
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back({number, ErrorCode::InvalidField, e.what()});
    }
  }
  std::stable_sort(out.records.begin(), out.records.end(), record_time_less);
  return out;
}

IngestResult ingest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::UnreadableInput, "cannot open '" + path.string() + "'");
  }
  return ingest(in, path.extension() == ".csv" ? LogFormat::Csv : LogFormat::Jsonl);
}

std::string to_jsonl(const std::vector<RatingRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_jsonl(r);
    out += '\n';
  }
  return out;
}

std::string_view to_string(StoreMode mode) {
  switch (mode) {
    case StoreMode::Transient: return "transient";
    case StoreMode::LocalPersistent: return "local";
    case StoreMode::GlobalPersistent: return "global";
  }
  return "transient";
}

std::optional<StoreMode> parse_store_mode(std::string_view text) {
  if (text == "transient") return StoreMode::Transient;
  if (text == "local") return StoreMode::LocalPersistent;
  if (text == "global") return StoreMode::GlobalPersistent;
  return std::nullopt;
}

SnapshotStore::SnapshotStore(StoreMode mode, fs::path root) : mode_(mode), root_(std::move(root)) {
  if (mode_ == StoreMode::Transient) return;
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw Error(ErrorCode::IoFailure, "snapshot root '" + root_.string() + "' is not usable");
  }
}

fs::path SnapshotStore::path_for(const AgencyId& agency, Tick as_of) const {
  const auto file = std::to_string(as_of) + ".json";
  if (mode_ == StoreMode::GlobalPersistent) return root_ / "shared" / file;
  return root_ / agency.str() / file;
}

namespace {

fs::path temp_sibling(const fs::path& path) {
  static std::atomic<unsigned> counter{0};
  return path.parent_path() / (path.filename().string() + ".tmp." + std::to_string(::getpid()) +
                               "." + std::to_string(counter++));
}

void write_all(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const auto tmp = temp_sibling(path);
  write_all(tmp, bytes);
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot move snapshot into '" + path.string() + "'");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "no file at '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SnapshotRef SnapshotStore::save(const ReputationState& state, const AgencyId& agency) const {
  if (mode_ == StoreMode::Transient) return SnapshotRef{std::nullopt, state.hash()};

  const auto path = path_for(agency, state.as_of());
  const auto bytes = state_to_snapshot(state);
  if (mode_ == StoreMode::LocalPersistent) {
    write_file_atomic(path, bytes);
    return SnapshotRef{path, state.hash()};
  }

  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const auto tmp = temp_sibling(path);
  write_all(tmp, bytes);
  // A hard link fails if the target exists, giving first-writer-wins atomically.
  fs::create_hard_link(tmp, path, ec);
  std::error_code ignore;
  fs::remove(tmp, ignore);
  if (!ec) return SnapshotRef{path, state.hash()};
  if (ec != std::errc::file_exists) {
    throw Error(ErrorCode::IoFailure, "cannot publish '" + path.string() + "': " + ec.message());
  }
  const auto existing = state_from_snapshot(read_file(path));
  if (existing.hash() != state.hash()) {
    throw Error(ErrorCode::SnapshotConflict, "tick " + std::to_string(state.as_of()) +
                                                 " already holds state " + existing.hash());
  }
  return SnapshotRef{path, state.hash()};
}

ReputationState SnapshotStore::load(const AgencyId& agency, Tick as_of) const {
  if (mode_ == StoreMode::Transient) {
    throw Error(ErrorCode::NotFound, "transient snapshots are never stored");
  }
  const auto path = path_for(agency, as_of);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::NotFound, "no snapshot at '" + path.string() + "'");
  }
  return state_from_snapshot(read_file(path));
}

}  // namespace repute::storage
