#pragma once

// Rating-log ingestion and reputation snapshot persistence.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "repute/core.hpp"

namespace repute::storage {

enum class LogFormat { Jsonl, Csv };

struct LineError {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::InvalidField;
  std::string message;
};

/// Every nonblank input line ends up in exactly one of `records` or `errors`
/// (the CSV header excepted).
struct IngestResult {
  std::vector<RatingRecord> records;
  std::vector<LineError> errors;
  std::size_t lines = 0;
};

IngestResult ingest(std::istream& in, LogFormat format);
/// Format follows the extension: `.csv` is CSV, anything else JSONL.
/// Throws UnreadableInput when the file cannot be opened.
IngestResult ingest(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<RatingRecord>& records);

enum class StoreMode { Transient, LocalPersistent, GlobalPersistent };

std::string_view to_string(StoreMode mode);
std::optional<StoreMode> parse_store_mode(std::string_view text);

struct SnapshotRef {
  std::optional<std::filesystem::path> path;  // empty for transient snapshots
  std::string hash;
};

/// Snapshot persistence under one root directory:
///   local:  <root>/<agency>/<as_of>.json
///   global: <root>/shared/<as_of>.json  (first writer wins)
class SnapshotStore {
 public:
  SnapshotStore(StoreMode mode, std::filesystem::path root = {});

  StoreMode mode() const noexcept { return mode_; }

  /// Global mode: re-saving an identical state succeeds, a different state
  /// under the same tick raises SnapshotConflict.
  SnapshotRef save(const ReputationState& state, const AgencyId& agency) const;

  /// Throws NotFound, or HashMismatch when the file fails its integrity check.
  ReputationState load(const AgencyId& agency, Tick as_of) const;

  std::filesystem::path path_for(const AgencyId& agency, Tick as_of) const;

 private:
  StoreMode mode_;
  std::filesystem::path root_;
};

/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace repute::storage
