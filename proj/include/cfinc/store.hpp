#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace cfinc::store {

enum class Sync { every_line, none };

// Drops an unterminated trailing line left behind by a crash. Returns the
// number of bytes removed. A missing file is left alone.
std::size_t recover_torn_tail(const std::filesystem::path& path);

// Complete lines of a UTF-8 line-delimited file, in order. An unterminated
// final line is a torn write and is not returned.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Append-only line file with a single writer. Opening recovers a torn tail.
class LineWriter {
 public:
  LineWriter(const std::filesystem::path& path, Sync sync);
  ~LineWriter();
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void append_line(std::string_view line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  Sync sync_;
  int fd_ = -1;
};

struct RecordEnvelope {
  std::string record_kind;
  std::string run_id;
  std::string sample_id;
  std::string condition;  // empty for condition-independent records
  nlohmann::json payload;
  std::string content_digest;
  std::string written_at;

  // Fills in the digest and the UTC timestamp.
  static RecordEnvelope make(std::string record_kind, std::string run_id,
                             std::string sample_id, std::string condition,
                             nlohmann::json payload);

  bool digest_valid() const;
  nlohmann::json to_json() const;
  static RecordEnvelope from_json(const nlohmann::json& j);
};

std::string payload_digest(const nlohmann::json& payload);

using RecordKey = std::tuple<std::string, std::string, std::string, std::string>;
RecordKey key_of(const RecordEnvelope& e);

// One record file. Loads and verifies existing content on open; later appends
// must keep (run_id, sample_id, record_kind, condition) unique.
class RecordStore {
 public:
  explicit RecordStore(const std::filesystem::path& path, Sync sync = Sync::every_line);

  void append(const RecordEnvelope& envelope);

  std::optional<RecordEnvelope> find(std::string_view record_kind, std::string_view run_id,
                                     std::string_view sample_id,
                                     std::string_view condition = {}) const;
  std::vector<RecordEnvelope> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  LineWriter writer_;
  std::vector<RecordEnvelope> records_;
  std::map<RecordKey, std::size_t> index_;
};

// All digest-valid envelopes of the given kind (every kind when empty), in
// write order. Throws CorruptRecord naming the 1-based line on mismatch.
std::vector<RecordEnvelope> read_all(const std::filesystem::path& path,
                                     std::string_view record_kind = {});

}  // namespace cfinc::store
