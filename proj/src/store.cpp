#include "cfinc/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "cfinc/error.hpp"
#include "cfinc/util.hpp"

namespace cfinc::store {
namespace fs = std::filesystem;

namespace {

std::string errno_text() { return std::strerror(errno); }

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t recover_torn_tail(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return 0;
  const std::string content = slurp(path);
  if (content.empty() || content.back() == '\n') return 0;
  const auto last_nl = content.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  fs::resize_file(path, keep, ec);
  if (ec) throw IOFailure("cannot truncate " + path.string() + ": " + ec.message());
  return content.size() - keep;
}

std::vector<std::string> read_lines(const fs::path& path) {
  const std::string content = slurp(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    const auto nl = content.find('\n', start);
    if (nl == std::string::npos) break;  // torn tail
    lines.emplace_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

LineWriter::LineWriter(const fs::path& path, Sync sync) : path_(path), sync_(sync) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  recover_torn_tail(path);
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IOFailure("cannot open " + path.string() + ": " + errno_text());
}

LineWriter::~LineWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void LineWriter::append_line(std::string_view line) {
  if (line.find('\n') != std::string_view::npos) {
    throw IOFailure("record line contains a newline");
  }
  std::string buf(line);
  buf.push_back('\n');
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(fd_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IOFailure("write to " + path_.string() + " failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
  if (sync_ == Sync::every_line && ::fsync(fd_) != 0) {
    throw IOFailure("fsync of " + path_.string() + " failed: " + errno_text());
  }
}

std::string payload_digest(const nlohmann::json& payload) {
  return util::sha256_hex(payload.dump());
}

RecordEnvelope RecordEnvelope::make(std::string record_kind, std::string run_id,
                                    std::string sample_id, std::string condition,
                                    nlohmann::json payload) {
  RecordEnvelope e;
  e.record_kind = std::move(record_kind);
  e.run_id = std::move(run_id);
  e.sample_id = std::move(sample_id);
  e.condition = std::move(condition);
  e.payload = std::move(payload);
  e.content_digest = payload_digest(e.payload);
  e.written_at = utc_now_iso8601();
  return e;
}

bool RecordEnvelope::digest_valid() const { return payload_digest(payload) == content_digest; }

nlohmann::json RecordEnvelope::to_json() const {
  return {{"kind", record_kind},        {"run_id", run_id},
          {"sample_id", sample_id},     {"condition", condition},
          {"payload", payload},         {"digest", content_digest},
          {"written_at", written_at}};
}

RecordEnvelope RecordEnvelope::from_json(const nlohmann::json& j) {
  RecordEnvelope e;
  e.record_kind = j.at("kind").get<std::string>();
  e.run_id = j.at("run_id").get<std::string>();
  e.sample_id = j.at("sample_id").get<std::string>();
  e.condition = j.value("condition", "");
  e.payload = j.at("payload");
  e.content_digest = j.at("digest").get<std::string>();
  e.written_at = j.value("written_at", "");
  return e;
}

RecordKey key_of(const RecordEnvelope& e) {
  return {e.run_id, e.sample_id, e.record_kind, e.condition};
}

namespace {

std::vector<RecordEnvelope> parse_records(const fs::path& path) {
  std::vector<RecordEnvelope> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    RecordEnvelope e;
    try {
      e = RecordEnvelope::from_json(nlohmann::json::parse(lines[i]));
    } catch (const nlohmann::json::exception& ex) {
      throw CorruptRecord(i + 1, ex.what());
    }
    if (!e.digest_valid()) throw CorruptRecord(i + 1, "content digest mismatch");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

RecordStore::RecordStore(const fs::path& path, Sync sync) : writer_(path, sync) {
  records_ = parse_records(path);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    index_.emplace(key_of(records_[i]), i);
  }
}

void RecordStore::append(const RecordEnvelope& envelope) {
  if (!envelope.digest_valid()) {
    throw CorruptRecord(0, "refusing to append an envelope whose digest does not match");
  }
  std::lock_guard lock(mu_);
  const auto key = key_of(envelope);
  if (index_.contains(key)) {
    throw DuplicateKey("duplicate record (" + envelope.run_id + ", " + envelope.sample_id +
                       ", " + envelope.record_kind + ", " + envelope.condition + ")");
  }
  writer_.append_line(envelope.to_json().dump());
  index_.emplace(key, records_.size());
  records_.push_back(envelope);
}

std::optional<RecordEnvelope> RecordStore::find(std::string_view record_kind,
                                                std::string_view run_id,
                                                std::string_view sample_id,
                                                std::string_view condition) const {
  std::lock_guard lock(mu_);
  const auto it = index_.find(RecordKey{std::string(run_id), std::string(sample_id),
                                        std::string(record_kind), std::string(condition)});
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<RecordEnvelope> RecordStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t RecordStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<RecordEnvelope> read_all(const fs::path& path, std::string_view record_kind) {
  auto all = parse_records(path);
  if (record_kind.empty()) return all;
  std::vector<RecordEnvelope> out;
  for (auto& e : all) {
    if (e.record_kind == record_kind) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace cfinc::store
