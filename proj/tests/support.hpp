#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include "cfinc/dvp.hpp"
#include "cfinc/gateway.hpp"

namespace cfinc::testkit {

inline std::filesystem::path source_dir() { return CFINC_SOURCE_DIR; }
inline std::filesystem::path mini_dir() { return source_dir() / "data" / "mini"; }
inline std::string mini_image(const std::string& name) {
  return (mini_dir() / "images" / name).string();
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cfinc_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Transport answering through a callback; counts calls.
class LambdaTransport : public gateway::Transport {
 public:
  using Fn = std::function<nlohmann::json(const gateway::WireRequest&)>;
  explicit LambdaTransport(Fn fn) : fn_(std::move(fn)) {}
  nlohmann::json send(const gateway::WireRequest& request) override {
    ++calls;
    return fn_(request);
  }
  std::atomic<int> calls{0};

 private:
  Fn fn_;
};

inline nlohmann::json chat_text(const std::string& text) {
  return {{"text", text}, {"backend_id", "test"}, {"input_tokens", 1}, {"output_tokens", 1}};
}

inline dvp::ScoredCandidate scored(std::string keyword, double visual, double contradiction,
                                   int iteration = 1) {
  dvp::ScoredCandidate c;
  c.keyword = std::move(keyword);
  c.iteration = iteration;
  c.visual_score = visual;
  const double rest = 1.0 - contradiction;
  c.nli = gateway::NliScores::from_backend(rest / 2, rest / 2, contradiction);
  return c;
}

}  // namespace cfinc::testkit
