// Regenerates data/mini/fixtures from the synthetic backend, or checks that
// the committed fixtures still match (--check).
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfinc/runner.hpp"
#include "settings.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace cfinc;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: record_fixtures <repo_root> [--check]\n";
    return 64;
  }
  const fs::path root = fs::absolute(argv[1]);
  const bool check = argc > 2 && std::string(argv[2]) == "--check";
  const fs::path mini = root / "data" / "mini";

  auto backend = std::make_shared<const synthetic::Backend>(mini / "script.json", mini / "images");
  auto recorder = std::make_shared<synthetic::Recorder>();
  const auto no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  const auto settings = cli::Settings::resolve(
      mini / "mock.conf", no_env,
      {{"chat.mode", "live"}, {"clip.mode", "live"}, {"nli.mode", "live"}, {"run.parallelism", "1"}});

  const fs::path scratch = fs::temp_directory_path() / ("cfinc_record_" + std::to_string(::getpid()));
  fs::remove_all(scratch);

  struct Job {
    bench::BenchmarkKind kind;
    const char* file;
    bool band;
  };
  const Job jobs[] = {{bench::BenchmarkKind::pope_adversarial, "pope.jsonl", false},
                      {bench::BenchmarkKind::pope_adversarial, "pope.jsonl", true},
                      {bench::BenchmarkKind::mmvp, "mmvp.csv", false},
                      {bench::BenchmarkKind::llava_wild, "llava.jsonl", false},
                      {bench::BenchmarkKind::mmhal, "mmhal.jsonl", false}};
  int n = 0;
  for (const auto& job : jobs) {
    auto rc = settings.run_config();
    rc.benchmark = job.kind;
    rc.dataset_path = mini / job.file;
    rc.run_dir = scratch / std::to_string(n++);
    if (job.band) rc.dvp = dvp::DvpConfig::band_profile();
    for (const char* c : {"baseline", "inception", "vv_only", "lv_only", "mixed_factual:0.25:7",
                          "mixed_factual:0.5:7", "mixed_factual:0.75:7"}) {
      rc.conditions.push_back(runner::ConditionSpec::parse(c));
    }
    runner::RunHooks hooks;
    hooks.make_transport = [&](const gateway::BackendConfig&) {
      return std::make_shared<synthetic::RecordingTransport>(backend, recorder);
    };
    const auto m = runner::execute(rc, hooks);
    if (!m.failures.empty()) {
      for (const auto& f : m.failures) {
        std::cerr << f.sample_id << " " << f.condition << " " << f.stage << ": " << f.error << "\n";
      }
      return 1;
    }
  }
  fs::remove_all(scratch);

  int status = 0;
  for (auto [kind, name] : {std::pair{gateway::BackendKind::chat, "chat.jsonl"},
                            std::pair{gateway::BackendKind::visual_scorer, "clip.jsonl"},
                            std::pair{gateway::BackendKind::nli_scorer, "nli.jsonl"}}) {
    const auto text = recorder->fixture_text(kind);
    const auto path = mini / "fixtures" / name;
    if (check) {
      if (slurp(path) != text) {
        std::cerr << "fixture out of date: " << path.string() << "\n";
        status = 1;
      }
    } else {
      fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << text;
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return status;
}
