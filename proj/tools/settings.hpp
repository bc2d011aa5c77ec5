#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfinc/gateway.hpp"
#include "cfinc/runner.hpp"

namespace cfinc::cli {

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

// Every recognised configuration key with its default.
const std::vector<KeySpec>& known_keys();

// "chat.endpoint" -> "CFINC_CHAT_ENDPOINT".
std::string env_name(std::string_view key);

// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
// malformed lines and unknown keys.
std::map<std::string, std::string> parse_config_text(std::string_view text);

// Resolved configuration. Later layers win: defaults, file, environment, flags.
class Settings {
 public:
  static Settings resolve(const std::optional<std::filesystem::path>& config_file,
                          const gateway::EnvLookup& env,
                          const std::map<std::string, std::string>& flags);

  const std::string& get(std::string_view key) const;
  int get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  // Where a value came from: default, file, env or flag.
  const std::string& origin(std::string_view key) const;

  nlohmann::json to_json() const;

  gateway::BackendConfig backend(std::string_view prefix, gateway::BackendKind kind) const;
  dvp::DvpConfig dvp() const;
  keywords::GenerationOptions keygen() const;
  // Everything but the benchmark path, kind, run dir and conditions.
  runner::RunConfig run_config() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::map<std::string, std::string, std::less<>> origins_;
};

}  // namespace cfinc::cli
