#include "settings.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "cfinc/error.hpp"
#include "cfinc/util.hpp"

namespace cfinc::cli {
namespace fs = std::filesystem;

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"run.id", "run", "run identifier stamped on every record"},
      {"run.parallelism", "4", "concurrent samples and in-flight backend calls"},
      {"run.resume", "true", "reuse records already in the run directory"},
      {"run.failure_cap", "0.1", "largest tolerated share of failed samples"},
      {"bench.mmvp_mode", "per_question", "per_question or per_pair"},
      {"bench.hallucination_cutoff", "3", "MMHal ratings below this count as hallucinated"},
      {"bench.allow_any_pope_split", "false", "accept POPE rows from other splits"},
      {"model.subject", "gpt-4o", "model answering the questions"},
      {"model.judge", "gpt-4", "text-only judge model"},
      {"infer.max_tokens", "0", "answer budget; 0 picks 64 or 512 by benchmark"},
      {"judge.max_tokens", "512", "judge reply budget"},
      {"keywords.model", "", "keyword generator; empty uses model.subject"},
      {"keywords.iterations", "5", "counterfactual sets per image"},
      {"keywords.mode", "iterative", "iterative or simple"},
      {"keywords.temperature", "0.8", "keyword sampling temperature"},
      {"keywords.max_tokens", "1024", "keyword reply budget"},
      {"keywords.seed", "", "optional sampling seed"},
      {"dvp.profile", "percentile", "percentile or band preset"},
      {"dvp.visual_mode", "percentile", "percentile or absolute"},
      {"dvp.k", "20", "percent trimmed from each tail"},
      {"dvp.low", "0.2", "absolute band lower bound"},
      {"dvp.high", "0.8", "absolute band upper bound"},
      {"dvp.tau", "0.9", "contradiction threshold"},
      {"dvp.premise_policy", "aligned_then_joined", "aligned_then_joined or joined_only"},
      {"dvp.hypothesis_template", "", "NLI hypothesis with {keyword}; empty sends the keyword"},
      {"chat.mode", "live", "live or mock"},
      {"chat.endpoint", "https://api.openai.com/v1/chat/completions", "chat-completions URL"},
      {"chat.auth_env", "OPENAI_API_KEY", "env var holding the bearer token"},
      {"chat.fixture", "", "fixture file for mock mode"},
      {"chat.timeout_ms", "60000", "request timeout"},
      {"chat.max_retries", "3", "retries on transport errors"},
      {"chat.supports_seed", "true", "send the seed field"},
      {"judge.mode", "", "judge backend mode; empty reuses the chat backend"},
      {"judge.endpoint", "", "judge chat-completions URL"},
      {"judge.auth_env", "OPENAI_API_KEY", "env var holding the judge token"},
      {"judge.fixture", "", "fixture file for mock mode"},
      {"judge.timeout_ms", "60000", "request timeout"},
      {"judge.max_retries", "3", "retries on transport errors"},
      {"judge.supports_seed", "true", "send the seed field"},
      {"clip.mode", "live", "live or mock"},
      {"clip.endpoint", "http://127.0.0.1:8000", "scorer service base URL"},
      {"clip.auth_env", "", "env var holding the bearer token"},
      {"clip.fixture", "", "fixture file for mock mode"},
      {"clip.model", "clip-vit-large-patch14-336", "visual scorer model tag"},
      {"clip.timeout_ms", "60000", "request timeout"},
      {"clip.max_retries", "3", "retries on transport errors"},
      {"nli.mode", "live", "live or mock"},
      {"nli.endpoint", "http://127.0.0.1:8000", "scorer service base URL"},
      {"nli.auth_env", "", "env var holding the bearer token"},
      {"nli.fixture", "", "fixture file for mock mode"},
      {"nli.model", "roberta-base-rte", "NLI model tag"},
      {"nli.timeout_ms", "60000", "request timeout"},
      {"nli.max_retries", "3", "retries on transport errors"},
  };
  return keys;
}

std::string env_name(std::string_view key) {
  std::string out = "CFINC_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : known_keys()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

bool looks_secret(std::string_view key) {
  const auto k = util::to_lower(key);
  for (const char* word : {"api_key", "apikey", "token", "secret", "password"}) {
    if (k.find(word) != std::string::npos) return true;
  }
  return false;
}

void check_key(std::string_view key, std::string_view where) {
  if (find_key(key)) return;
  if (looks_secret(key)) {
    throw ConfigError(std::string(where) + ": '" + std::string(key) +
                      "' looks like a secret; credentials are read only from the environment "
                      "variable named by <backend>.auth_env");
  }
  throw ConfigError(std::string(where) + ": unknown key '" + std::string(key) + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto body = util::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key(util::trim(body.substr(0, eq)));
    check_key(key, "config line " + std::to_string(number));
    out[key] = std::string(util::trim(body.substr(eq + 1)));
  }
  return out;
}

Settings Settings::resolve(const std::optional<fs::path>& config_file, const gateway::EnvLookup& env,
                           const std::map<std::string, std::string>& flags) {
  Settings s;
  for (const auto& k : known_keys()) {
    s.values_[std::string(k.key)] = std::string(k.default_value);
    s.origins_[std::string(k.key)] = "default";
  }
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw ConfigError("cannot read config file " + config_file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    for (auto& [k, v] : parse_config_text(ss.str())) {
      s.values_[k] = v;
      s.origins_[k] = "file";
    }
  }
  for (const auto& k : known_keys()) {
    if (auto v = env(env_name(k.key))) {
      s.values_[std::string(k.key)] = *v;
      s.origins_[std::string(k.key)] = "env";
    }
  }
  for (const auto& [k, v] : flags) {
    check_key(k, "flag");
    s.values_[k] = v;
    s.origins_[k] = "flag";
  }
  return s;
}

const std::string& Settings::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  return it->second;
}

const std::string& Settings::origin(std::string_view key) const {
  const auto it = origins_.find(key);
  if (it == origins_.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  return it->second;
}

int Settings::get_int(std::string_view key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used == v.size()) return out;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(std::string(key) + ": expected an integer, got '" + v + "'");
}

double Settings::get_double(std::string_view key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(std::string(key) + ": expected a number, got '" + v + "'");
}

bool Settings::get_bool(std::string_view key) const {
  const auto v = util::to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + v + "'");
}

nlohmann::json Settings::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = {{"value", v}, {"origin", origins_.at(k)}};
  return j;
}

gateway::BackendConfig Settings::backend(std::string_view prefix, gateway::BackendKind kind) const {
  const std::string p(prefix);
  auto key = [&](const char* name) { return p + "." + name; };
  gateway::BackendConfig c;
  c.kind = kind;
  c.mode = gateway::parse_backend_mode(get(key("mode")));
  c.endpoint_url = get(key("endpoint"));
  c.auth_env_var = get(key("auth_env"));
  c.fixture_path = get(key("fixture"));
  if (find_key(key("model"))) c.model_id = get(key("model"));
  c.timeout = std::chrono::milliseconds(get_int(key("timeout_ms")));
  c.max_retries = get_int(key("max_retries"));
  if (find_key(key("supports_seed"))) c.supports_seed = get_bool(key("supports_seed"));
  return c;
}

dvp::DvpConfig Settings::dvp() const {
  const auto profile = get("dvp.profile");
  dvp::DvpConfig c;
  if (profile == "percentile") {
    c = dvp::DvpConfig::percentile_profile();
  } else if (profile == "band") {
    c = dvp::DvpConfig::band_profile();
  } else {
    throw ConfigError("dvp.profile must be percentile or band, got '" + profile + "'");
  }
  // Explicit settings refine the preset.
  auto set = [&](const char* k) { return origin(k) != "default"; };
  if (set("dvp.visual_mode")) {
    const auto m = get("dvp.visual_mode");
    if (m == "percentile") {
      c.visual_mode = dvp::VisualMode::percentile;
    } else if (m == "absolute") {
      c.visual_mode = dvp::VisualMode::absolute;
    } else {
      throw ConfigError("dvp.visual_mode must be percentile or absolute");
    }
  }
  if (set("dvp.k")) c.k_percent = get_double("dvp.k");
  if (set("dvp.low")) c.low = get_double("dvp.low");
  if (set("dvp.high")) c.high = get_double("dvp.high");
  if (set("dvp.tau")) c.tau = get_double("dvp.tau");
  if (set("dvp.premise_policy")) {
    const auto p = get("dvp.premise_policy");
    if (p == "aligned_then_joined") {
      c.premise_policy = dvp::PremisePolicy::aligned_then_joined;
    } else if (p == "joined_only") {
      c.premise_policy = dvp::PremisePolicy::joined_only;
    } else {
      throw ConfigError("dvp.premise_policy must be aligned_then_joined or joined_only");
    }
  }
  c.hypothesis_template = get("dvp.hypothesis_template");
  c.n_iterations = get_int("keywords.iterations");
  c.validate();
  return c;
}

keywords::GenerationOptions Settings::keygen() const {
  keywords::GenerationOptions o;
  o.model_id = get("keywords.model");
  if (o.model_id.empty()) o.model_id = get("model.subject");
  o.n_iterations = get_int("keywords.iterations");
  const auto mode = get("keywords.mode");
  if (mode == "iterative") {
    o.mode = keywords::PromptMode::iterative;
  } else if (mode == "simple") {
    o.mode = keywords::PromptMode::simple;
  } else {
    throw ConfigError("keywords.mode must be iterative or simple");
  }
  if (o.n_iterations < 1) throw ConfigError("keywords.iterations must be >= 1");
  if (o.mode == keywords::PromptMode::simple && o.n_iterations != 1) {
    throw ConfigError("keywords.mode simple produces one set; set keywords.iterations = 1");
  }
  o.temperature = get_double("keywords.temperature");
  o.max_tokens = get_int("keywords.max_tokens");
  if (!get("keywords.seed").empty()) o.seed = get_int("keywords.seed");
  return o;
}

runner::RunConfig Settings::run_config() const {
  runner::RunConfig c;
  c.run_id = get("run.id");
  c.parallelism = get_int("run.parallelism");
  c.resume = get_bool("run.resume");
  c.failure_cap = get_double("run.failure_cap");
  const auto mode = get("bench.mmvp_mode");
  if (mode == "per_question") {
    c.mmvp_mode = bench::MmvpMode::per_question;
  } else if (mode == "per_pair") {
    c.mmvp_mode = bench::MmvpMode::per_pair;
  } else {
    throw ConfigError("bench.mmvp_mode must be per_question or per_pair");
  }
  c.hallucination_cutoff = get_double("bench.hallucination_cutoff");
  c.load.allow_any_pope_split = get_bool("bench.allow_any_pope_split");
  c.subject_model = get("model.subject");
  c.judge_model = get("model.judge");
  c.max_tokens = get_int("infer.max_tokens");
  c.judge_max_tokens = get_int("judge.max_tokens");
  c.keygen = keygen();
  c.dvp = dvp();
  c.chat = backend("chat", gateway::BackendKind::chat);
  c.clip = backend("clip", gateway::BackendKind::visual_scorer);
  c.nli = backend("nli", gateway::BackendKind::nli_scorer);
  if (!get("judge.mode").empty()) c.judge = backend("judge", gateway::BackendKind::chat);
  return c;
}

}  // namespace cfinc::cli
