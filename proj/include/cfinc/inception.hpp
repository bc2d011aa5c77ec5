#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cfinc/dvp.hpp"
#include "cfinc/gateway.hpp"

namespace cfinc::inception {

inline constexpr std::string_view kKeywordSlot = "{counterfactual_keyword}";
inline constexpr std::string_view kQuestionSlot = "{question}";

struct InceptionPrompt {
  std::string template_id;
  std::vector<std::string> counterfactual_keywords;
  std::string question;
  std::string rendered;
};

// Fills the golden inception template: keywords joined with ", ", then the
// question. Substitution is single-pass, so slot-like text inside the inputs
// is left untouched. Throws PlaceholderError when a slot is missing.
InceptionPrompt build_inception_prompt(const std::vector<std::string>& keywords,
                                       const std::string& question);

// Same, against an explicit template.
InceptionPrompt build_inception_prompt(std::string_view template_text, std::string template_id,
                                       const std::vector<std::string>& keywords,
                                       const std::string& question);

// Decoding settings shared by baseline and inception calls. Decoding is
// always greedy (temperature 0).
struct InferenceOptions {
  std::string model_id;
  int max_tokens = 512;
};

// Default token budget: 64 for yes/no and option answers, 512 for free text.
int default_max_tokens(bool discriminative);

gateway::ChatRequest baseline_request(const std::string& image_ref, const std::string& question,
                                      const InferenceOptions& options);

// Inception prompt when keywords survived verification, else the bare
// question. Decoding settings identical to baseline_request.
gateway::ChatRequest inception_request(const std::string& image_ref, const std::string& question,
                                       const dvp::OptimalKeywords& keywords,
                                       const InferenceOptions& options);

gateway::ChatResponse infer(gateway::Gateway& gw, const std::string& image_ref,
                            const std::string& question, const dvp::OptimalKeywords& keywords,
                            const InferenceOptions& options);

gateway::ChatResponse infer_baseline(gateway::Gateway& gw, const std::string& image_ref,
                                     const std::string& question, const InferenceOptions& options);

}  // namespace cfinc::inception
