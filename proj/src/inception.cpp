#include "cfinc/inception.hpp"

#include "cfinc/error.hpp"
#include "cfinc/prompts.hpp"
#include "cfinc/util.hpp"

namespace cfinc::inception {

InceptionPrompt build_inception_prompt(std::string_view template_text, std::string template_id,
                                       const std::vector<std::string>& keywords,
                                       const std::string& question) {
  if (util::trim(question).empty()) throw std::invalid_argument("inception question is empty");
  if (template_text.find(kKeywordSlot) == std::string_view::npos) {
    throw PlaceholderError("inception template lacks " + std::string(kKeywordSlot));
  }
  if (template_text.find(kQuestionSlot) == std::string_view::npos) {
    throw PlaceholderError("inception template lacks " + std::string(kQuestionSlot));
  }

  const std::string joined = util::join(keywords, ", ");
  std::string rendered;
  std::size_t pos = 0;
  while (pos < template_text.size()) {
    if (template_text.substr(pos).starts_with(kKeywordSlot)) {
      rendered += joined;
      pos += kKeywordSlot.size();
    } else if (template_text.substr(pos).starts_with(kQuestionSlot)) {
      rendered += question;
      pos += kQuestionSlot.size();
    } else {
      rendered += template_text[pos++];
    }
  }
  return {std::move(template_id), keywords, question, std::move(rendered)};
}

InceptionPrompt build_inception_prompt(const std::vector<std::string>& keywords,
                                       const std::string& question) {
  return build_inception_prompt(prompts::inception(), "inception", keywords, question);
}

int default_max_tokens(bool discriminative) { return discriminative ? 64 : 512; }

namespace {

gateway::ChatRequest request_with_text(const std::string& image_ref, std::string text,
                                       const InferenceOptions& options) {
  gateway::ChatRequest req;
  req.model_id = options.model_id;
  req.temperature = 0.0;
  req.max_tokens = options.max_tokens;
  req.messages.push_back({gateway::Role::user, std::move(text), image_ref});
  return req;
}

}  // namespace

gateway::ChatRequest baseline_request(const std::string& image_ref, const std::string& question,
                                      const InferenceOptions& options) {
  return request_with_text(image_ref, question, options);
}

gateway::ChatRequest inception_request(const std::string& image_ref, const std::string& question,
                                       const dvp::OptimalKeywords& keywords,
                                       const InferenceOptions& options) {
  if (keywords.fallback_used || keywords.keywords.empty()) {
    return baseline_request(image_ref, question, options);
  }
  return request_with_text(image_ref, build_inception_prompt(keywords.keywords, question).rendered,
                           options);
}

gateway::ChatResponse infer(gateway::Gateway& gw, const std::string& image_ref,
                            const std::string& question, const dvp::OptimalKeywords& keywords,
                            const InferenceOptions& options) {
  return gw.chat(inception_request(image_ref, question, keywords, options));
}

gateway::ChatResponse infer_baseline(gateway::Gateway& gw, const std::string& image_ref,
                                     const std::string& question,
                                     const InferenceOptions& options) {
  return gw.chat(baseline_request(image_ref, question, options));
}

}  // namespace cfinc::inception
