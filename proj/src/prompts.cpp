#include "cfinc/prompts.hpp"

#include "cfinc/embedded_prompts.hpp"

namespace cfinc::prompts {

std::string_view keywords_simple() { return embedded::keywords_simple; }
std::string_view keywords_iterative() { return embedded::keywords_iterative; }
std::string_view inception() { return embedded::inception; }
std::string_view judge_llava() { return embedded::judge_llava; }
std::string_view judge_mmhal() { return embedded::judge_mmhal; }

}  // namespace cfinc::prompts
