#pragma once

#include <string_view>

// Golden prompt files from prompts/, embedded at build time.
namespace cfinc::prompts {

std::string_view keywords_simple();
std::string_view keywords_iterative();
std::string_view inception();
std::string_view judge_llava();
std::string_view judge_mmhal();

}  // namespace cfinc::prompts
