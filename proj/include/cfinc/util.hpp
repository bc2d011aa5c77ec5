#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfinc::util {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

// 64-bit FNV-1a. Stable across platforms; used to derive per-sample seeds.
std::uint64_t fnv1a64(std::string_view bytes);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Joins with the given separator.
std::string join(std::span<const std::string> items, std::string_view sep);

// Fixed-point rendering with "C" locale semantics, e.g. format_fixed(0.75, 4) == "0.7500".
std::string format_fixed(double value, int precision);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Runs fn(i) for i in [0, count) on at most `parallelism` threads. The first
// exception thrown by any invocation is rethrown after all workers finish.
void parallel_for(std::size_t count, int parallelism,
                  const std::function<void(std::size_t)>& fn);

}  // namespace cfinc::util
