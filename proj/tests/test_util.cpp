#include <gtest/gtest.h>

#include <cmath>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "cfinc/util.hpp"

using namespace cfinc;

TEST(Util, Sha256KnownVectors) {
  EXPECT_EQ(util::sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(util::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Util, Base64KnownVectors) {
  EXPECT_EQ(util::base64_encode(""), "");
  EXPECT_EQ(util::base64_encode("f"), "Zg==");
  EXPECT_EQ(util::base64_encode("fo"), "Zm8=");
  EXPECT_EQ(util::base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(util::base64_encode(std::string("\x00\xff", 2)), "AP8=");
}

TEST(Util, Fnv1a64) {
  EXPECT_EQ(util::fnv1a64(""), 14695981039346656037ull);
  EXPECT_EQ(util::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Util, StringHelpers) {
  EXPECT_EQ(util::trim("  a b \n"), "a b");
  EXPECT_EQ(util::trim("   "), "");
  EXPECT_EQ(util::to_lower("MiXeD"), "mixed");
  EXPECT_TRUE(util::iequals("Yes", "yES"));
  EXPECT_FALSE(util::iequals("yes", "yess"));
  const std::vector<std::string> items{"a", "b", "c"};
  EXPECT_EQ(util::join(items, ", "), "a, b, c");
  EXPECT_EQ(util::join(std::vector<std::string>{}, ", "), "");
}

TEST(Util, FormatFixed) {
  EXPECT_EQ(util::format_fixed(0.75, 4), "0.7500");
  EXPECT_EQ(util::format_fixed(75.0, 1), "75.0");
  EXPECT_EQ(util::format_fixed(-0.00001, 4), "0.0000");
  EXPECT_EQ(util::format_fixed(-0.5, 2), "-0.50");
  EXPECT_EQ(util::format_fixed(std::nan(""), 4), "-");
}

TEST(Util, Cosine) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, d{-1, 0};
  EXPECT_DOUBLE_EQ(util::cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(util::cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(util::cosine_similarity(a, d), -1.0);
  const std::vector<double> z{0, 0}, shorter{1};
  EXPECT_THROW(util::cosine_similarity(a, z), std::invalid_argument);
  EXPECT_THROW(util::cosine_similarity(a, shorter), std::invalid_argument);
}

TEST(Util, ParallelForVisitsEveryIndexOnce) {
  for (int par : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(100);
    util::parallel_for(hits.size(), par, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  util::parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Util, ParallelForRethrowsAfterFinishing) {
  std::atomic<int> done{0};
  EXPECT_THROW(util::parallel_for(50, 4,
                                  [&](std::size_t i) {
                                    if (i == 7) throw std::runtime_error("boom");
                                    ++done;
                                  }),
               std::runtime_error);
  EXPECT_EQ(done.load(), 49);
}
