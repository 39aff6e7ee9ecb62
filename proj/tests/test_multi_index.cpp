#include <gtest/gtest.h>

#include "nsfar/multi_index.hpp"

using namespace nsfar;

TEST(MultiIndex, LengthFactorialPower) {
  MultiIndex a{3, 2};
  EXPECT_EQ(a.order(), 5);
  EXPECT_DOUBLE_EQ(a.factorial(), 12.0);
  EXPECT_DOUBLE_EQ(a.power(2.0, -1.0), 8.0);
  EXPECT_DOUBLE_EQ(a.neg_power(2.0, -1.0), -8.0);
  EXPECT_DOUBLE_EQ(MultiIndex{}.factorial(), 1.0);
}

TEST(MultiIndex, Enumeration) {
  const auto level = indices_of_order(3);
  ASSERT_EQ(level.size(), 4u);
  EXPECT_EQ(level.front(), (MultiIndex{3, 0}));
  EXPECT_EQ(level.back(), (MultiIndex{0, 3}));
  const auto all = indices_up_to(7);
  ASSERT_EQ(all.size(), 36u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(flat_index(all[i]), static_cast<int>(i));
}

TEST(MultiIndex, TimeSpaceIndices) {
  const auto four = time_space_indices(4);
  // l=0: 5 indices, l=1: 3, l=2: 1
  ASSERT_EQ(four.size(), 9u);
  for (const auto& ts : four) EXPECT_EQ(ts.order(), 4);
  EXPECT_DOUBLE_EQ((TimeSpaceIndex{2, {1, 0}}).factorial(), 2.0);
}

TEST(MultiIndex, BinomialRow) {
  for (int n = 0; n < 12; ++n) {
    std::int64_t sum = 0;
    for (int k = 0; k <= n; ++k) sum += binomial(n, k);
    EXPECT_EQ(sum, std::int64_t{1} << n);
  }
  EXPECT_THROW(factorial(-1), DomainError);
}
