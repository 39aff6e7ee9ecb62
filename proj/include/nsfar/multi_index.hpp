#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "nsfar/errors.hpp"

namespace nsfar {

/// Multi-index alpha = (a1, a2) in Z_+^2.
struct MultiIndex {
  int a1 = 0;
  int a2 = 0;

  constexpr MultiIndex() = default;
  constexpr MultiIndex(int first, int second) : a1(first), a2(second) {}

  constexpr int order() const { return a1 + a2; }
  constexpr int operator[](int k) const { return k == 0 ? a1 : a2; }

  double factorial() const;

  /// x^alpha = x1^a1 * x2^a2.
  double power(double x1, double x2) const {
    return std::pow(x1, a1) * std::pow(x2, a2);
  }

  /// (-y)^alpha, the sign convention used by every moment in this library.
  double neg_power(double y1, double y2) const { return power(-y1, -y2); }

  constexpr MultiIndex operator+(const MultiIndex& o) const {
    return {a1 + o.a1, a2 + o.a2};
  }
  constexpr bool dominates(const MultiIndex& o) const {
    return a1 >= o.a1 && a2 >= o.a2;
  }
  constexpr MultiIndex operator-(const MultiIndex& o) const {
    return {a1 - o.a1, a2 - o.a2};
  }

  constexpr auto operator<=>(const MultiIndex&) const = default;

  std::string str() const {
    return "(" + std::to_string(a1) + "," + std::to_string(a2) + ")";
  }
};

inline constexpr MultiIndex kE1{1, 0};
inline constexpr MultiIndex kE2{0, 1};

inline double factorial(int k) {
  if (k < 0) throw DomainError("factorial of negative integer");
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline double MultiIndex::factorial() const {
  return nsfar::factorial(a1) * nsfar::factorial(a2);
}

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// All multi-indices with |alpha| = k, ordered (k,0), (k-1,1), ..., (0,k).
inline std::vector<MultiIndex> indices_of_order(int k) {
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(k + 1));
  for (int a2 = 0; a2 <= k; ++a2) out.push_back({k - a2, a2});
  return out;
}

/// All multi-indices with |alpha| <= k, grouped by increasing order.
inline std::vector<MultiIndex> indices_up_to(int k) {
  std::vector<MultiIndex> out;
  for (int j = 0; j <= k; ++j) {
    auto level = indices_of_order(j);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

/// Position of alpha in indices_up_to(...) ordering.
constexpr int flat_index(const MultiIndex& a) {
  const int k = a.order();
  return k * (k + 1) / 2 + a.a2;
}

/// Time-space index (l, beta) with combined parabolic order 2l + |beta|.
struct TimeSpaceIndex {
  int l = 0;
  MultiIndex beta;

  constexpr int order() const { return 2 * l + beta.order(); }
  double factorial() const { return nsfar::factorial(l) * beta.factorial(); }
  constexpr auto operator<=>(const TimeSpaceIndex&) const = default;
};

/// All (l, beta) with 2l + |beta| == k, l increasing.
inline std::vector<TimeSpaceIndex> time_space_indices(int k) {
  std::vector<TimeSpaceIndex> out;
  for (int l = 0; 2 * l <= k; ++l)
    for (const auto& b : indices_of_order(k - 2 * l)) out.push_back({l, b});
  return out;
}

} // namespace nsfar
