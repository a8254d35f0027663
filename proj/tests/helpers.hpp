#pragma once

// Shared fixtures for the test suite: canonical models from the examples the
// library targets, plus small combinatorial oracles kept independent of the
// library code they check.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gapscope/ifs.hpp"

namespace testutil {

inline gapscope::IfsModel fig_linear() {
  return gapscope::make_linear({{0.05, 0.49}, {0.55, 0.75}});
}

// Fig-style linear model with roof slopes (0, 1).
inline gapscope::IfsModel fig_linear_with_roof() {
  auto m = fig_linear();
  gapscope::set_roof_linear_slopes(m, {0.0, 1.0});
  return m;
}

// Subshift model with arbitrary adjacency: branch (i,j) maps I_i affinely
// onto the i-th slot of the interior of I_j. Used to exercise non-full
// adjacency matrices in tests.
inline gapscope::IfsModel make_slot_sft(const std::vector<gapscope::Interval>& intervals,
                                        const std::vector<std::vector<int>>& adjacency) {
  gapscope::IfsModel m;
  m.n_symbols = static_cast<int>(intervals.size());
  m.intervals = intervals;
  m.adjacency = adjacency;
  int n = m.n_symbols;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      const auto& src = intervals[static_cast<std::size_t>(i)];
      const auto& tgt = intervals[static_cast<std::size_t>(j)];
      double margin = 0.05 * tgt.length();
      double inner = tgt.length() - 2 * margin;
      double slot_w = inner / n;
      double lo = tgt.lo + margin + slot_w * i + 0.05 * slot_w;
      double hi = lo + 0.9 * slot_w;
      double slope = (hi - lo) / src.length();
      double offset = lo - slope * src.lo;
      gapscope::Branch b;
      b.source = i;
      b.target = j;
      b.map = [slope, offset](double x) { return offset + slope * x; };
      b.deriv = [slope](double) { return slope; };
      b.deriv2 = [](double) { return 0.0; };
      b.sign = +1;
      m.branches.push_back(std::move(b));
    }
  }
  m.roof = [](double) { return 0.0; };
  m.roof_deriv = [](double) { return 0.0; };
  m.potential = [](double) { return 0.0; };
  m.potential_deriv = [](double) { return 0.0; };
  m.finalize();
  return m;
}

// Number of admissible open words with n transitions (sum of entries of A^n)
// by 64-bit matrix powers; independent oracle for enumerate_words.
inline std::uint64_t open_word_count(const std::vector<std::vector<int>>& a, int n) {
  std::size_t dim = a.size();
  std::vector<std::vector<std::uint64_t>> p(dim, std::vector<std::uint64_t>(dim, 0));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) p[i][j] = (i == j);
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<std::uint64_t>> q(dim, std::vector<std::uint64_t>(dim, 0));
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t j = 0; j < dim; ++j)
          q[i][j] += p[i][k] * static_cast<std::uint64_t>(a[k][j]);
    p = q;
  }
  std::uint64_t s = 0;
  for (const auto& row : p)
    for (std::uint64_t v : row) s += v;
  return s;
}

inline std::uint64_t closed_word_count(const std::vector<std::vector<int>>& a, int n) {
  std::size_t dim = a.size();
  std::vector<std::vector<std::uint64_t>> p(dim, std::vector<std::uint64_t>(dim, 0));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) p[i][j] = (i == j);
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<std::uint64_t>> q(dim, std::vector<std::uint64_t>(dim, 0));
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t j = 0; j < dim; ++j)
          q[i][j] += p[i][k] * static_cast<std::uint64_t>(a[k][j]);
    p = q;
  }
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < dim; ++i) s += p[i][i];
  return s;
}

}  // namespace testutil
