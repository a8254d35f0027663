#pragma once

// Lifted dynamics on the cotangent space over the interval union: the
// canonical map attached to each branch, the escape radius outside which
// covectors grow, stable-leaf functions describing the phase-space trapped
// set, a sampled minimal-captivity certification, and the orbit-separation
// distances that feed the diagonal-approximation bounds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gapscope/common.hpp"
#include "gapscope/ifs.hpp"

namespace gapscope {

struct PhasePoint {
  double x = 0.0;
  double xi = 0.0;
};

/// Canonical map of branch (i,j): x' = phi(x), xi' = xi/phi'(x) + tau'(x').
inline PhasePoint canonical_map(const IfsModel& m, int i, int j, PhasePoint p) {
  const Branch& b = m.branch(i, j);
  if (!m.intervals[static_cast<std::size_t>(i)].contains(p.x))
    fail("PointOutsideInterval", "phase point not above interval " + std::to_string(i));
  double xp = b.map(p.x);
  double xip = p.xi / b.deriv(p.x) + m.roof_deriv(xp);
  return {xp, xip};
}

/// Max of |tau'| over sampled branch images.
inline double max_roof_slope(const IfsModel& m, int grid = 128) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.branches.size(); ++k) {
    const Interval& im = m.image_interval(static_cast<int>(k));
    for (int t = 0; t <= grid; ++t) {
      double y = im.lo + im.length() * t / grid;
      s = std::max(s, std::abs(m.roof_deriv(y)));
    }
  }
  return s;
}

/// Escape radius: for |xi| > R every branch image satisfies |xi'| > kappa|xi|.
/// From |xi'| >= e^{Jmin}|xi| - max|tau'| the certified closed form is
/// R = kappa * max|tau'| / (e^{Jmin} - kappa), with Jmin = -log(theta) the
/// pointwise minimal expansion exponent.
inline double escape_radius(const IfsModel& m, double kappa) {
  double expansion = 1.0 / m.theta;  // e^{Jmin}
  if (!(kappa > 1.0 && kappa < expansion))
    fail("OutOfRange", "kappa must lie in (1, e^{Jmin})");
  double slope = max_roof_slope(m);
  return kappa * slope / (expansion - kappa);
}

/// Stable-leaf function of a forward word, truncated with a certified
/// geometric tail bound. The signed derivative product keeps the formula
/// valid for orientation-reversing branches.
struct StableLeaf {
  Word word_plus;
  int order = 0;
  double tail_bound = 0.0;
  std::function<double(double)> value;
};

inline double zeta_value(const IfsModel& m, const std::vector<int>& letters, int order,
                         double x) {
  double sum = 0.0;
  double prod = 1.0;
  double p = x;
  for (int k = 0; k < order; ++k) {
    const Branch& b = m.branch(letters[static_cast<std::size_t>(k)],
                               letters[static_cast<std::size_t>(k + 1)]);
    prod *= b.deriv(p);
    p = b.map(p);
    sum += prod * m.roof_deriv(p);
  }
  return -sum;
}

inline StableLeaf zeta_leaf(const IfsModel& m, const Word& word_plus, int order) {
  if (word_plus.transitions() < order)
    fail("OutOfRange", "word shorter than the requested truncation order");
  if (!word_admissible(m, word_plus)) fail("NotAdmissible", "word not admissible");
  StableLeaf leaf;
  leaf.word_plus = word_plus;
  leaf.order = order;
  double theta = m.theta;
  leaf.tail_bound = max_roof_slope(m) * std::pow(theta, order) / (1.0 - theta);
  auto letters = word_plus.letters;
  const IfsModel* model = &m;  // leaves are consumed while the model is alive
  leaf.value = [model, letters, order](double x) {
    return zeta_value(*model, letters, order, x);
  };
  return leaf;
}

/// Midpoint and width of the nested interval determined by a finite past
/// (letters applied left to right): width <= theta^n |I_{first}|.
inline std::pair<double, double> code_point(const IfsModel& m, const std::vector<int>& past) {
  if (past.empty()) fail("OutOfRange", "empty past");
  Interval cur = m.intervals[static_cast<std::size_t>(past.front())];
  for (std::size_t k = 0; k + 1 < past.size(); ++k) {
    const Branch& b = m.branch(past[k], past[k + 1]);
    double e0 = b.map(cur.lo), e1 = b.map(cur.hi);
    cur = {std::min(e0, e1), std::max(e0, e1)};
  }
  return {cur.mid(), cur.length()};
}

/// Canonical coding point of a letter: the all-letter past where admissible,
/// else the greedy lexicographically smallest past, refined to `depth`.
inline double canonical_coding_point(const IfsModel& m, int letter, int depth = 40) {
  return code_point(m, canonical_past(m, letter, depth)).first;
}

// ---------------------------------------------------------------------------
// Minimal captivity

struct CaptivityWitness {
  double x = 0.0;
  double xi = 0.0;
  int source = 0;
  int competing_target = 0;
  double dist = 0.0;
};

struct CaptivityReport {
  bool passed = false;
  double epsilon = 0.0;
  double min_branch_gap = std::numeric_limits<double>::infinity();
  int n_word = 0;
  int n_x_samples = 0;
  int table_grid = 0;
  std::vector<CaptivityWitness> witnesses;
};

/// Depth-a refinement cells of the surviving set that end at `letter`.
inline std::vector<Interval> surviving_cells(const IfsModel& m, int letter, int depth) {
  std::vector<Interval> cells;
  std::vector<int> word;
  std::function<void(int, int)> rec = [&](int last, int remaining) {
    if (remaining == 0) {
      std::vector<int> past(word.rbegin(), word.rend());
      past.push_back(letter);
      Interval cur = m.intervals[static_cast<std::size_t>(past.front())];
      for (std::size_t k = 0; k + 1 < past.size(); ++k) {
        const Branch& b = m.branch(past[k], past[k + 1]);
        double e0 = b.map(cur.lo), e1 = b.map(cur.hi);
        cur = {std::min(e0, e1), std::max(e0, e1)};
      }
      cells.push_back(cur);
      return;
    }
    for (int q = 0; q < m.n_symbols; ++q) {
      if (!m.admissible(q, last)) continue;
      word.push_back(q);
      rec(q, remaining - 1);
      word.pop_back();
    }
  };
  rec(letter, depth);
  return cells;
}

/// Sampled minimal-captivity certification. Trapped-set points
/// (x, zeta_{w+}(x)) are pushed through every competing branch; the report
/// records the smallest xi-distance between a competing image and the
/// trapped leaves over the target interval. Certification is at grid
/// resolution: passing means every measured gap exceeds 2*epsilon.
inline CaptivityReport captivity_check(const IfsModel& m, double epsilon, int n_word = 6,
                                       int n_x_samples = 12, int table_grid = 64,
                                       int ka_depth = 2) {
  if (!(epsilon > 0)) fail("OutOfRange", "epsilon must be positive");
  CaptivityReport rep;
  rep.epsilon = epsilon;
  rep.n_word = n_word;
  rep.n_x_samples = n_x_samples;
  rep.table_grid = table_grid;

  // forward words grouped by first letter
  std::vector<std::vector<Word>> words_by_start(static_cast<std::size_t>(m.n_symbols));
  for (Word& w : enumerate_words(m, n_word, WordKind::open))
    words_by_start[static_cast<std::size_t>(w.letters.front())].push_back(std::move(w));

  // leaf tables: zeta values on a uniform grid per interval
  std::vector<std::vector<std::vector<double>>> table(static_cast<std::size_t>(m.n_symbols));
  std::vector<std::vector<double>> grid_x(static_cast<std::size_t>(m.n_symbols));
  for (int j = 0; j < m.n_symbols; ++j) {
    const Interval& I = m.intervals[static_cast<std::size_t>(j)];
    grid_x[static_cast<std::size_t>(j)] = linspace(I.lo, I.hi, table_grid);
    for (const Word& w : words_by_start[static_cast<std::size_t>(j)]) {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(table_grid));
      for (double x : grid_x[static_cast<std::size_t>(j)])
        vals.push_back(zeta_value(m, w.letters, n_word, x));
      table[static_cast<std::size_t>(j)].push_back(std::move(vals));
    }
  }

  auto leaf_distance = [&](int j, double x, double xi) {
    const auto& gx = grid_x[static_cast<std::size_t>(j)];
    double t = (x - gx.front()) / (gx.back() - gx.front());
    t = std::clamp(t, 0.0, 1.0) * (table_grid - 1);
    int c0 = std::min(static_cast<int>(t), table_grid - 2);
    double frac = t - c0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& vals : table[static_cast<std::size_t>(j)]) {
      double v = vals[static_cast<std::size_t>(c0)] * (1 - frac) +
                 vals[static_cast<std::size_t>(c0 + 1)] * frac;
      best = std::min(best, std::abs(xi - v));
    }
    return best;
  };

  for (int i = 0; i < m.n_symbols; ++i) {
    auto cells = surviving_cells(m, i, ka_depth);
    int per_cell = std::max(2, static_cast<int>(n_x_samples / std::max<std::size_t>(1, cells.size())) + 1);
    std::vector<double> xs;
    for (const Interval& c : cells)
      for (double x : linspace(c.lo, c.hi, per_cell)) xs.push_back(x);
    for (const Word& w : words_by_start[static_cast<std::size_t>(i)]) {
      int cont = w.letters[1];
      for (double x : xs) {
        double xi = zeta_value(m, w.letters, n_word, x);
        for (int j = 0; j < m.n_symbols; ++j) {
          if (j == cont || !m.admissible(i, j)) continue;
          PhasePoint img = canonical_map(m, i, j, {x, xi});
          double dist = leaf_distance(j, img.x, img.xi);
          if (dist < rep.min_branch_gap) rep.min_branch_gap = dist;
          if (dist <= 2 * epsilon && rep.witnesses.size() < 16)
            rep.witnesses.push_back({x, xi, i, j, dist});
        }
      }
    }
  }
  rep.passed = rep.min_branch_gap > 2 * epsilon;
  if (rep.passed) rep.witnesses.clear();
  return rep;
}

// ---------------------------------------------------------------------------
// Orbit separation (existence of the uniform constant in the separation
// bounds: |x_w - x_w'| >= C e^{-J(suffix)} and min|zeta_w - zeta_w'| >=
// C e^{-J(prefix)}).

struct SeparationResult {
  int n1 = 0;  // first differing position
  int n2 = 0;  // first differing position from the tail
  double dx = 0.0;
  double dzeta = 0.0;
  double ratio_x = 0.0;
  double ratio_zeta = 0.0;
};

inline SeparationResult separation_distances(const IfsModel& m, const Word& wa, const Word& wb,
                                             int n, int zeta_order = 24, int grid = 64,
                                             int ka_depth = 2) {
  if (static_cast<int>(wa.letters.size()) < n + 1 || static_cast<int>(wb.letters.size()) < n + 1)
    fail("OutOfRange", "words shorter than n+1 letters");
  bool differ = false;
  for (int k = 0; k <= n; ++k)
    if (wa.letters[static_cast<std::size_t>(k)] != wb.letters[static_cast<std::size_t>(k)])
      differ = true;
  if (!differ) fail("IdenticalWords", "words agree on positions 0..n");

  SeparationResult r;
  while (wa.letters[static_cast<std::size_t>(r.n1)] == wb.letters[static_cast<std::size_t>(r.n1)])
    ++r.n1;
  while (wa.letters[static_cast<std::size_t>(n - r.n2)] ==
         wb.letters[static_cast<std::size_t>(n - r.n2)])
    ++r.n2;

  auto prefix = [&](const Word& w) {
    return std::vector<int>(w.letters.begin(), w.letters.begin() + n + 1);
  };
  auto [xa, wida] = code_point(m, prefix(wa));
  auto [xb, widb] = code_point(m, prefix(wb));
  (void)wida;
  (void)widb;
  r.dx = std::abs(xa - xb);

  // Birkhoff expansion exponent of wa over the shared suffix, along the
  // orbit of wa's coded prefix point.
  double jsuffix = 0.0;
  {
    int start = n - r.n2 + 1;
    if (start < n) {
      auto [x0, wid] = code_point(m, std::vector<int>(wa.letters.begin(),
                                                      wa.letters.begin() + start + 1));
      (void)wid;
      double p = x0;
      for (int k = start; k < n; ++k) {
        const Branch& b = m.branch(wa.letters[static_cast<std::size_t>(k)],
                                   wa.letters[static_cast<std::size_t>(k + 1)]);
        jsuffix += -std::log(std::abs(b.deriv(p)));
        p = b.map(p);
      }
    }
  }
  r.ratio_x = r.dx / std::exp(-jsuffix);

  // Stable-leaf distance over the surviving cells of wa's first interval.
  std::vector<int> la = extend_word(m, wa.letters, n + 1 + zeta_order);
  std::vector<int> lb = extend_word(m, wb.letters, n + 1 + zeta_order);
  double dz = std::numeric_limits<double>::infinity();
  for (const Interval& c :
       surviving_cells(m, wa.letters.front(), ka_depth)) {
    for (double x : linspace(c.lo, c.hi, std::max(2, grid / 4))) {
      double va = zeta_value(m, la, n + zeta_order, x);
      double vb = zeta_value(m, lb, n + zeta_order, x);
      dz = std::min(dz, std::abs(va - vb));
    }
  }
  r.dzeta = dz;

  double jprefix = 0.0;
  if (r.n1 >= 2) {
    double p = canonical_coding_point(m, wa.letters.front());
    for (int k = 0; k < r.n1 - 1; ++k) {
      const Branch& b = m.branch(wa.letters[static_cast<std::size_t>(k)],
                                 wa.letters[static_cast<std::size_t>(k + 1)]);
      jprefix += -std::log(std::abs(b.deriv(p)));
      p = b.map(p);
    }
  }
  r.ratio_zeta = r.dzeta / std::exp(-jprefix);
  return r;
}

}  // namespace gapscope
