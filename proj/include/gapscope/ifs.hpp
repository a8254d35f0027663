#pragma once

// Iterated function schemes on disjoint intervals: admissible words, orbit
// composition, Birkhoff sums, periodic points, and pointwise application of
// the weighted transfer operator. Everything downstream (pressure, spectral
// bounds, resonances, normal form) is built on the types in this header.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gapscope/common.hpp"

namespace gapscope {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x, double tol = 1e-12) const { return x >= lo - tol && x <= hi + tol; }
};

/// One admissible contracting branch between symbol intervals. `map` must be
/// real-analytic and strictly monotone on the source interval with
/// 0 < |deriv| <= theta < 1; `sign` records the orientation of `deriv`.
struct Branch {
  int source = 0;
  int target = 0;
  RealFn map;
  RealFn deriv;
  RealFn deriv2;  // optional; required only for roof = -jacobian on custom models
  int sign = +1;
};

enum class RoofKind { zero, linear_slopes, minus_jacobian, expression };
enum class PotentialKind { zero, proportional, constant, expression };

/// The full dynamical datum: intervals, adjacency, branches, contraction
/// bound, roof function and potential (both functions of the image point).
///
/// Immutable after construction; all operations in this library are pure.
struct IfsModel {
  int n_symbols = 0;
  std::vector<Interval> intervals;
  std::vector<std::vector<int>> adjacency;  // 0/1, adjacency[i][j]
  std::vector<Branch> branches;             // one per admissible (i,j)
  double theta = 0.0;                       // grid estimate of max |phi'|

  RealFn roof, roof_deriv;            // tau, tau' on the branch images
  RealFn potential, potential_deriv;  // V, V'

  // Metadata used for closed-form dispatch and reporting.
  RoofKind roof_kind = RoofKind::zero;
  PotentialKind potential_kind = PotentialKind::zero;
  double potential_param = 0.0;  // exponent a for proportional, value for constant

  bool constant_jacobian = false;         // -log|phi'| constant per target interval
  std::vector<double> jacobian_by_target; // valid when constant_jacobian

  int branch_index(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_symbols || j >= n_symbols) return -1;
    return branch_lookup_[static_cast<std::size_t>(i) * n_symbols + j];
  }
  bool admissible(int i, int j) const { return branch_index(i, j) >= 0; }
  const Branch& branch(int i, int j) const {
    int k = branch_index(i, j);
    if (k < 0) fail("NotAdmissible", "no branch " + std::to_string(i) + "->" + std::to_string(j));
    return branches[static_cast<std::size_t>(k)];
  }

  /// Expansion exponent of the unique branch whose image contains y,
  /// i.e. -log|phi'| pulled back to the image point.
  double jacobian_at_image(double y) const {
    const Branch* b = branch_of_image(y);
    if (b == nullptr) fail("PointOutsideInterval", "point is in no branch image");
    double x = invert_branch(*b, y);
    return -std::log(std::abs(b->deriv(x)));
  }

  /// The branch with y in phi(I_source), or nullptr (images are disjoint so
  /// there is at most one).
  const Branch* branch_of_image(double y) const {
    for (std::size_t k = 0; k < branches.size(); ++k) {
      if (image_intervals_[k].contains(y, 1e-12)) return &branches[k];
    }
    return nullptr;
  }

  double invert_branch(const Branch& b, double y) const {
    const Interval& src = intervals[static_cast<std::size_t>(b.source)];
    double lo = src.lo, hi = src.hi;
    double flo = b.map(lo) - y, fhi = b.map(hi) - y;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) {
      // y sits on the numeric boundary of the image; clamp to the nearer end
      return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      double m = 0.5 * (lo + hi);
      double fm = b.map(m) - y;
      if (fm == 0) return m;
      if ((fm > 0) == (flo > 0)) {
        lo = m;
        flo = fm;
      } else {
        hi = m;
      }
    }
    return 0.5 * (lo + hi);
  }

  const Interval& image_interval(int branch_idx) const {
    return image_intervals_[static_cast<std::size_t>(branch_idx)];
  }

  /// Recomputes lookup tables and the theta estimate. Builders call this once;
  /// custom constructions must call it before use.
  void finalize(int grid_density = 256) {
    branch_lookup_.assign(static_cast<std::size_t>(n_symbols) * n_symbols, -1);
    image_intervals_.resize(branches.size());
    double th = 0.0;
    for (std::size_t k = 0; k < branches.size(); ++k) {
      const Branch& b = branches[k];
      branch_lookup_[static_cast<std::size_t>(b.source) * n_symbols + b.target] =
          static_cast<int>(k);
      const Interval& src = intervals[static_cast<std::size_t>(b.source)];
      double e0 = b.map(src.lo), e1 = b.map(src.hi);
      image_intervals_[k] = {std::min(e0, e1), std::max(e0, e1)};
      for (int s = 0; s <= grid_density; ++s) {
        double x = src.lo + (src.hi - src.lo) * s / grid_density;
        th = std::max(th, std::abs(b.deriv(x)));
      }
    }
    theta = th;
  }

 private:
  std::vector<int> branch_lookup_;
  std::vector<Interval> image_intervals_;
};

// ---------------------------------------------------------------------------
// Words

enum class WordKind { open, closed };

/// An adjacency-admissible finite symbol sequence. Open words of length n
/// have n transitions (n+1 letters); closed words of period n have n letters
/// that are cyclically admissible. Letters are 0-based.
struct Word {
  std::vector<int> letters;
  WordKind kind = WordKind::open;

  int transitions() const {
    if (kind == WordKind::open) return static_cast<int>(letters.size()) - 1;
    return static_cast<int>(letters.size());
  }
  int period() const { return static_cast<int>(letters.size()); }

  std::string str() const {
    std::ostringstream os;
    os << (kind == WordKind::open ? "(" : "[");
    for (std::size_t i = 0; i < letters.size(); ++i) os << (i ? "," : "") << letters[i];
    os << (kind == WordKind::open ? ")" : "]");
    return os.str();
  }
};

inline bool word_admissible(const IfsModel& m, const Word& w) {
  const auto& l = w.letters;
  if (l.empty()) return false;
  for (int v : l)
    if (v < 0 || v >= m.n_symbols) return false;
  for (std::size_t k = 0; k + 1 < l.size(); ++k)
    if (!m.admissible(l[k], l[k + 1])) return false;
  if (w.kind == WordKind::closed && !m.admissible(l.back(), l.front())) return false;
  return true;
}

/// All admissible words in lexicographic order: open words with n transitions
/// (count = sum of entries of A^n) or closed words of period n (count =
/// trace(A^n)). Materialized; callers guard combinatorial growth themselves.
inline std::vector<Word> enumerate_words(const IfsModel& m, int n, WordKind kind) {
  if (n < 1) fail("OutOfRange", "enumerate_words needs n >= 1");
  std::vector<Word> out;
  int len = (kind == WordKind::open) ? n + 1 : n;
  std::vector<int> cur;
  cur.reserve(static_cast<std::size_t>(len));
  std::function<void()> rec = [&]() {
    if (static_cast<int>(cur.size()) == len) {
      if (kind == WordKind::closed && !m.admissible(cur.back(), cur.front())) return;
      out.push_back(Word{cur, kind});
      return;
    }
    for (int j = 0; j < m.n_symbols; ++j) {
      if (!cur.empty() && !m.admissible(cur.back(), j)) continue;
      cur.push_back(j);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

// ---------------------------------------------------------------------------
// Orbits and Birkhoff sums

/// Orbit of a point under one word: points, signed total derivative by the
/// chain rule, and Birkhoff sums accumulated over the image points
/// x_k = phi_{w_0..w_k}(x), k = 1..n.
struct OrbitData {
  Word word;
  std::vector<double> points;  // x_0 .. x_n
  double derivative = 1.0;     // signed product of branch derivatives
  int sign = +1;
  double birkhoff_jacobian = 0.0;   // -log|derivative| > 0 for nonempty words
  double birkhoff_potential = 0.0;  // sum of V over images
  double birkhoff_roof = 0.0;       // sum of tau over images
};

inline OrbitData compose_orbit(const IfsModel& m, const Word& w, double x) {
  if (w.letters.empty()) fail("OutOfRange", "empty word");
  const Interval& start = m.intervals[static_cast<std::size_t>(w.letters.front())];
  if (!start.contains(x)) fail("PointOutsideInterval", "x not in the word's first interval");
  OrbitData orb;
  orb.word = w;
  orb.points.push_back(x);
  int steps = w.transitions();
  double cur = x;
  for (int k = 0; k < steps; ++k) {
    int i = w.letters[static_cast<std::size_t>(k)];
    int j = w.letters[static_cast<std::size_t>((k + 1) % w.letters.size())];
    const Branch& b = m.branch(i, j);
    double d = b.deriv(cur);
    cur = b.map(cur);
    orb.points.push_back(cur);
    orb.derivative *= d;
    orb.birkhoff_roof += m.roof(cur);
    orb.birkhoff_potential += m.potential(cur);
  }
  orb.sign = orb.derivative < 0 ? -1 : +1;
  orb.birkhoff_jacobian = (steps == 0) ? 0.0 : -std::log(std::abs(orb.derivative));
  return orb;
}

/// Unique fixed point of the cyclic composition of a closed word, by
/// contraction iteration from the interval midpoint. Residual is
/// |phi_cycle(x*) - x*|; the 10k-iteration cap only trips on broken models.
inline std::pair<double, double> periodic_fixed_point(const IfsModel& m, const Word& w) {
  if (w.kind != WordKind::closed) fail("OutOfRange", "periodic_fixed_point needs a closed word");
  if (!word_admissible(m, w)) fail("NotAdmissible", "word not admissible: " + w.str());
  int n = w.period();
  double x = m.intervals[static_cast<std::size_t>(w.letters.front())].mid();
  auto cycle = [&](double t) {
    for (int k = 0; k < n; ++k) {
      const Branch& b =
          m.branch(w.letters[static_cast<std::size_t>(k)],
                   w.letters[static_cast<std::size_t>((k + 1) % n)]);
      t = b.map(t);
    }
    return t;
  };
  for (int it = 0; it < 10000; ++it) {
    double nx = cycle(x);
    if (std::abs(nx - x) < 1e-14) {
      x = nx;
      return {x, std::abs(cycle(x) - x)};
    }
    x = nx;
  }
  fail("NoConvergence", "fixed-point iteration did not converge for word " + w.str());
}

/// Min/max over closed words of period <= n_max of the per-step Birkhoff
/// average of the expansion exponent at the periodic point. Exact at
/// n_max = 1 for branch-constant Jacobians.
inline std::pair<double, double> j_extremes(const IfsModel& m, int n_max) {
  if (n_max < 1) fail("OutOfRange", "j_extremes needs n_max >= 1");
  double jmin = std::numeric_limits<double>::infinity();
  double jmax = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    for (const Word& w : enumerate_words(m, n, WordKind::closed)) {
      auto [x, res] = periodic_fixed_point(m, w);
      (void)res;
      OrbitData orb = compose_orbit(m, w, x);
      double avg = orb.birkhoff_jacobian / n;
      jmin = std::min(jmin, avg);
      jmax = std::max(jmax, avg);
    }
  }
  return {jmin, jmax};
}

/// One application of the transfer operator to a tuple of functions
/// (one per interval) at a point x: the single nonvanishing branch term
/// exp(i tau(x)/hbar + V(x)) * u_i(phi^{-1}(x)), or 0 when x lies in no
/// branch image.
inline std::complex<double> apply_transfer(
    const IfsModel& m, double hbar,
    std::span<const std::function<std::complex<double>(double)>> u, double x) {
  const Branch* b = m.branch_of_image(x);
  if (b == nullptr) return {0.0, 0.0};
  double pre = m.invert_branch(*b, x);
  std::complex<double> weight =
      std::exp(std::complex<double>(m.potential(x), m.roof(x) / hbar));
  return weight * u[static_cast<std::size_t>(b->source)](pre);
}

// ---------------------------------------------------------------------------
// Model builders

namespace detail {

inline void check_intervals_sorted_disjoint(const std::vector<Interval>& iv) {
  for (const Interval& I : iv)
    if (!(I.lo < I.hi)) fail("IntervalsOverlap", "degenerate or reversed interval");
  for (std::size_t k = 0; k + 1 < iv.size(); ++k)
    if (!(iv[k].hi < iv[k + 1].lo)) fail("IntervalsOverlap", "intervals overlap or touch");
}

inline void check_intervals_pairwise_disjoint(const std::vector<Interval>& iv) {
  for (const Interval& I : iv)
    if (!(I.lo < I.hi)) fail("IntervalsOverlap", "degenerate or reversed interval");
  for (std::size_t p = 0; p < iv.size(); ++p)
    for (std::size_t q = p + 1; q < iv.size(); ++q)
      if (iv[p].lo <= iv[q].hi && iv[q].lo <= iv[p].hi)
        fail("IntervalsOverlap", "intervals overlap or touch");
}

// Value snapshot of the branch geometry so weight lambdas stay valid when a
// model is copied or moved.
struct BranchLocator {
  std::vector<Interval> sources;
  std::vector<Interval> images;
  std::vector<RealFn> maps, derivs, derivs2;

  static std::shared_ptr<const BranchLocator> from(const IfsModel& m);

  int locate(double y) const {
    for (std::size_t k = 0; k < images.size(); ++k)
      if (images[k].contains(y, 1e-12)) return static_cast<int>(k);
    return -1;
  }
  double invert(int k, double y) const {
    const Interval& src = sources[static_cast<std::size_t>(k)];
    const RealFn& f = maps[static_cast<std::size_t>(k)];
    double lo = src.lo, hi = src.hi;
    double flo = f(lo) - y, fhi = f(hi) - y;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) return std::abs(flo) < std::abs(fhi) ? lo : hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      double m = 0.5 * (lo + hi);
      double fm = f(m) - y;
      if (fm == 0) return m;
      if ((fm > 0) == (flo > 0)) {
        lo = m;
        flo = fm;
      } else {
        hi = m;
      }
    }
    return 0.5 * (lo + hi);
  }
  double jacobian_at_image(double y) const {
    int k = locate(y);
    if (k < 0) fail("PointOutsideInterval", "point is in no branch image");
    double x = invert(k, y);
    return -std::log(std::abs(derivs[static_cast<std::size_t>(k)](x)));
  }
};

inline void attach_zero_weights(IfsModel& m) {
  m.roof = [](double) { return 0.0; };
  m.roof_deriv = [](double) { return 0.0; };
  m.roof_kind = RoofKind::zero;
  m.potential = [](double) { return 0.0; };
  m.potential_deriv = [](double) { return 0.0; };
  m.potential_kind = PotentialKind::zero;
}

}  // namespace detail

/// Full-adjacency linear model: branch (i,j) maps x to a_j + (b_j - a_j) x,
/// so the expansion exponent is -log(b_j - a_j), constant per target.
inline IfsModel make_linear(const std::vector<Interval>& intervals) {
  detail::check_intervals_sorted_disjoint(intervals);
  for (const Interval& I : intervals)
    if (I.lo < 0.0 || I.hi > 1.0) fail("IntervalsOverlap", "intervals must lie inside [0,1]");
  IfsModel m;
  m.n_symbols = static_cast<int>(intervals.size());
  m.intervals = intervals;
  m.adjacency.assign(m.n_symbols, std::vector<int>(m.n_symbols, 1));
  m.constant_jacobian = true;
  for (int j = 0; j < m.n_symbols; ++j)
    m.jacobian_by_target.push_back(-std::log(intervals[static_cast<std::size_t>(j)].length()));
  for (int i = 0; i < m.n_symbols; ++i) {
    for (int j = 0; j < m.n_symbols; ++j) {
      const Interval& t = intervals[static_cast<std::size_t>(j)];
      double a = t.lo, len = t.length();
      Branch b;
      b.source = i;
      b.target = j;
      b.map = [a, len](double x) { return a + len * x; };
      b.deriv = [len](double) { return len; };
      b.deriv2 = [](double) { return 0.0; };
      b.sign = +1;
      m.branches.push_back(std::move(b));
    }
  }
  detail::attach_zero_weights(m);
  m.finalize();
  return m;
}

/// Linear model from prescribed expansion exponents. Interval lengths are
/// exp(-j1), exp(-j2); layout is I1 = [0.05, 0.05+len1] and I2 starting
/// after a 0.02 gap, all inside [0,1].
inline IfsModel make_linear_from_jacobians(double j1, double j2) {
  if (!(j1 > 0.0) || !(j2 > 0.0)) fail("InfeasibleParameters", "jacobians must be positive");
  double len1 = std::exp(-j1), len2 = std::exp(-j2);
  const double left = 0.05, gap = 0.02;
  if (left + len1 + gap + len2 > 1.0)
    fail("InfeasibleParameters", "interval lengths do not fit disjointly in [0,1]");
  Interval i1{left, left + len1};
  Interval i2{left + len1 + gap, left + len1 + gap + len2};
  return make_linear({i1, i2});
}

/// Two-branch linear model determined by (Hausdorff dimension delta,
/// homogeneity omega = exp(j1 - j2)): inverting the pressure equation for a
/// linear model gives j1 = log(1 + omega^delta)/delta and j2 = j1 - log(omega).
inline IfsModel make_linear_from(double delta, double omega) {
  if (!(delta > 0.0 && delta < 1.0)) fail("InfeasibleParameters", "delta must lie in (0,1)");
  if (!(omega > 0.0 && omega <= 1.0)) fail("InfeasibleParameters", "omega must lie in (0,1]");
  double j1 = std::log(1.0 + std::pow(omega, delta)) / delta;
  double j2 = j1 - std::log(omega);
  if (std::exp(-j1) + std::exp(-j2) >= 1.0)
    fail("InfeasibleParameters", "exp(-j1)+exp(-j2) must be < 1");
  return make_linear_from_jacobians(j1, j2);
}

/// Truncated Gauss-map scheme with N branches x -> 1/(x+d), full adjacency.
/// Symbol s carries digit d = s+1; interval s is [a, b] with a = 1/(1+d) and
/// b = midpoint of the admissible range (1/(d + 1/(N+1)), 1/d). Intervals
/// descend in position as the digit grows.
inline IfsModel make_gauss(int n_branches) {
  if (n_branches < 2) fail("OutOfRange", "make_gauss needs N >= 2");
  IfsModel m;
  m.n_symbols = n_branches;
  std::vector<Interval> iv(static_cast<std::size_t>(n_branches));
  for (int s = 0; s < n_branches; ++s) {
    double d = s + 1;
    double a = 1.0 / (1.0 + d);
    double lo_allowed = 1.0 / (d + 1.0 / (n_branches + 1.0));
    double hi_allowed = 1.0 / d;
    iv[static_cast<std::size_t>(s)] = {a, 0.5 * (lo_allowed + hi_allowed)};
  }
  m.intervals = iv;
  detail::check_intervals_pairwise_disjoint(m.intervals);
  m.adjacency.assign(n_branches, std::vector<int>(n_branches, 1));
  for (int i = 0; i < n_branches; ++i) {
    for (int j = 0; j < n_branches; ++j) {
      double d = j + 1;
      Branch b;
      b.source = i;
      b.target = j;
      b.map = [d](double x) { return 1.0 / (x + d); };
      b.deriv = [d](double x) { double t = x + d; return -1.0 / (t * t); };
      b.deriv2 = [d](double x) { double t = x + d; return 2.0 / (t * t * t); };
      b.sign = -1;
      m.branches.push_back(std::move(b));
    }
  }
  detail::attach_zero_weights(m);
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// Roof / potential attachment

/// tau(y) = slope_i * y on interval i (piecewise linear in the image point).
inline void set_roof_linear_slopes(IfsModel& m, const std::vector<double>& slopes) {
  if (static_cast<int>(slopes.size()) != m.n_symbols)
    fail("ConfigInvalid", "need one roof slope per interval");
  auto iv = m.intervals;
  auto locate = [iv](double y) {
    for (std::size_t i = 0; i < iv.size(); ++i)
      if (iv[i].contains(y, 1e-9)) return static_cast<int>(i);
    fail("PointOutsideInterval", "roof evaluated outside the interval union");
  };
  m.roof = [locate, slopes](double y) { return slopes[static_cast<std::size_t>(locate(y))] * y; };
  m.roof_deriv = [locate, slopes](double y) {
    return slopes[static_cast<std::size_t>(locate(y))];
  };
  m.roof_kind = RoofKind::linear_slopes;
}

/// tau = -J as a function of the image point. For the Gauss scheme this is
/// the closed form 2*log(y); generic models invert the covering branch.
inline void set_roof_minus_jacobian(IfsModel& m, bool gauss_closed_form = false) {
  if (gauss_closed_form) {
    m.roof = [](double y) { return 2.0 * std::log(y); };
    m.roof_deriv = [](double y) { return 2.0 / y; };
  } else {
    auto loc = detail::BranchLocator::from(m);
    m.roof = [loc](double y) { return -loc->jacobian_at_image(y); };
    m.roof_deriv = [loc](double y) {
      int k = loc->locate(y);
      if (k < 0) fail("PointOutsideInterval", "roof' evaluated outside branch images");
      if (!loc->derivs2[static_cast<std::size_t>(k)])
        fail("ConfigInvalid", "roof=-jacobian needs branch second derivatives");
      double x = loc->invert(k, y);
      double d1 = loc->derivs[static_cast<std::size_t>(k)](x);
      return loc->derivs2[static_cast<std::size_t>(k)](x) / (d1 * d1);
    };
  }
  m.roof_kind = RoofKind::minus_jacobian;
}

/// V = (1-a) J as a function of the image point.
inline void set_potential_proportional(IfsModel& m, double a, bool gauss_closed_form = false) {
  double c = 1.0 - a;
  if (m.constant_jacobian) {
    auto iv = m.intervals;
    auto jbt = m.jacobian_by_target;
    auto locate = [iv](double y) {
      for (std::size_t i = 0; i < iv.size(); ++i)
        if (iv[i].contains(y, 1e-9)) return static_cast<int>(i);
      fail("PointOutsideInterval", "potential evaluated outside the interval union");
    };
    m.potential = [locate, jbt, c](double y) {
      return c * jbt[static_cast<std::size_t>(locate(y))];
    };
    m.potential_deriv = [](double) { return 0.0; };
  } else if (gauss_closed_form) {
    m.potential = [c](double y) { return -2.0 * c * std::log(y); };
    m.potential_deriv = [c](double y) { return -2.0 * c / y; };
  } else {
    auto loc = detail::BranchLocator::from(m);
    m.potential = [loc, c](double y) { return c * loc->jacobian_at_image(y); };
    m.potential_deriv = [loc, c](double y) {
      int k = loc->locate(y);
      if (k < 0) fail("PointOutsideInterval", "V' evaluated outside branch images");
      if (!loc->derivs2[static_cast<std::size_t>(k)])
        fail("ConfigInvalid", "proportional potential needs second derivatives");
      double x = loc->invert(k, y);
      double d1 = loc->derivs[static_cast<std::size_t>(k)](x);
      return -c * loc->derivs2[static_cast<std::size_t>(k)](x) / (d1 * d1);
    };
  }
  m.potential_kind = PotentialKind::proportional;
  m.potential_param = a;
}

inline std::shared_ptr<const detail::BranchLocator> detail::BranchLocator::from(
    const IfsModel& m) {
  auto loc = std::make_shared<BranchLocator>();
  for (const Branch& b : m.branches) {
    const Interval& src = m.intervals[static_cast<std::size_t>(b.source)];
    loc->sources.push_back(src);
    double e0 = b.map(src.lo), e1 = b.map(src.hi);
    loc->images.push_back({std::min(e0, e1), std::max(e0, e1)});
    loc->maps.push_back(b.map);
    loc->derivs.push_back(b.deriv);
    loc->derivs2.push_back(b.deriv2);
  }
  return loc;
}

inline void set_potential_constant(IfsModel& m, double value) {
  m.potential = [value](double) { return value; };
  m.potential_deriv = [](double) { return 0.0; };
  m.potential_kind = PotentialKind::constant;
  m.potential_param = value;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  bool ok = false;
  double theta = 0.0;
  int transitivity_power = 0;  // witness T with (A^T) all positive
  std::string failure_code;    // empty when ok
  std::string failure_detail;
};

/// Checks the defining conditions on a sampled grid: strict contraction,
/// branch images inside the interior of their target, pairwise disjoint
/// images, and transitive adjacency. Throws on the first violation.
inline ValidationReport validate_model(const IfsModel& m, int grid_density = 256) {
  ValidationReport rep;
  if (m.n_symbols < 1 || m.branches.empty()) fail("ConfigInvalid", "model is empty");

  double theta = 0.0;
  for (const Branch& b : m.branches) {
    const Interval& src = m.intervals[static_cast<std::size_t>(b.source)];
    for (int s = 0; s <= grid_density; ++s) {
      double x = src.lo + src.length() * s / grid_density;
      double d = std::abs(b.deriv(x));
      if (!(d > 0.0) || d >= 1.0)
        fail("NotContracting", "branch " + std::to_string(b.source) + "->" +
                                   std::to_string(b.target) + " has |phi'| = " +
                                   std::to_string(d) + " at x = " + std::to_string(x));
      theta = std::max(theta, d);
    }
  }
  rep.theta = theta;

  std::vector<Interval> images;
  for (const Branch& b : m.branches) {
    const Interval& src = m.intervals[static_cast<std::size_t>(b.source)];
    const Interval& tgt = m.intervals[static_cast<std::size_t>(b.target)];
    double e0 = b.map(src.lo), e1 = b.map(src.hi);
    Interval im{std::min(e0, e1), std::max(e0, e1)};
    if (!(im.lo > tgt.lo && im.hi < tgt.hi))
      fail("ImageEscapesInterval", "image of branch " + std::to_string(b.source) + "->" +
                                       std::to_string(b.target) +
                                       " is not inside the interior of its target");
    images.push_back(im);
  }
  for (std::size_t p = 0; p < images.size(); ++p) {
    for (std::size_t q = p + 1; q < images.size(); ++q) {
      if (images[p].lo <= images[q].hi && images[q].lo <= images[p].hi)
        fail("ImagesOverlap", "branch images " + std::to_string(p) + " and " + std::to_string(q) +
                                  " intersect");
    }
  }

  // transitivity: some power of A is entrywise positive
  int n = m.n_symbols;
  std::vector<std::vector<std::uint64_t>> pw(static_cast<std::size_t>(n),
                                             std::vector<std::uint64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pw[i][j] = m.adjacency[i][j] ? 1 : 0;
  bool transitive = false;
  int tpow = 0;
  for (int t = 1; t <= 2 * n * n; ++t) {
    bool all = true;
    for (int i = 0; i < n && all; ++i)
      for (int j = 0; j < n && all; ++j) all = pw[i][j] > 0;
    if (all) {
      transitive = true;
      tpow = t;
      break;
    }
    // pw <- pw * A, saturating
    std::vector<std::vector<std::uint64_t>> nx(static_cast<std::size_t>(n),
                                               std::vector<std::uint64_t>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (pw[i][k])
          for (int j = 0; j < n; ++j)
            if (m.adjacency[k][j]) nx[i][j] = 1;
    pw = nx;
  }
  if (!transitive) fail("NotTransitive", "no power of the adjacency matrix is positive");
  rep.transitivity_power = tpow;
  rep.ok = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Canonical pasts and deterministic word extension

/// Deterministic past of length `depth` ending at `letter`: the all-letter
/// past when letter ~> letter is admissible, otherwise greedy backward
/// extension by the smallest admissible predecessor.
inline std::vector<int> canonical_past(const IfsModel& m, int letter, int depth) {
  std::vector<int> past(static_cast<std::size_t>(depth + 1), letter);
  if (m.admissible(letter, letter)) return past;
  int cur = letter;
  for (int k = depth - 1; k >= 0; --k) {
    int pick = -1;
    for (int q = 0; q < m.n_symbols; ++q)
      if (m.admissible(q, cur)) {
        pick = q;
        break;
      }
    if (pick < 0) fail("NotAdmissible", "letter has no predecessor");
    past[static_cast<std::size_t>(k)] = pick;
    cur = pick;
  }
  return past;
}

/// Extends a letter sequence on the right to `total_letters` letters:
/// repeat the last letter when admissible, else the smallest successor.
inline std::vector<int> extend_word(const IfsModel& m, std::vector<int> letters,
                                    int total_letters) {
  while (static_cast<int>(letters.size()) < total_letters) {
    int last = letters.back();
    int next = -1;
    if (m.admissible(last, last)) {
      next = last;
    } else {
      for (int q = 0; q < m.n_symbols; ++q)
        if (m.admissible(last, q)) {
          next = q;
          break;
        }
    }
    if (next < 0) fail("NotAdmissible", "letter has no successor");
    letters.push_back(next);
  }
  return letters;
}

}  // namespace gapscope
