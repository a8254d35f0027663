#pragma once

// Topological pressure and the thermodynamic quantities built on it:
// the pressure family P(beta), Bowen dimension, entropy, the u(beta)
// family with its derivatives, Legendre transforms, and constrained
// (large-deviation) word sums. Pressure is estimated from weighted word
// sums at coding points and cross-checked by periodic-orbit sums.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gapscope/common.hpp"
#include "gapscope/ifs.hpp"
#include "gapscope/phase_space.hpp"

namespace gapscope {

/// Per-transition weight with branch context. The image-point value and the
/// branch give exact access to expansion exponents without any inversion.
using StepWeight = std::function<double(const Branch&, double x_from, double x_img)>;

inline StepWeight step_from_pointwise(RealFn g) {
  return [g = std::move(g)](const Branch&, double, double x_img) { return g(x_img); };
}

/// Weight c_v * V + c_j * J per transition (J from the branch derivative).
inline StepWeight step_potential_jacobian(const IfsModel& m, double c_v, double c_j) {
  RealFn v = m.potential;
  return [v, c_v, c_j](const Branch& b, double x_from, double x_img) {
    double out = 0.0;
    if (c_v != 0.0) out += c_v * v(x_img);
    if (c_j != 0.0) out += c_j * (-std::log(std::abs(b.deriv(x_from))));
    return out;
  };
}

namespace detail {

// Depth-first walk over all admissible words with a given number of
// transitions, carrying the orbit of the canonical coding point of each
// root letter. The visitor sees every edge push/pop and every node.
template <class V>
void walk_words(const IfsModel& m, int transitions, V& visitor, int coding_order = 40,
                int root_letter = -1) {
  std::vector<int> letters;
  std::vector<double> pts;
  letters.reserve(static_cast<std::size_t>(transitions) + 1);
  pts.reserve(static_cast<std::size_t>(transitions) + 1);

  std::function<void()> rec = [&]() {
    int depth = static_cast<int>(letters.size()) - 1;
    visitor.node(depth, std::span<const int>(letters), std::span<const double>(pts));
    if (depth == transitions) return;
    int last = letters.back();
    for (int j = 0; j < m.n_symbols; ++j) {
      if (!m.admissible(last, j)) continue;
      const Branch& b = m.branch(last, j);
      double x_prev = pts.back();
      double x_img = b.map(x_prev);
      letters.push_back(j);
      pts.push_back(x_img);
      visitor.push(b, x_prev, x_img);
      rec();
      visitor.pop();
      letters.pop_back();
      pts.pop_back();
    }
  };

  for (int i = 0; i < m.n_symbols; ++i) {
    if (root_letter >= 0 && i != root_letter) continue;
    letters.assign(1, i);
    pts.assign(1, canonical_coding_point(m, i, coding_order));
    rec();
  }
}

inline void guard_enumeration(const IfsModel& m, int transitions, double budget = 2.5e8) {
  double nodes = 1.0;
  double total = 1.0;
  for (int k = 0; k <= transitions; ++k) {
    nodes *= m.n_symbols;
    total += nodes;
    if (total > budget) fail("EnumerationTooLarge", "word enumeration beyond the node budget");
  }
}

// log of the Perron root of M_{ij} = A_{ij} exp(g_j), by power iteration on
// the rescaled matrix (entries shifted so the largest exponent is 0).
inline double log_perron_weighted(const std::vector<std::vector<int>>& adjacency,
                                  const std::vector<double>& g) {
  int n = static_cast<int>(g.size());
  double s = -std::numeric_limits<double>::infinity();
  for (double v : g) s = std::max(s, v);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] = std::exp(g[static_cast<std::size_t>(j)] - s);
  std::vector<double> v(static_cast<std::size_t>(n), 1.0), nv(static_cast<std::size_t>(n));
  double lam = 0.0;
  for (int it = 0; it < 2000; ++it) {
    double mx = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
          acc += w[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      nv[static_cast<std::size_t>(i)] = acc;
      mx = std::max(mx, acc);
    }
    if (!(mx > 0)) fail("NoBracket", "adjacency has an absorbing zero row");
    bool done = it > 4 && std::abs(mx - lam) < 1e-15 * std::max(1.0, mx);
    lam = mx;
    for (int i = 0; i < n; ++i) nv[static_cast<std::size_t>(i)] /= mx;
    v = nv;
    if (done) break;
  }
  return s + std::log(lam);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pressure estimators

enum class PressureMethod { word_sum, periodic_sum, closed_form };

struct PressureEstimate {
  double value = 0.0;  // successive-ratio word-sum estimate at n_used
  int n_used = 0;
  double convergence_gap = 0.0;  // |estimate(n) - estimate(n-1)|
  PressureMethod method = PressureMethod::word_sum;
  double periodic_value = 0.0;  // (1/n) log of the periodic-orbit sum
  double periodic_gap = 0.0;
  int periodic_n = 0;
  double aitken = 0.0;  // Aitken-accelerated word-sum value
};

/// log S_n of the weighted word sums for n = 0..n_max transitions, where
/// S_n = sum over admissible words of exp(Birkhoff weight at the coding
/// point of the canonical past of the first letter).
inline std::vector<double> word_log_sums(const IfsModel& m, const StepWeight& step, int n_max,
                                         int coding_order = 40) {
  detail::guard_enumeration(m, n_max);
  struct Visitor {
    const StepWeight* step;
    std::vector<double> partial;  // Birkhoff sum along the current path
    std::vector<LogSumAcc> acc;
    void node(int depth, std::span<const int>, std::span<const double>) {
      acc[static_cast<std::size_t>(depth)].add(partial.back());
    }
    void push(const Branch& b, double xp, double xi) {
      partial.push_back(partial.back() + (*step)(b, xp, xi));
    }
    void pop() { partial.pop_back(); }
  } v;
  v.step = &step;
  v.acc.resize(static_cast<std::size_t>(n_max) + 1);
  v.partial.assign(1, 0.0);
  detail::walk_words(m, n_max, v, coding_order);
  std::vector<double> out;
  out.reserve(v.acc.size());
  for (auto& a : v.acc) out.push_back(a.log());
  return out;
}

/// (1/n) log of the periodic-orbit sums for n = 1..n_max, with Birkhoff
/// weights evaluated along each cycle at its fixed point.
inline std::vector<double> periodic_log_means(const IfsModel& m, const StepWeight& step,
                                              int n_max) {
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) {
    LogSumAcc acc;
    for (const Word& w : enumerate_words(m, n, WordKind::closed)) {
      auto [x, res] = periodic_fixed_point(m, w);
      (void)res;
      double sum = 0.0;
      double p = x;
      for (int k = 0; k < n; ++k) {
        const Branch& b = m.branch(w.letters[static_cast<std::size_t>(k)],
                                   w.letters[static_cast<std::size_t>((k + 1) % n)]);
        double img = b.map(p);
        sum += step(b, p, img);
        p = img;
      }
      acc.add(sum);
    }
    out.push_back(acc.log() / n);
  }
  return out;
}

inline int default_periodic_order(const IfsModel& m, int n_max) {
  double total = 0.0, pw = 1.0;
  int n = 0;
  while (n < n_max) {
    pw *= m.n_symbols;
    if (total + pw > 2e6) break;
    total += pw;
    ++n;
  }
  return std::max(2, n);
}

/// Pressure of a per-transition weight: the successive-ratio word-sum
/// estimate log(S_n/S_{n-1}) at n = n_max (exact at every n for
/// branch-constant weights on full-adjacency models), with the
/// periodic-orbit estimator and convergence gaps reported alongside.
inline PressureEstimate pressure_step(const IfsModel& m, const StepWeight& step, int n_max,
                                      int coding_order = 40) {
  if (n_max < 2) fail("OutOfRange", "pressure needs n_max >= 2");
  auto logs = word_log_sums(m, step, n_max, coding_order);
  auto ratio = [&](int n) { return logs[static_cast<std::size_t>(n)] - logs[static_cast<std::size_t>(n - 1)]; };
  PressureEstimate est;
  est.n_used = n_max;
  est.value = ratio(n_max);
  est.convergence_gap = std::abs(ratio(n_max) - ratio(n_max - 1));
  est.method = PressureMethod::word_sum;
  if (n_max >= 3) {
    double u2 = ratio(n_max), u1 = ratio(n_max - 1), u0 = ratio(n_max - 2);
    double d2 = u2 - 2 * u1 + u0;
    est.aitken = (std::abs(d2) > 1e-300) ? u2 - (u2 - u1) * (u2 - u1) / d2 : u2;
  } else {
    est.aitken = est.value;
  }
  int np = default_periodic_order(m, n_max);
  auto per = periodic_log_means(m, step, np);
  est.periodic_n = np;
  est.periodic_value = per.back();
  est.periodic_gap = per.size() >= 2 ? std::abs(per[per.size() - 1] - per[per.size() - 2]) : 0.0;
  return est;
}

inline PressureEstimate pressure(const IfsModel& m, const RealFn& g, int n_max) {
  return pressure_step(m, step_from_pointwise(g), n_max);
}

inline int default_pressure_order(const IfsModel& m) {
  int n = 2;
  double nodes = static_cast<double>(m.n_symbols);
  while (n < 14 && nodes * m.n_symbols <= 4e6) {
    nodes *= m.n_symbols;
    ++n;
  }
  return n;
}

/// P(beta) = Pr(-beta J). Branch-constant Jacobians take the closed form
/// log of the Perron root of A_{ij} exp(-beta J_j); otherwise the word-sum
/// estimator at the model's default order.
inline double pressure_beta(const IfsModel& m, double beta, int n_max = 0) {
  if (m.constant_jacobian) {
    std::vector<double> g;
    for (double j : m.jacobian_by_target) g.push_back(-beta * j);
    return detail::log_perron_weighted(m.adjacency, g);
  }
  int n = n_max > 0 ? n_max : default_pressure_order(m);
  return pressure_step(m, step_potential_jacobian(m, 0.0, -beta), n).value;
}

inline double topological_entropy(const IfsModel& m) { return pressure_beta(m, 0.0); }

/// Bowen root P(delta) = 0 by bracketed secant iteration; returns 0 for
/// entropy-zero systems (single orbit).
inline double hausdorff_dimension(const IfsModel& m, int n_max = 0, double tol = 1e-10) {
  double p0 = pressure_beta(m, 0.0, n_max);
  if (p0 <= 1e-9) {
    if (p0 >= -1e-9) return 0.0;
    fail("NoBracket", "P(0) < 0: no dimension bracket");
  }
  double lo = 0.0, flo = p0;
  double hi = 1.0, fhi = pressure_beta(m, 1.0, n_max);
  int expand = 0;
  while (fhi >= 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    fhi = pressure_beta(m, hi, n_max);
    if (++expand > 8) fail("NoBracket", "pressure does not change sign");
  }
  // Illinois variant of regula falsi: keeps the bracket, converges fast.
  double x = lo, fx = flo;
  for (int it = 0; it < 200; ++it) {
    x = hi - fhi * (hi - lo) / (fhi - flo);
    fx = pressure_beta(m, x, n_max);
    if (std::abs(fx) < tol) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
      fhi *= 0.5;
    } else {
      hi = x;
      fhi = fx;
      flo *= 0.5;
    }
    if (std::abs(hi - lo) < 1e-15) break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// u(beta) = Pr(g + beta f) and its derivatives

struct UDerivatives {
  double u = 0.0;
  double du = 0.0;        // central differences of the word-sum estimate
  double d2u = 0.0;
  double du_moments = 0.0;   // weighted-average route at finite n
  double d2u_moments = 0.0;  // n * variance route at finite n
  int n_used = 0;
};

namespace detail {

// Moments of f against the weight exp(g + beta f) over words at fixed n:
// returns (log m0, m1/m0, m2/m0).
struct MomentResult {
  double log_m0;
  double mean;
  double second;
};

inline MomentResult word_moments(const IfsModel& m, const StepWeight& g_step,
                                 const StepWeight& f_step, double beta, int n,
                                 int coding_order = 40) {
  guard_enumeration(m, n);
  struct Visitor {
    const StepWeight *g, *f;
    double beta;
    int n;
    std::vector<double> pg, pf;
    double shift = -std::numeric_limits<double>::infinity();
    double s0 = 0, s1 = 0, s2 = 0;
    void node(int depth, std::span<const int>, std::span<const double>) {
      if (depth != n) return;
      double h = pg.back() + beta * pf.back();
      double fw = pf.back();
      if (s0 == 0 || h > shift + 30) {
        double ns = (s0 == 0) ? h : std::max(h, shift);
        if (s0 != 0) {
          double r = std::exp(shift - ns);
          s0 *= r;
          s1 *= r;
          s2 *= r;
        }
        shift = ns;
      }
      double e = std::exp(h - shift);
      s0 += e;
      s1 += fw * e;
      s2 += fw * fw * e;
    }
    void push(const Branch& b, double xp, double xi) {
      pg.push_back(pg.back() + (*g)(b, xp, xi));
      pf.push_back(pf.back() + (*f)(b, xp, xi));
    }
    void pop() {
      pg.pop_back();
      pf.pop_back();
    }
  } v;
  v.g = &g_step;
  v.f = &f_step;
  v.beta = beta;
  v.n = n;
  v.pg.assign(1, 0.0);
  v.pf.assign(1, 0.0);
  walk_words(m, n, v, coding_order);
  if (v.s0 <= 0) fail("NoBracket", "empty word sum");
  return {v.shift + std::log(v.s0), v.s1 / v.s0, v.s2 / v.s0};
}

}  // namespace detail

inline UDerivatives u_function_step(const IfsModel& m, const StepWeight& f, const StepWeight& g,
                                    double beta, int n_max = 0) {
  int n = n_max > 0 ? n_max : default_pressure_order(m);
  auto u_at = [&](double b) {
    StepWeight comb = [&f, &g, b](const Branch& br, double xp, double xi) {
      return g(br, xp, xi) + b * f(br, xp, xi);
    };
    return pressure_step(m, comb, n).value;
  };
  UDerivatives out;
  out.n_used = n;
  out.u = u_at(beta);
  double h = 1e-4;
  double up = u_at(beta + h), um = u_at(beta - h);
  out.du = (up - um) / (2 * h);
  out.d2u = (up - 2 * out.u + um) / (h * h);
  auto mom = detail::word_moments(m, g, f, beta, n);
  out.du_moments = mom.mean / n;
  out.d2u_moments = (mom.second - mom.mean * mom.mean) / n;
  return out;
}

inline UDerivatives u_function(const IfsModel& m, const RealFn& f, const RealFn& g, double beta,
                               int n_max = 0) {
  return u_function_step(m, step_from_pointwise(f), step_from_pointwise(g), beta, n_max);
}

// ---------------------------------------------------------------------------
// Legendre transform of u and large-deviation rate data

struct LegendreData {
  std::vector<double> t_grid;
  std::vector<double> beta_of_t;
  std::vector<double> v_of_t;
  std::vector<std::pair<double, double>> u_samples;  // (beta, u(beta))
  double t0 = 0.0;                                   // u'(0), where the rate vanishes
  double f_min = 0.0;
  double f_max = 0.0;
  bool degenerate = false;
};

namespace detail {

// Range of (1/n) f_w over words at the estimator order (inner approximation
// of [f_min, f_max]).
inline std::pair<double, double> birkhoff_range(const IfsModel& m, const StepWeight& f, int n) {
  guard_enumeration(m, n);
  struct Visitor {
    const StepWeight* f;
    int n;
    std::vector<double> pf;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void node(int depth, std::span<const int>, std::span<const double>) {
      if (depth != n) return;
      double avg = pf.back() / n;
      lo = std::min(lo, avg);
      hi = std::max(hi, avg);
    }
    void push(const Branch& b, double xp, double xi) { pf.push_back(pf.back() + (*f)(b, xp, xi)); }
    void pop() { pf.pop_back(); }
  } v;
  v.f = &f;
  v.n = n;
  v.pf.assign(1, 0.0);
  walk_words(m, n, v);
  return {v.lo, v.hi};
}

}  // namespace detail

/// Solves u'(beta) = t for each t by monotone bisection (u is convex) and
/// assembles the Legendre transform v(t) = beta(t) t - u(beta(t)).
inline LegendreData legendre_step(const IfsModel& m, const StepWeight& f, const StepWeight& g,
                                  const std::vector<double>& t_grid, int n_max = 0) {
  int n = n_max > 0 ? n_max : default_pressure_order(m);
  LegendreData out;
  auto [fmin, fmax] = detail::birkhoff_range(m, f, n);
  out.f_min = fmin;
  out.f_max = fmax;
  if (fmax - fmin < 1e-10) {
    out.degenerate = true;
    fail("DegenerateRange", "f has a single Birkhoff average; the rate is a point mass");
  }
  auto u_at = [&](double b) {
    StepWeight comb = [&f, &g, b](const Branch& br, double xp, double xi) {
      return g(br, xp, xi) + b * f(br, xp, xi);
    };
    return pressure_step(m, comb, n).value;
  };
  auto du_at = [&](double b) {
    return detail::word_moments(m, g, f, b, n).mean / n;
  };
  out.t0 = du_at(0.0);
  for (double t : t_grid) {
    if (!(t > fmin && t < fmax))
      fail("OutOfRange", "t grid must lie strictly inside (f_min, f_max)");
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (du_at(lo) > t) {
      lo *= 2;
      if (++guard > 12) fail("NoBracket", "u'(beta) stays above t");
    }
    guard = 0;
    while (du_at(hi) < t) {
      hi *= 2;
      if (++guard > 12) fail("NoBracket", "u'(beta) stays below t");
    }
    double b = bisect([&](double bb) { return du_at(bb) - t; }, lo, hi, 1e-11);
    double u = u_at(b);
    out.t_grid.push_back(t);
    out.beta_of_t.push_back(b);
    out.v_of_t.push_back(b * t - u);
    out.u_samples.emplace_back(b, u);
  }
  return out;
}

inline LegendreData legendre(const IfsModel& m, const RealFn& f, const RealFn& g,
                             const std::vector<double>& t_grid, int n_max = 0) {
  return legendre_step(m, step_from_pointwise(f), step_from_pointwise(g), t_grid, n_max);
}

// ---------------------------------------------------------------------------
// Constrained word sums vs the large-deviation prediction

struct ConstrainedSum {
  double direct = 0.0;     // (1/n) log sum over words with (1/n) f_w in [ta, tb]
  double predicted = 0.0;  // sup over the interval of -v(t)
  double gap = 0.0;
  int n = 0;
};

inline ConstrainedSum constrained_pressure_step(const IfsModel& m, const StepWeight& f,
                                                const StepWeight& g, double ta, double tb,
                                                int n) {
  if (!(ta < tb)) fail("OutOfRange", "need ta < tb");
  double nodes = std::pow(static_cast<double>(m.n_symbols), n + 1);
  if (nodes > 1e7) fail("EnumerationTooLarge", "N^{n+1} exceeds 1e7");

  struct Visitor {
    const StepWeight *f, *g;
    int n;
    double ta, tb;
    std::vector<double> pf, pg;
    LogSumAcc acc;
    void node(int depth, std::span<const int>, std::span<const double>) {
      if (depth != n) return;
      double avg = pf.back() / n;
      if (avg >= ta && avg <= tb) acc.add(pg.back());
    }
    void push(const Branch& b, double xp, double xi) {
      pf.push_back(pf.back() + (*f)(b, xp, xi));
      pg.push_back(pg.back() + (*g)(b, xp, xi));
    }
    void pop() {
      pf.pop_back();
      pg.pop_back();
    }
  } v;
  v.f = &f;
  v.g = &g;
  v.n = n;
  v.ta = ta;
  v.tb = tb;
  v.pf.assign(1, 0.0);
  v.pg.assign(1, 0.0);
  detail::walk_words(m, n, v);

  ConstrainedSum out;
  out.n = n;
  out.direct = v.acc.log() / n;

  // prediction: -v at the projection of t0 onto [ta, tb]
  int order = default_pressure_order(m);
  double t0 = detail::word_moments(m, g, f, 0.0, order).mean / order;
  double t_star = std::clamp(t0, ta, tb);
  auto leg = legendre_step(m, f, g, {t_star}, order);
  out.predicted = -leg.v_of_t.front();
  out.gap = std::abs(out.direct - out.predicted);
  return out;
}

inline ConstrainedSum constrained_pressure(const IfsModel& m, const RealFn& f, const RealFn& g,
                                           double ta, double tb, int n) {
  return constrained_pressure_step(m, step_from_pointwise(f), step_from_pointwise(g), ta, tb, n);
}

}  // namespace gapscope
