#pragma once

// Competing upper bounds on the asymptotic log-spectral-radius of the
// transfer-operator family, the exponent beta0 and averaged expansion rate
// entering the refined bound, the gamma(J_c) optimization curve with its
// brute-force finite-time estimator, and the (delta, omega) phase-diagram
// classification for the two-branch linear family.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gapscope/common.hpp"
#include "gapscope/ifs.hpp"
#include "gapscope/pressure.hpp"

namespace gapscope {

/// Pr(c_v V + c_j J), dispatching to the weighted-adjacency closed form
/// whenever both the Jacobian and the potential are branch-constant.
inline double pressure_combo(const IfsModel& m, double c_v, double c_j, int n_max = 0) {
  if (m.constant_jacobian &&
      (m.potential_kind == PotentialKind::zero ||
       m.potential_kind == PotentialKind::proportional ||
       m.potential_kind == PotentialKind::constant)) {
    std::vector<double> g;
    for (double j : m.jacobian_by_target) {
      double v = 0.0;
      if (m.potential_kind == PotentialKind::proportional) v = (1.0 - m.potential_param) * j;
      if (m.potential_kind == PotentialKind::constant) v = m.potential_param;
      g.push_back(c_v * v + c_j * j);
    }
    return detail::log_perron_weighted(m.adjacency, g);
  }
  int n = n_max > 0 ? n_max : default_pressure_order(m);
  return pressure_step(m, step_potential_jacobian(m, c_v, c_j), n).value;
}

inline double gamma_gibbs(const IfsModel& m, int n_max = 0) {
  return pressure_combo(m, 1.0, -1.0, n_max);
}

inline double gamma_conj(const IfsModel& m, int n_max = 0) {
  return 0.5 * pressure_combo(m, 2.0, -2.0, n_max);
}

/// Supremum of the per-step Birkhoff average of V - J/2 over closed words of
/// period <= n_max; exact at n_max = 1 for branch-constant data.
inline double gamma_sc(const IfsModel& m, int n_max = 1) {
  if (n_max < 1) fail("OutOfRange", "gamma_sc needs n_max >= 1");
  double best = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    for (const Word& w : enumerate_words(m, n, WordKind::closed)) {
      auto [x, res] = periodic_fixed_point(m, w);
      (void)res;
      OrbitData orb = compose_orbit(m, w, x);
      best = std::max(best, (orb.birkhoff_potential - 0.5 * orb.birkhoff_jacobian) / n);
    }
  }
  return best;
}

/// Root of Pr(2(V-J) + beta J) = 2 Pr(V-J). The left side grows in beta at
/// rate >= J_min, so a bracketed bisection is safe; residual < 1e-10.
inline double beta0_solve(const IfsModel& m, int n_max = 0) {
  double target = 2.0 * gamma_gibbs(m, n_max);
  auto h = [&](double beta) { return pressure_combo(m, 2.0, beta - 2.0, n_max) - target; };
  double lo = 0.0;
  double flo = h(lo);
  if (flo > 1e-12) fail("NoRoot", "Pr(2(V-J)) exceeds 2 Pr(V-J)");
  if (std::abs(flo) <= 1e-12) return 0.0;
  double hi = 1.0;
  while (h(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 50.0) fail("NoRoot", "no beta root below 50");
  }
  return bisect(h, lo, hi, 1e-13, 1e-10, 300);
}

/// <J> = (2 Pr(V-J) - Pr(2(V-J))) / beta0.
inline double j_average(const IfsModel& m, int n_max = 0) {
  double beta0 = beta0_solve(m, n_max);
  if (beta0 <= 0) fail("NoRoot", "degenerate beta0");
  return (2.0 * gamma_gibbs(m, n_max) - pressure_combo(m, 2.0, -2.0, n_max)) / beta0;
}

enum class GapCase { gibbs, sc, up };

inline const char* gap_case_name(GapCase c) {
  switch (c) {
    case GapCase::gibbs: return "Gibbs";
    case GapCase::sc: return "sc";
    case GapCase::up: return "up";
  }
  return "?";
}

/// The refined bound with its applicability split: when beta0 >= 1/2 and
/// <J> < 2 J_min the value is (1/2) Pr(2(V-J)) + <J>/4, otherwise it falls
/// back to Pr(V-J).
inline std::pair<double, GapCase> gamma_up(const IfsModel& m, int n_max = 0,
                                           int extremes_order = 0) {
  double beta0 = beta0_solve(m, n_max);
  int n_ext = extremes_order > 0 ? extremes_order : (m.constant_jacobian ? 1 : 6);
  auto [jmin, jmax] = j_extremes(m, n_ext);
  (void)jmax;
  double javg = j_average(m, n_max);
  if (beta0 >= 0.5 - 1e-12 && javg < 2.0 * jmin)
    return {gamma_conj(m, n_max) + 0.25 * javg, GapCase::up};
  return {gamma_gibbs(m, n_max), GapCase::gibbs};
}

// ---------------------------------------------------------------------------
// Full report

struct GapReport {
  double delta = 0.0;
  double h_top = 0.0;
  double j_min = 0.0, j_max = 0.0;
  double gamma_gibbs = 0.0, gamma_sc = 0.0, gamma_conj = 0.0, gamma_up = 0.0;
  double beta0 = 0.0;
  double j_avg = 0.0;
  bool up_case_applicable = false;
  GapCase best_bound = GapCase::gibbs;
  bool tie = false;
};

inline GapReport gap_report(const IfsModel& m, int n_max = 0, int sc_order = 0,
                            int extremes_order = 0) {
  GapReport r;
  r.delta = hausdorff_dimension(m, n_max);
  r.h_top = topological_entropy(m);
  int n_ext = extremes_order > 0 ? extremes_order : (m.constant_jacobian ? 1 : 6);
  std::tie(r.j_min, r.j_max) = j_extremes(m, n_ext);
  r.gamma_gibbs = gamma_gibbs(m, n_max);
  r.gamma_conj = gamma_conj(m, n_max);
  r.gamma_sc = gamma_sc(m, sc_order > 0 ? sc_order : (m.constant_jacobian ? 1 : 6));
  r.beta0 = beta0_solve(m, n_max);
  r.j_avg = j_average(m, n_max);
  r.up_case_applicable = (r.beta0 >= 0.5 - 1e-12 && r.j_avg < 2.0 * r.j_min);
  r.gamma_up = r.up_case_applicable ? r.gamma_conj + 0.25 * r.j_avg : r.gamma_gibbs;

  double vals[3] = {r.gamma_gibbs, r.gamma_sc, r.gamma_up};
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (vals[k] < vals[best] - 1e-9) best = k;
  r.best_bound = static_cast<GapCase>(best);
  for (int k = 0; k < 3; ++k)
    if (k != best && std::abs(vals[k] - vals[best]) <= 1e-9) r.tie = true;
  return r;
}

// ---------------------------------------------------------------------------
// gamma(J_c) optimization curve

struct GammaContext {
  double gibbs = 0.0, conj = 0.0, beta0 = 0.0, j_avg = 0.0, j_min = 0.0, j_max = 0.0;
};

inline GammaContext gamma_context(const IfsModel& m, int n_max = 0) {
  GammaContext c;
  c.gibbs = gamma_gibbs(m, n_max);
  c.conj = gamma_conj(m, n_max);
  c.beta0 = beta0_solve(m, n_max);
  c.j_avg = j_average(m, n_max);
  std::tie(c.j_min, c.j_max) = j_extremes(m, m.constant_jacobian ? 1 : 6);
  return c;
}

/// Closed-form reduction of the diagonal-approximation bound as a function
/// of the cutoff J_c in (0, 2 J_min): J_c/4 + (1/2) Pr(2(V-J)) once the
/// cutoff passes <J>, and J_c/4 - J_c beta0/2 + Pr(V-J) below it.
inline double gamma_jc(const GammaContext& c, double jc) {
  if (!(jc > 0.0 && jc < 2.0 * c.j_min)) fail("OutOfRange", "J_c must lie in (0, 2 J_min)");
  if (jc >= c.j_avg) return 0.25 * jc + c.conj;
  return 0.25 * jc - 0.5 * jc * c.beta0 + c.gibbs;
}

inline double gamma_jc(const IfsModel& m, double jc, int n_max = 0) {
  return gamma_jc(gamma_context(m, n_max), jc);
}

struct GammaCurve {
  std::vector<double> jc_grid;
  std::vector<double> gamma_of_jc;
  double j1_star = 0.0;  // argmin of the unconstrained rate: u'(0)
  double j2_star = 0.0;  // u'(beta0)
  std::vector<double> jbar_grid, v1_samples, v2_samples;  // rate pieces at J_c = <J>
  GammaContext context;
};

inline GammaCurve gamma_curve(const IfsModel& m, double jc_min, double jc_max, int steps,
                              int n_max = 0) {
  GammaCurve out;
  out.context = gamma_context(m, n_max);
  double hi_cap = 2.0 * out.context.j_min;
  if (!(jc_min > 0.0 && jc_max > jc_min && jc_max < hi_cap))
    fail("OutOfRange", "J_c grid must lie inside (0, 2 J_min)");
  out.jc_grid = linspace(jc_min, jc_max, steps);
  // snap the nearest grid point onto <J> so the curve minimum is exact there
  if (out.context.j_avg > jc_min && out.context.j_avg < jc_max) {
    std::size_t nearest = 0;
    for (std::size_t k = 1; k < out.jc_grid.size(); ++k)
      if (std::abs(out.jc_grid[k] - out.context.j_avg) <
          std::abs(out.jc_grid[nearest] - out.context.j_avg))
        nearest = k;
    out.jc_grid[nearest] = out.context.j_avg;
  }
  for (double jc : out.jc_grid) out.gamma_of_jc.push_back(gamma_jc(out.context, jc));

  // rate-function diagnostics: u(beta) = Pr(2(V-J) + beta J)
  StepWeight f = step_potential_jacobian(m, 0.0, 1.0);
  StepWeight g = step_potential_jacobian(m, 2.0, -2.0);
  int n = n_max > 0 ? n_max : default_pressure_order(m);
  auto du = [&](double b) { return detail::word_moments(m, g, f, b, n).mean / n; };
  out.j1_star = du(0.0);
  out.j2_star = du(out.context.beta0);
  double jc_ref = out.context.j_avg;
  auto u_at = [&](double b) {
    return pressure_step(m, [&](const Branch& br, double xp, double xi) {
      return g(br, xp, xi) + b * f(br, xp, xi);
    }, n).value;
  };
  for (double jb : linspace(out.context.j_min + 1e-6, out.context.j_max - 1e-6,
                            std::max(2, steps / 4))) {
    double lo = -1, hi = 1;
    int guard = 0;
    while (du(lo) > jb && ++guard < 12) lo *= 2;
    guard = 0;
    while (du(hi) < jb && ++guard < 12) hi *= 2;
    double b = bisect([&](double bb) { return du(bb) - jb; }, lo, hi, 1e-10);
    double v1 = b * jb - u_at(b);
    double v2 = (jc_ref / jb) * (v1 + 2.0 * out.context.gibbs) - 2.0 * out.context.gibbs;
    out.jbar_grid.push_back(jb);
    out.v1_samples.push_back(v1);
    out.v2_samples.push_back(v2);
  }
  return out;
}

/// Brute-force finite-time evaluation of the diagonal-approximation sum:
/// words are split at the last prefix whose expansion stays below n J_c,
/// the doubled prefix weight is combined with both suffix weights, and the
/// free suffix sum is attached at the split letter.
inline double gamma_jc_direct(const IfsModel& m, double jc, int n) {
  if (!(jc > 0.0)) fail("OutOfRange", "J_c must be positive");
  double nodes = std::pow(static_cast<double>(m.n_symbols), n + 1);
  if (nodes > 1e7) fail("EnumerationTooLarge", "N^{n+1} exceeds 1e7");

  // suffix log-sums per start letter and length, weight V - J
  StepWeight w = step_potential_jacobian(m, 1.0, -1.0);
  std::vector<std::vector<double>> suffix(static_cast<std::size_t>(m.n_symbols));
  for (int letter = 0; letter < m.n_symbols; ++letter) {
    struct Visitor {
      const StepWeight* w;
      std::vector<double> partial;
      std::vector<LogSumAcc> acc;
      void node(int depth, std::span<const int>, std::span<const double>) {
        acc[static_cast<std::size_t>(depth)].add(partial.back());
      }
      void push(const Branch& b, double xp, double xi) {
        partial.push_back(partial.back() + (*w)(b, xp, xi));
      }
      void pop() { partial.pop_back(); }
    } v;
    v.w = &w;
    v.acc.resize(static_cast<std::size_t>(n) + 1);
    v.partial.assign(1, 0.0);
    detail::walk_words(m, n, v, 40, letter);
    for (auto& a : v.acc) suffix[static_cast<std::size_t>(letter)].push_back(a.log());
  }

  struct Main {
    const StepWeight* w;
    const std::vector<std::vector<double>>* suffix;
    int n;
    double njc;
    std::vector<double> pvj;  // (V-J) partials
    std::vector<double> pj;   // J partials (increasing)
    LogSumAcc acc;
    void node(int depth, std::span<const int> letters, std::span<const double>) {
      if (depth != n) return;
      int nstar = 0;
      for (int k = n; k >= 0; --k) {
        if (pj[static_cast<std::size_t>(k)] < njc) {
          nstar = k;
          break;
        }
      }
      double term = 2.0 * pvj[static_cast<std::size_t>(nstar)] +
                    (pvj[static_cast<std::size_t>(n)] - pvj[static_cast<std::size_t>(nstar)]) +
                    (*suffix)[static_cast<std::size_t>(letters[static_cast<std::size_t>(nstar)])]
                             [static_cast<std::size_t>(n - nstar)];
      acc.add(term);
    }
    void push(const Branch& b, double xp, double xi) {
      pvj.push_back(pvj.back() + (*w)(b, xp, xi));
      pj.push_back(pj.back() - std::log(std::abs(b.deriv(xp))));
    }
    void pop() {
      pvj.pop_back();
      pj.pop_back();
    }
  } main;
  main.w = &w;
  main.suffix = &suffix;
  main.n = n;
  main.njc = n * jc;
  main.pvj.assign(1, 0.0);
  main.pj.assign(1, 0.0);
  detail::walk_words(m, n, main);
  return 0.25 * jc + main.acc.log() / (2.0 * n);
}

// ---------------------------------------------------------------------------
// Phase diagram for the linear family

struct PhaseCell {
  double delta = 0.0;
  double omega = 0.0;
  bool feasible = false;
  double gibbs = 0.0, sc = 0.0, up = 0.0;
  GapCase label = GapCase::gibbs;
  bool tie = false;
};

struct PhaseDiagram {
  double a = 0.0;
  std::vector<PhaseCell> cells;  // row-major over (delta, omega)
};

/// Labels each (delta, omega) cell of the linear family with the smallest of
/// the three bounds for potential V = (1-a) J. Ties resolve to the earlier
/// entry of (Gibbs, sc, up) and are flagged; infeasible cells are marked.
inline PhaseDiagram classify(double a, const std::vector<double>& delta_grid,
                             const std::vector<double>& omega_grid) {
  PhaseDiagram pd;
  pd.a = a;
  for (double delta : delta_grid) {
    for (double omega : omega_grid) {
      PhaseCell cell;
      cell.delta = delta;
      cell.omega = omega;
      try {
        IfsModel m = make_linear_from(delta, omega);
        set_potential_proportional(m, a);
        cell.gibbs = gamma_gibbs(m);
        cell.sc = gamma_sc(m, 1);
        cell.up = gamma_up(m).first;
        cell.feasible = true;
        double vals[3] = {cell.gibbs, cell.sc, cell.up};
        int best = 0;
        for (int k = 1; k < 3; ++k)
          if (vals[k] < vals[best] - 1e-9) best = k;
        cell.label = static_cast<GapCase>(best);
        for (int k = 0; k < 3; ++k)
          if (k != best && std::abs(vals[k] - vals[best]) <= 1e-9) cell.tie = true;
      } catch (const Error&) {
        cell.feasible = false;
      }
      pd.cells.push_back(cell);
    }
  }
  return pd;
}

}  // namespace gapscope
