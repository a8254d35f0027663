#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gapscope/expr.hpp"
#include "gapscope/ifs.hpp"
#include "helpers.hpp"

using namespace gapscope;
using Catch::Approx;

namespace {

IfsModel single_branch(double c, double d) {
  IfsModel m;
  m.n_symbols = 1;
  m.intervals = {{0.0, 1.0}};
  m.adjacency = {{1}};
  Branch b;
  b.source = 0;
  b.target = 0;
  b.map = [c, d](double x) { return c * x + d; };
  b.deriv = [c](double) { return c; };
  b.deriv2 = [](double) { return 0.0; };
  m.branches.push_back(std::move(b));
  m.constant_jacobian = true;
  m.jacobian_by_target = {-std::log(std::abs(c))};
  m.roof = [](double) { return 0.0; };
  m.roof_deriv = [](double) { return 0.0; };
  m.potential = [](double) { return 0.0; };
  m.potential_deriv = [](double) { return 0.0; };
  m.finalize();
  return m;
}

}  // namespace

TEST_CASE("linear model construction and validation") {
  auto m = testutil::fig_linear();
  REQUIRE(m.n_symbols == 2);
  REQUIRE(m.jacobian_by_target[0] == Approx(-std::log(0.44)).epsilon(1e-12));
  REQUIRE(m.jacobian_by_target[1] == Approx(-std::log(0.20)).epsilon(1e-12));
  REQUIRE(m.jacobian_by_target[0] == Approx(0.82098).margin(1e-4));
  REQUIRE(m.jacobian_by_target[1] == Approx(1.60944).margin(1e-4));

  auto rep = validate_model(m);
  REQUIRE(rep.ok);
  REQUIRE(rep.theta == Approx(0.44).margin(1e-12));
  REQUIRE(rep.transitivity_power == 1);
}

TEST_CASE("degenerate and touching intervals are rejected") {
  REQUIRE_THROWS_AS(make_linear({{0.3, 0.3}, {0.5, 0.7}}), Error);
  REQUIRE_THROWS_AS(make_linear({{0.0, 0.5}, {0.5, 1.0}}), Error);
  try {
    make_linear({{0.0, 0.5}, {0.5, 1.0}});
  } catch (const Error& e) {
    REQUIRE(e.code() == "IntervalsOverlap");
  }
}

TEST_CASE("identity branch fails contraction check") {
  IfsModel m = single_branch(0.5, 0.25);
  m.branches[0].map = [](double x) { return x; };
  m.branches[0].deriv = [](double) { return 1.0; };
  m.finalize();
  try {
    validate_model(m);
    FAIL("expected NotContracting");
  } catch (const Error& e) {
    REQUIRE(e.code() == "NotContracting");
  }
}

TEST_CASE("block-diagonal adjacency fails transitivity") {
  auto m = testutil::make_slot_sft({{0.0, 0.4}, {0.5, 0.9}}, {{1, 0}, {0, 1}});
  try {
    validate_model(m);
    FAIL("expected NotTransitive");
  } catch (const Error& e) {
    REQUIRE(e.code() == "NotTransitive");
  }
}

TEST_CASE("image escaping its target interval is detected") {
  IfsModel m = single_branch(0.5, 0.6);  // image [0.6, 1.1] escapes [0,1]
  try {
    validate_model(m);
    FAIL("expected ImageEscapesInterval");
  } catch (const Error& e) {
    REQUIRE(e.code() == "ImageEscapesInterval");
  }
}

TEST_CASE("make_linear_from closed forms") {
  SECTION("delta=0.5, omega=1 gives homogeneous 2 log 2") {
    auto m = make_linear_from(0.5, 1.0);
    REQUIRE(m.jacobian_by_target[0] == Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    REQUIRE(m.jacobian_by_target[1] == Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  }
  SECTION("delta=0.65, omega=exp(-1) has j2 = j1 + 1") {
    auto m = make_linear_from(0.65, std::exp(-1.0));
    double j1 = std::log(1.0 + std::exp(-0.65)) / 0.65;
    REQUIRE(m.jacobian_by_target[0] == Approx(j1).epsilon(1e-12));
    REQUIRE(m.jacobian_by_target[1] == Approx(j1 + 1.0).epsilon(1e-12));
    REQUIRE(j1 == Approx(0.6465).margin(5e-4));
    validate_model(m);
  }
  SECTION("lengths that cannot fit are rejected") {
    try {
      make_linear_from(0.99, 1.0);
      FAIL("expected InfeasibleParameters");
    } catch (const Error& e) {
      REQUIRE(e.code() == "InfeasibleParameters");
    }
  }
}

TEST_CASE("truncated Gauss scheme") {
  auto m = make_gauss(3);
  REQUIRE(m.intervals.size() == 3);
  REQUIRE(m.branches.size() == 9);
  auto rep = validate_model(m);
  REQUIRE(rep.ok);
  // digit-1 interval is [1/2, midpoint(1/(1+1/4), 1)] = [0.5, 0.9]
  REQUIRE(m.intervals[0].lo == Approx(0.5));
  REQUIRE(m.intervals[0].hi == Approx(0.9));
  REQUIRE(rep.theta == Approx(1.0 / (1.25 * 1.25)).epsilon(1e-12));

  SECTION("closed-form branch evaluation (N=2)") {
    auto g2 = make_gauss(2);
    double a1 = g2.intervals[0].lo;  // = 1/2
    Word w{{0, 0}, WordKind::open};
    auto orb = compose_orbit(g2, w, a1);
    REQUIRE(orb.points.back() == Approx(1.0 / (a1 + 1.0)).epsilon(1e-14));
    REQUIRE(orb.birkhoff_jacobian == Approx(2.0 * std::log(a1 + 1.0)).epsilon(1e-12));
    REQUIRE(orb.sign == -1);
  }
}

TEST_CASE("word enumeration matches adjacency matrix powers") {
  auto full2 = testutil::fig_linear();
  REQUIRE(enumerate_words(full2, 3, WordKind::open).size() == 16);
  REQUIRE(enumerate_words(full2, 2, WordKind::closed).size() == 4);

  auto swap2 = testutil::make_slot_sft({{0.0, 0.4}, {0.5, 0.9}}, {{0, 1}, {1, 0}});
  REQUIRE(enumerate_words(swap2, 3, WordKind::closed).empty());

  auto golden = testutil::make_slot_sft({{0.0, 0.4}, {0.5, 0.9}}, {{1, 1}, {1, 0}});
  for (int n = 1; n <= 12; ++n) {
    REQUIRE(enumerate_words(golden, n, WordKind::open).size() ==
            testutil::open_word_count(golden.adjacency, n));
    REQUIRE(enumerate_words(golden, n, WordKind::closed).size() ==
            testutil::closed_word_count(golden.adjacency, n));
  }

  // lexicographic order
  auto words = enumerate_words(full2, 1, WordKind::open);
  REQUIRE(words[0].letters == std::vector<int>{0, 0});
  REQUIRE(words[1].letters == std::vector<int>{0, 1});
  REQUIRE(words[3].letters == std::vector<int>{1, 1});
}

TEST_CASE("orbit composition") {
  auto m = testutil::fig_linear();
  SECTION("one linear step") {
    Word w{{0, 1}, WordKind::open};
    auto orb = compose_orbit(m, w, 0.05);
    REQUIRE(orb.points.back() == Approx(0.56).epsilon(1e-14));
    REQUIRE(orb.derivative == Approx(0.2).epsilon(1e-14));
    REQUIRE(orb.birkhoff_jacobian == Approx(-std::log(0.2)).epsilon(1e-12));
  }
  SECTION("empty composition") {
    Word w{{0}, WordKind::open};
    auto orb = compose_orbit(m, w, 0.3);
    REQUIRE(orb.points.size() == 1);
    REQUIRE(orb.derivative == 1.0);
    REQUIRE(orb.birkhoff_jacobian == 0.0);
    REQUIRE(orb.birkhoff_roof == 0.0);
  }
  SECTION("point outside the first interval") {
    Word w{{0, 1}, WordKind::open};
    REQUIRE_THROWS_AS(compose_orbit(m, w, 0.52), Error);
  }
  SECTION("chain rule and Birkhoff additivity under concatenation") {
    auto g = make_gauss(2);
    gapscope::set_roof_minus_jacobian(g, true);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::uniform_int_distribution<int> letter(0, 1);
      std::vector<int> a, b;
      a.push_back(letter(rng));
      for (int k = 0; k < 4; ++k) a.push_back(letter(rng));
      b.push_back(a.back());
      for (int k = 0; k < 3; ++k) b.push_back(letter(rng));
      std::vector<int> ab = a;
      ab.insert(ab.end(), b.begin() + 1, b.end());
      double x = g.intervals[static_cast<std::size_t>(a.front())].mid();
      auto orb_a = compose_orbit(g, Word{a, WordKind::open}, x);
      auto orb_b = compose_orbit(g, Word{b, WordKind::open}, orb_a.points.back());
      auto orb_ab = compose_orbit(g, Word{ab, WordKind::open}, x);
      REQUIRE(orb_ab.derivative == Approx(orb_a.derivative * orb_b.derivative).epsilon(1e-12));
      REQUIRE(orb_ab.birkhoff_jacobian ==
              Approx(orb_a.birkhoff_jacobian + orb_b.birkhoff_jacobian).margin(1e-10));
      REQUIRE(orb_ab.birkhoff_roof ==
              Approx(orb_a.birkhoff_roof + orb_b.birkhoff_roof).margin(1e-10));
      REQUIRE(orb_ab.birkhoff_jacobian > 0.0);
    }
  }
}

TEST_CASE("periodic fixed points") {
  auto m = testutil::fig_linear();
  SECTION("two-cycle of the linear model") {
    auto [x, res] = periodic_fixed_point(m, Word{{0, 1}, WordKind::closed});
    REQUIRE(x == Approx(0.292 / 0.912).epsilon(1e-13));
    REQUIRE(res < 1e-12);
  }
  SECTION("fixed branch") {
    auto [x, res] = periodic_fixed_point(m, Word{{0}, WordKind::closed});
    REQUIRE(x == Approx(0.05 / 0.56).epsilon(1e-13));
    REQUIRE(res < 1e-12);
  }
  SECTION("single-branch affine model") {
    auto sb = single_branch(0.5, 0.25);
    auto [x, res] = periodic_fixed_point(sb, Word{{0}, WordKind::closed});
    REQUIRE(x == Approx(0.5).margin(1e-13));
    REQUIRE(res < 1e-12);
  }
  SECTION("fixed point lies in the word's first interval") {
    for (const auto& w : enumerate_words(m, 4, WordKind::closed)) {
      auto [x, res] = periodic_fixed_point(m, w);
      REQUIRE(res < 1e-12);
      REQUIRE(m.intervals[static_cast<std::size_t>(w.letters.front())].contains(x));
    }
  }
}

TEST_CASE("expansion-rate extremes over periodic orbits") {
  auto m = testutil::fig_linear();
  auto [jmin, jmax] = j_extremes(m, 1);
  REQUIRE(jmin == Approx(-std::log(0.44)).epsilon(1e-12));
  REQUIRE(jmax == Approx(-std::log(0.20)).epsilon(1e-12));
  // branch-constant: longer periods stay inside the period-1 envelope
  auto [jmin4, jmax4] = j_extremes(m, 4);
  REQUIRE(jmin4 == Approx(jmin).epsilon(1e-12));
  REQUIRE(jmax4 == Approx(jmax).epsilon(1e-12));

  SECTION("homogeneous model collapses to a point") {
    auto h = make_linear_from(0.5, 1.0);
    auto [a, b] = j_extremes(h, 3);
    REQUIRE(a == Approx(b).margin(1e-12));
    REQUIRE(a == Approx(2 * std::log(2.0)).epsilon(1e-12));
  }

  SECTION("Gauss extremes: monotone envelope, Cauchy in n_max") {
    auto g = make_gauss(2);
    double pmin = 0, pmax = 0;
    for (int n = 1; n <= 8; ++n) {
      auto [a, b] = j_extremes(g, n);
      if (n > 1) {
        REQUIRE(a <= pmin + 1e-15);
        REQUIRE(b >= pmax - 1e-15);
      }
      if (n == 8) {
        REQUIRE(std::abs(a - pmin) < 1e-3);
        REQUIRE(std::abs(b - pmax) < 1e-3);
      }
      pmin = a;
      pmax = b;
    }
  }
}

TEST_CASE("pointwise transfer operator application") {
  auto m = testutil::fig_linear();
  std::vector<std::function<std::complex<double>(double)>> ones = {
      [](double) { return std::complex<double>(1.0, 0.0); },
      [](double) { return std::complex<double>(1.0, 0.0); }};

  SECTION("unit weight inside a branch image") {
    auto v = apply_transfer(m, 1.0, ones, 0.6);  // 0.6 in phi_{0,1}(I_0) = [0.56, 0.648]
    REQUIRE(std::abs(v - std::complex<double>(1.0, 0.0)) < 1e-14);
  }
  SECTION("zero outside all branch images") {
    auto v = apply_transfer(m, 1.0, ones, 0.54);
    REQUIRE(std::abs(v) == 0.0);
  }
  SECTION("phase factor from the roof function") {
    auto me = testutil::fig_linear();
    auto node = expr::parse("x");
    me.roof = expr::as_function(node);
    me.roof_deriv = expr::as_function(expr::derivative(node));
    me.roof_kind = RoofKind::expression;
    auto v = apply_transfer(me, 1.0, ones, 0.6);
    REQUIRE(std::abs(v - std::exp(std::complex<double>(0.0, 0.6))) < 1e-14);
  }
}

TEST_CASE("expression parser evaluates and differentiates rationals") {
  auto n = expr::parse("(x^2 - 1) / (2*x + 3)");
  auto f = expr::as_function(n);
  auto df = expr::as_function(expr::derivative(n));
  for (double x : {0.0, 0.5, 1.7, -0.3}) {
    REQUIRE(f(x) == Approx((x * x - 1) / (2 * x + 3)).epsilon(1e-12));
    double h = 1e-6;
    REQUIRE(df(x) == Approx((f(x + h) - f(x - h)) / (2 * h)).margin(1e-7));
  }
  REQUIRE_THROWS_AS(expr::parse("x +"), Error);
  REQUIRE_THROWS_AS(expr::parse("sin(x)"), Error);
}

TEST_CASE("canonical pasts and extensions") {
  auto golden = testutil::make_slot_sft({{0.0, 0.4}, {0.5, 0.9}}, {{1, 1}, {1, 0}});
  // symbol 1 has no self-loop: past must end ...0,1 with admissible steps
  auto past = canonical_past(golden, 1, 6);
  REQUIRE(past.back() == 1);
  for (std::size_t k = 0; k + 1 < past.size(); ++k)
    REQUIRE(golden.adjacency[static_cast<std::size_t>(past[k])]
                            [static_cast<std::size_t>(past[k + 1])] == 1);
  auto ext = extend_word(golden, {1}, 5);
  REQUIRE(ext.size() == 5);
  for (std::size_t k = 0; k + 1 < ext.size(); ++k)
    REQUIRE(golden.adjacency[static_cast<std::size_t>(ext[k])]
                            [static_cast<std::size_t>(ext[k + 1])] == 1);
}
