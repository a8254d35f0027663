#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gapscope/phase_space.hpp"
#include "helpers.hpp"

using namespace gapscope;
using Catch::Approx;

TEST_CASE("canonical map") {
  auto m = testutil::fig_linear_with_roof();
  SECTION("zero covector picks up the target roof slope") {
    auto p = canonical_map(m, 0, 1, {0.25, 0.0});
    REQUIRE(p.x == Approx(0.55 + 0.2 * 0.25).epsilon(1e-14));
    REQUIRE(p.xi == Approx(1.0).epsilon(1e-14));
  }
  SECTION("zero section is invariant when tau' = 0") {
    auto flat = testutil::fig_linear();
    auto p = canonical_map(flat, 0, 1, {0.25, 0.0});
    REQUIRE(p.xi == 0.0);
  }
  SECTION("covector expands by the reciprocal branch derivative") {
    auto p = canonical_map(m, 0, 0, {0.25, -0.1});
    REQUIRE(p.xi == Approx(-0.1 / 0.44).epsilon(1e-14));
  }
  SECTION("base point must sit above the source interval") {
    REQUIRE_THROWS_AS(canonical_map(m, 0, 1, {0.52, 0.0}), Error);
  }
}

TEST_CASE("escape radius") {
  SECTION("no shear term means zero radius") {
    auto flat = testutil::fig_linear();
    REQUIRE(escape_radius(flat, 1.3) == 0.0);
  }
  SECTION("closed form for the linear model with slopes (0,1)") {
    auto m = testutil::fig_linear_with_roof();
    double r = escape_radius(m, 1.01);
    REQUIRE(r == Approx(1.01 / (1.0 / 0.44 - 1.01)).epsilon(1e-12));
    REQUIRE(r == Approx(0.7997).margin(5e-4));
  }
  SECTION("homogeneous model with constant slope") {
    auto m = make_linear_from(0.5, 1.0);
    set_roof_linear_slopes(m, {0.7, 0.7});
    double kappa = 1.5;
    REQUIRE(escape_radius(m, kappa) == Approx(kappa * 0.7 / (4.0 - kappa)).epsilon(1e-9));
    REQUIRE_THROWS_AS(escape_radius(m, 0.9), Error);
    REQUIRE_THROWS_AS(escape_radius(m, 4.5), Error);
  }
}

TEST_CASE("stable-leaf functions") {
  auto m = testutil::fig_linear_with_roof();
  SECTION("all-first-letter word stays where the slope vanishes") {
    Word w{extend_word(m, {0}, 21), WordKind::open};
    auto leaf = zeta_leaf(m, w, 20);
    for (double x : linspace(0.05, 0.49, 9)) REQUIRE(leaf.value(x) == Approx(0.0).margin(1e-15));
  }
  SECTION("all-second-letter word gives the geometric series -1/(e^{J2}-1)") {
    Word w{extend_word(m, {1}, 61), WordKind::open};
    auto leaf = zeta_leaf(m, w, 60);
    for (double x : linspace(0.55, 0.75, 5))
      REQUIRE(leaf.value(x) == Approx(-0.25).epsilon(1e-12));
  }
  SECTION("zero roof kills every term") {
    auto flat = testutil::fig_linear();
    Word w{extend_word(flat, {1, 0}, 13), WordKind::open};
    auto leaf = zeta_leaf(flat, w, 12);
    REQUIRE(leaf.value(0.6) == 0.0);
  }
  SECTION("tail certification: doubling the order moves values less than the bound") {
    auto g = make_gauss(2);
    set_roof_minus_jacobian(g, true);
    Word w{extend_word(g, {0, 1}, 41), WordKind::open};
    auto lo = zeta_leaf(g, w, 10);
    auto hi = zeta_leaf(g, w, 20);
    for (double x : linspace(g.intervals[0].lo, g.intervals[0].hi, 7)) {
      REQUIRE(std::abs(lo.value(x) - hi.value(x)) <= lo.tail_bound);
    }
    REQUIRE(hi.tail_bound < lo.tail_bound);
  }
}

TEST_CASE("symbolic coding of the base trapped set") {
  auto m = testutil::fig_linear();
  SECTION("all-first-letter past converges to the branch fixed point") {
    auto [x, width] = code_point(m, std::vector<int>(41, 0));
    REQUIRE(x == Approx(0.05 / 0.56).epsilon(1e-13));
    REQUIRE(width < 1e-14);
  }
  SECTION("depth zero returns the raw interval") {
    auto [x, width] = code_point(m, {1});
    REQUIRE(x == Approx(0.65));
    REQUIRE(width == Approx(0.20));
  }
  SECTION("one refinement lands in the branch image") {
    auto [x, width] = code_point(m, {0, 1});
    REQUIRE(x >= 0.56);
    REQUIRE(x <= 0.648);
    REQUIRE(width == Approx(0.2 * 0.44).epsilon(1e-12));
  }
}

TEST_CASE("leaves commute with the canonical map") {
  // The canonical map sends (x, zeta_w(x)) to (phi(x), zeta_{L(w)}(phi(x)));
  // with truncations this holds exactly when the shifted leaf drops one order.
  auto check = [](const IfsModel& m, std::vector<int> letters, int order) {
    Word w{letters, WordKind::open};
    auto leaf = zeta_leaf(m, w, order);
    Word lw{std::vector<int>(letters.begin() + 1, letters.end()), WordKind::open};
    auto shifted = zeta_leaf(m, lw, order - 1);
    const Interval& I = m.intervals[static_cast<std::size_t>(letters.front())];
    for (double x : linspace(I.lo, I.hi, 7)) {
      auto img = canonical_map(m, letters[0], letters[1], {x, leaf.value(x)});
      REQUIRE(img.xi == Approx(shifted.value(img.x)).margin(1e-12));
    }
  };
  auto lin = testutil::fig_linear_with_roof();
  check(lin, extend_word(lin, {0, 1, 1, 0}, 30), 28);
  auto g = make_gauss(3);
  set_roof_minus_jacobian(g, true);
  check(g, extend_word(g, {2, 0, 1}, 30), 28);
}

TEST_CASE("trapped set confinement below the escape radius") {
  auto m = testutil::fig_linear_with_roof();
  double r = escape_radius(m, 1.01);
  for (const Word& w : enumerate_words(m, 6, WordKind::open)) {
    auto leaf = zeta_leaf(m, w, 6);
    const Interval& I = m.intervals[static_cast<std::size_t>(w.letters.front())];
    for (double x : linspace(I.lo, I.hi, 5)) {
      REQUIRE(std::abs(leaf.value(x)) <= r + leaf.tail_bound);
    }
  }
}

TEST_CASE("minimal captivity certification") {
  SECTION("linear model with slopes (0,1) passes") {
    auto m = testutil::fig_linear_with_roof();
    auto rep = captivity_check(m, 0.05);
    INFO("min gap " << rep.min_branch_gap);
    REQUIRE(rep.passed);
    REQUIRE(rep.min_branch_gap > 0.1);
  }
  SECTION("zero roof fails: both images stay on the collapsed leaf") {
    auto m = testutil::fig_linear();
    auto rep = captivity_check(m, 0.05);
    REQUIRE_FALSE(rep.passed);
    REQUIRE(rep.min_branch_gap == Approx(0.0).margin(1e-12));
    REQUIRE_FALSE(rep.witnesses.empty());
  }
  SECTION("Gauss N=3 with roof -J passes") {
    auto g = make_gauss(3);
    set_roof_minus_jacobian(g, true);
    auto rep = captivity_check(g, 0.05, 5, 8, 48);
    INFO("min gap " << rep.min_branch_gap);
    REQUIRE(rep.passed);
  }
}

TEST_CASE("orbit separation distances") {
  auto m = testutil::fig_linear_with_roof();
  SECTION("prefix disagreement bounds the coded-point distance") {
    Word wa{extend_word(m, {0, 0, 0}, 30), WordKind::open};
    Word wb{extend_word(m, {1, 0, 0}, 30), WordKind::open};
    auto r = separation_distances(m, wa, wb, 2);
    REQUIRE(r.n1 == 0);
    REQUIRE(r.n2 == 2);
    REQUIRE(r.ratio_x >= 0.06);
  }
  SECTION("identical words are rejected") {
    Word wa{extend_word(m, {0, 1, 0}, 30), WordKind::open};
    REQUIRE_THROWS_AS(separation_distances(m, wa, wa, 2), Error);
  }
  SECTION("far-past disagreement keeps leaves apart") {
    // words equal on 0..3, differing at position 4
    std::vector<int> base{0, 1, 0, 1};
    std::vector<int> la = base, lb = base;
    la.push_back(0);
    lb.push_back(1);
    Word wa{extend_word(m, la, 40), WordKind::open};
    Word wb{extend_word(m, lb, 40), WordKind::open};
    auto r = separation_distances(m, wa, wb, 4);
    REQUIRE(r.n1 == 4);
    REQUIRE(r.dzeta > 0.0);
    REQUIRE(r.ratio_zeta > 0.01);
  }
}
