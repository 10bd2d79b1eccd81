#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <sstream>

#include "certmf/objectives.hpp"

using namespace certmf;

namespace {

const SearchDomain kSym1(Box{{-1.0}, {1.0}}, Norm::sup);
const SearchDomain kSym2(Box{{-1.0, -1.0}, {1.0, 1.0}}, Norm::sup);

}  // namespace

TEST_CASE("builtin examples") {
  BuiltinParams p;
  p.constant = 0.0;
  const auto c = make_builtin("constant", p, SearchDomain::unit_cube(2));
  CHECK(c(Point{0.3, 0.9}) == 0.0);
  CHECK(c.f_max == 0.0);
  CHECK(c.lip_true == 0.0);
  CHECK(c.L_declared == 1.0);

  const auto cone = make_builtin("cone", {}, kSym2);
  CHECK(cone(Point{0.3, -0.4}) == doctest::Approx(0.6));
  CHECK(cone.f_max == 1.0);
  CHECK(cone.lip_true == 1.0);
  REQUIRE(cone.maximizer_hint.has_value());
  CHECK(*cone.maximizer_hint == Point{0.0, 0.0});

  BuiltinParams pw;
  pw.power_exponent = 2.0;
  const auto power = make_builtin("power", pw, kSym1);
  CHECK(power(Point{0.5}) == doctest::Approx(0.75));
  CHECK(power.lip_true == doctest::Approx(2.0));

  BuiltinParams pl;
  pl.plateau_radius = 0.25;
  const auto plateau = make_builtin("plateau-cone", pl, kSym1);
  CHECK(plateau(Point{0.1}) == 1.0);
  CHECK(plateau(Point{0.75}) == doctest::Approx(0.5));
}

TEST_CASE("builtin errors") {
  CHECK_THROWS_AS(make_builtin("sphere", {}, kSym1), std::invalid_argument);
  BuiltinParams pw;
  pw.power_exponent = 1.0;
  CHECK_THROWS_AS(make_builtin("power", pw, kSym1), std::invalid_argument);
  BuiltinParams low;
  low.lipschitz_bound = 0.5;
  CHECK_THROWS_AS(make_builtin("cone", low, kSym1), std::invalid_argument);
}

TEST_CASE("cone under a different |.| carries the norm equivalence constant") {
  BuiltinParams p;
  p.abs_norm = Norm::l1;
  const auto cone = make_builtin("cone", p, kSym2);
  CHECK(cone.lip_true == doctest::Approx(2.0));
  CHECK(norm_equivalence(Norm::l2, Norm::sup, 4) == doctest::Approx(2.0));
  CHECK(norm_equivalence(Norm::sup, Norm::l1, 3) == doctest::Approx(1.0));
  CHECK(check_lipschitz(cone, 3000, 2).pass);
}

TEST_CASE("check_lipschitz examples") {
  const auto c = make_builtin("constant", {}, kSym1);
  const auto rc = check_lipschitz(c, 500, 0);
  CHECK(rc.max_ratio == 0.0);
  CHECK(rc.pass);

  const auto cone = make_builtin("cone", {}, kSym1);
  const auto ok = check_lipschitz(cone, 500, 0);
  CHECK(ok.pass);
  CHECK(ok.max_ratio <= 1.0 + 1e-9);

  auto loose = cone;
  loose.L_declared = 0.5;
  CHECK_FALSE(check_lipschitz(loose, 500, 0).pass);
}

TEST_CASE("every builtin passes its own Lipschitz check") {
  for (const char* name : {"constant", "cone", "power", "plateau-cone"}) {
    for (const auto* dom : {&kSym1, &kSym2}) {
      const auto f = make_builtin(name, {}, *dom);
      auto tight = f;
      tight.L_declared = std::max(f.lip_true, 1e-300);
      CAPTURE(name);
      CHECK(check_lipschitz(tight, 4000, 7).pass);
    }
  }
}

TEST_CASE("suboptimality gap examples") {
  const auto cone = make_builtin("cone", {}, kSym1);
  CHECK(suboptimality_gap(cone, Point{0.0}) == 0.0);
  CHECK(suboptimality_gap(cone, Point{0.25}) == doctest::Approx(0.25));
  BuiltinParams pl;
  pl.plateau_radius = 0.25;
  const auto plateau = make_builtin("plateau-cone", pl, kSym1);
  CHECK(suboptimality_gap(plateau, Point{0.1}) == 0.0);
  for (double x = -0.25; x <= 0.25; x += 0.01) CHECK(suboptimality_gap(plateau, Point{x}) == 0.0);
}

TEST_CASE("gaps are nonnegative and f_max dominates sampled values") {
  for (const char* name : {"constant", "cone", "power", "plateau-cone"}) {
    const auto f = make_builtin(name, {}, kSym2);
    for (double a = -1.0; a <= 1.0; a += 0.125) {
      for (double b = -1.0; b <= 1.0; b += 0.125) {
        CHECK(suboptimality_gap(f, Point{a, b}) >= 0.0);
        CHECK(f(Point{a, b}) <= f.f_max);
      }
    }
    if (f.maximizer_hint) CHECK(f(*f.maximizer_hint) == f.f_max);
  }
}

TEST_CASE("power converges to the cone as the exponent tends to one") {
  BuiltinParams pw;
  pw.power_exponent = 1.0 + 1e-4;
  const auto power = make_builtin("power", pw, kSym1);
  const auto cone = make_builtin("cone", {}, kSym1);
  // |x|^(1+h) - |x| ~ h |x| ln|x| stays below 1e-6 near 0 and near |x| = 1;
  // in between it peaks at h/e.
  for (double x : {-1.0, -0.999, -0.995, -1e-3, -1e-4, 0.0, 1e-4, 1e-3, 0.995, 1.0}) {
    CHECK(std::abs(power(Point{x}) - cone(Point{x})) < 1e-6);
  }
  CHECK(std::abs(power(Point{1.0 / std::exp(1.0)}) - cone(Point{1.0 / std::exp(1.0)})) ==
        doctest::Approx(1e-4 / std::exp(1.0)).epsilon(1e-3));
}

TEST_CASE("tabulated objective interpolates and keeps the table constant") {
  std::istringstream csv("0,0\n0.5,1\n1,0.5\n");
  const auto t = load_tabulated(csv, Norm::sup);
  CHECK(t(Point{0.25}) == doctest::Approx(0.5));
  CHECK(t(Point{0.75}) == doctest::Approx(0.75));
  CHECK(t.f_max == 1.0);
  CHECK(t.lip_true == doctest::Approx(2.0));
  CHECK(check_lipschitz(t, 1000, 1).pass);

  std::istringstream grid2("0,0,0\n0,1,1\n1,0,2\n1,1,3\n");
  const auto t2 = load_tabulated(grid2, Norm::sup);
  CHECK(t2(Point{0.5, 0.5}) == doctest::Approx(1.5));
  CHECK(t2.lip_true == doctest::Approx(3.0));
  CHECK(check_lipschitz(t2, 2000, 3).pass);

  std::istringstream ragged("0,0\n0.5\n");
  CHECK_THROWS(load_tabulated(ragged, Norm::sup));
}

TEST_CASE("user objective estimates its maximum on a grid") {
  const auto u = make_user_objective(
      "bump", [](std::span<const double> x) { return -std::abs(x[0] - 0.3); }, SearchDomain::unit_cube(1),
      1.0, 1.0, 0.01);
  CHECK(u.f_max_approximate);
  CHECK(u.f_max == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(suboptimality_gap(u, Point{0.3}) >= 0.0);
}
