#include "junction/expr.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using junction::ExprDomainError;
using junction::ExprError;
using junction::ExprFn;

TEST_CASE("parse and evaluate basics") {
  auto f = ExprFn::parse("2*x + sin(t)", {"x", "t"});
  CHECK(f.eval({1.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-15));

  auto g = ExprFn::parse("exp(-x^2)", {"x"});
  CHECK(g.eval({0.0}) == doctest::Approx(1.0).epsilon(1e-15));

  auto h = ExprFn::parse("x^3", {"x"});
  CHECK(h.eval({2.0}) == doctest::Approx(8.0).epsilon(1e-15));

  auto s = ExprFn::parse("sqrt(1+z^2)", {"z"});
  CHECK(s.eval({0.75}) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("syntax errors carry positions") {
  CHECK_THROWS_AS(ExprFn::parse("x*", {"x"}), ExprError);
  try {
    ExprFn::parse("x*", {"x"});
  } catch (const ExprError& e) {
    CHECK(e.offset() == 2);
  }
  CHECK_THROWS_AS(ExprFn::parse("x + y", {"x"}), ExprError);
  CHECK_THROWS_AS(ExprFn::parse("sin(x, y)", {"x", "y"}), ExprError);
  CHECK_THROWS_AS(ExprFn::parse("foo(x)", {"x"}), ExprError);
}

TEST_CASE("domain errors are reported") {
  auto f = ExprFn::parse("1/x", {"x"});
  CHECK_THROWS_AS(f.eval({0.0}), ExprDomainError);
  auto g = ExprFn::parse("log(x)", {"x"});
  CHECK_THROWS_AS(g.eval({-1.0}), ExprDomainError);
  auto s = ExprFn::parse("sqrt(x)", {"x"});
  CHECK_THROWS_AS(s.eval({-1.0}), ExprDomainError);
}

TEST_CASE("missing binding count rejected") {
  auto f = ExprFn::parse("x + t", {"x", "t"});
  std::vector<double> one{1.0};
  CHECK_THROWS(f.eval(std::span<const double>(one)));
}

TEST_CASE("symbolic derivatives match simple closed forms") {
  auto f = ExprFn::parse("x^2", {"x"});
  CHECK(f.derivative("x").eval({3.0}) == doctest::Approx(6.0).epsilon(1e-15));

  auto g = ExprFn::parse("sin(t)", {"t"});
  CHECK(g.derivative("t").eval({0.0}) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS(f.derivative("x", 5));
}

TEST_CASE("second derivative agrees with central differences") {
  auto f = ExprFn::parse("exp(-x^2)", {"x"});
  auto fxx = f.derivative("x", 2);
  double x = 0.5, hstep = 1e-4;
  double fd = (f.eval({x + hstep}) - 2.0 * f.eval({x}) + f.eval({x - hstep})) / (hstep * hstep);
  CHECK(fxx.eval({x}) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("first derivative matches central differences on smooth samples") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto f = ExprFn::parse("sin(2*x)*exp(x*t) + t^2/(2+x)", {"x", "t"});
  auto fx = f.derivative("x");
  for (int i = 0; i < 20; ++i) {
    double x = uni(rng), t = uni(rng), h = 1e-5;
    double fd = (f.eval({x + h, t}) - f.eval({x - h, t})) / (2.0 * h);
    CHECK(fx.eval({x, t}) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("derivative is linear") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(0.1, 1.5);
  auto f = ExprFn::parse("sin(x)*x^2", {"x"});
  auto g = ExprFn::parse("exp(-x)*cos(3*x)", {"x"});
  double a = 2.25, b = -0.75;
  auto combo = ExprFn::parse("2.25*(sin(x)*x^2) + (-0.75)*(exp(-x)*cos(3*x))", {"x"});
  auto dc = combo.derivative("x");
  auto df = f.derivative("x");
  auto dg = g.derivative("x");
  for (int i = 0; i < 30; ++i) {
    double x = uni(rng);
    CHECK(dc.eval({x}) ==
          doctest::Approx(a * df.eval({x}) + b * dg.eval({x})).epsilon(1e-12));
  }
}

TEST_CASE("print round-trips through parse") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(0.2, 1.8);
  auto f = ExprFn::parse("(x + 2*t)^3 / sqrt(1 + x^2) - sin(t)*sstep(x,0.2,0.8)", {"x", "t"});
  auto f2 = ExprFn::parse(f.print(), {"x", "t"});
  for (int i = 0; i < 30; ++i) {
    double x = uni(rng), t = uni(rng);
    CHECK(f.eval({x, t}) == f2.eval({x, t}));
  }
  auto d = f.derivative("x");
  auto d2 = ExprFn::parse(d.print(), {"x", "t"});
  for (int i = 0; i < 30; ++i) {
    double x = uni(rng), t = uni(rng);
    CHECK(d.eval({x, t}) == d2.eval({x, t}));
  }
}

TEST_CASE("derivative of derivative equals order-2 derivative") {
  auto f = ExprFn::parse("exp(-x^2)*sin(3*x)", {"x"});
  auto d11 = f.derivative("x").derivative("x");
  auto d2 = f.derivative("x", 2);
  for (double x : {-0.8, -0.1, 0.3, 0.9}) {
    CHECK(d11.eval({x}) == doctest::Approx(d2.eval({x})).epsilon(1e-14));
  }
}

TEST_CASE("sstep is a C2 ramp with exact flats") {
  auto s = ExprFn::parse("sstep(x,0.2,0.8)", {"x"});
  CHECK(s.eval({0.0}) == 0.0);
  CHECK(s.eval({0.2}) == 0.0);
  CHECK(s.eval({0.8}) == 1.0);
  CHECK(s.eval({1.5}) == 1.0);
  CHECK(s.eval({0.5}) == doctest::Approx(0.5).epsilon(1e-15));
  auto s1 = s.derivative("x");
  CHECK(s1.eval({0.1}) == 0.0);
  CHECK(s1.eval({0.9}) == 0.0);
  double h = 1e-5;
  double fd = (s.eval({0.5 + h}) - s.eval({0.5 - h})) / (2 * h);
  CHECK(s1.eval({0.5}) == doctest::Approx(fd).epsilon(1e-8));
  CHECK_THROWS_AS(ExprFn::parse("sstep(x, x, 1)", {"x"}), ExprError);
}

TEST_CASE("vars preserved by derivative") {
  auto f = ExprFn::parse("x*t", {"x", "t"});
  auto d = f.derivative("t");
  CHECK(d.vars() == f.vars());
}

TEST_CASE("constants pi and e") {
  auto f = ExprFn::parse("cos(pi)", {});
  CHECK(f.eval({}) == doctest::Approx(-1.0).epsilon(1e-15));
  auto g = ExprFn::parse("log(e)", {});
  CHECK(g.eval({}) == doctest::Approx(1.0).epsilon(1e-15));
}
