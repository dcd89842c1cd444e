#include <doctest.h>

#include <cmath>

#include "mkv/error.hpp"
#include "mkv/mollify.hpp"
#include "mkv/scenarios.hpp"
#include "support.hpp"

using namespace mkv;
using namespace testing;

TEST_SUITE("mollify") {

TEST_CASE("radial truncation") {
  std::vector<double> a{3, 4};
  radial_truncate(a, 5);
  CHECK(a == std::vector<double>{3, 4});
  std::vector<double> b{6, 8};
  radial_truncate(b, 5);
  CHECK(b[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("truncate acts blockwise and is the identity inside the cube") {
  // Records its arguments so the truncated inputs can be inspected.
  auto f = field(Dims(4, 2), [](double, auto x, auto y, std::span<double> o) {
                   o[0] = x[0] + 10 * y[2];
                   o[1] = x[1] + 10 * y[3];
                 },
                 [](double, auto x, auto y, std::span<double> o) {
                   o[0] = x[2] + y[0];
                   o[1] = x[3] + y[1];
                 },
                 zeros());
  const auto g = truncate(f, 5);
  std::vector<double> out(2);
  SUBCASE("inside") {
    const std::vector<double> x{1, 2, 3, -1}, y{0.5, 0.5, -2, 1};
    std::vector<double> ref(2);
    f.b0(0.0, x, y, ref);
    g.b0(0.0, x, y, out);
    CHECK(out == ref);
  }
  SUBCASE("velocity block (6, 8) maps to (3, 4)") {
    const std::vector<double> x{0, 0, 6, 8}, y{0, 0, 0, 0};
    g.b1(0.0, x, y, out);
    CHECK(out[0] == doctest::Approx(3.0));
    CHECK(out[1] == doctest::Approx(4.0));
  }
  SUBCASE("blocks are truncated independently") {
    const std::vector<double> x{0, 0, 0, 0}, y{0, 0, 30, 40};
    g.b0(0.0, x, y, out);
    CHECK(out[0] == doctest::Approx(30.0));
    CHECK(out[1] == doctest::Approx(40.0));
  }
}

TEST_CASE("time extension") {
  const auto f = rough_field(2);
  const auto g = extend_time(f);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4}, y{1, 1, -1, 2};
  std::vector<double> s(4), b0(2), b1(2), r(4);
  g.sigma1(-0.5, x, y, s);
  CHECK(s == std::vector<double>{1, 0, 0, 1});
  g.b0(-0.1, x, y, b0);
  g.b1(-0.1, x, y, b1);
  CHECK(b0 == std::vector<double>{0, 0});
  CHECK(b1 == std::vector<double>{0, 0});
  g.sigma1(0.3, x, y, s);
  f.sigma1(0.3, x, y, r);
  CHECK(s == r);
}

TEST_CASE("bump kernel is a probability density on the unit ball") {
  for (std::size_t dim : {1u, 3u, 5u, 9u}) {
    CAPTURE(dim);
    const BumpKernel k(dim);
    CHECK(std::abs(k.total_mass() - 1.0) <= 1e-6);
    std::vector<double> u(dim, 0.0);
    CHECK(k.density(u) > 0.0);
    u[0] = 0.999;
    CHECK(k.density(u) >= 0.0);
    u[0] = 1.0;
    CHECK(k.density(u) == 0.0);
    u[0] = 1.5;
    CHECK(k.density(u) == 0.0);
  }
}

TEST_CASE("offset table") {
  SUBCASE("pairs and radius") {
    const auto tab = make_offsets(2, {4, 64, 7});
    CHECK(tab.dim == 5);
    CHECK(tab.count == 64);
    for (std::size_t i = 0; i < 64; i += 2) {
      double r = 0.0;
      for (std::size_t k = 0; k < tab.dim; ++k) {
        CHECK(tab[i][k] == -tab[i + 1][k]);
        r += tab[i][k] * tab[i][k];
      }
      CHECK(std::sqrt(r) < 0.25);
    }
  }
  SUBCASE("odd count ends with the zero offset") {
    const auto tab = make_offsets(1, {2, 5, 1});
    for (double v : tab[4]) CHECK(v == 0.0);
  }
  SUBCASE("zero samples") { CHECK_THROWS_AS(make_offsets(1, {1, 0, 1}), Error); }
  SUBCASE("fixed seed") { CHECK(make_offsets(1, {3, 8, 99}).data == make_offsets(1, {3, 8, 99}).data); }
}

TEST_CASE("mollified constant, linear and odd fields") {
  const std::vector<double> y{0.0, 0.0};
  std::vector<double> out(1);
  SUBCASE("constant") {
    const auto f = field(Dims(2, 1), constant({2.75}), constant({-1.5}), constant({3.0}));
    const auto g = mollify(f, {3, 64, 5}).field;
    const std::vector<double> x{0.7, -0.2};
    g.b0(0.4, x, y, out);
    CHECK(out[0] == 2.75);
    g.b1(0.4, x, y, out);
    CHECK(out[0] == -1.5);
    g.sigma1(0.4, x, y, out);
    CHECK(out[0] == 3.0);
  }
  SUBCASE("linear") {
    const auto f = field(Dims(2, 1), zeros(), [](double, auto x, auto, std::span<double> o) { o[0] = x[1]; },
                         constant({1}));
    for (int n : {2, 4, 8}) {
      const auto g = mollify(f, {n, 64, 3}).field;
      for (double v : {-1.2, 0.0, 0.3, 1.4}) {
        g.b1(0.5, std::vector<double>{0.0, v}, y, out);
        CHECK(out[0] == doctest::Approx(v).epsilon(1e-13).scale(1.0));
      }
    }
  }
  SUBCASE("sign at the origin") {
    const auto f = field(Dims(2, 1), zeros(), [](double, auto x, auto, std::span<double> o) {
      o[0] = x[1] > 0 ? 1.0 : (x[1] < 0 ? -1.0 : 0.0);
    }, constant({1}));
    const auto g = mollify(f, {4, 64, 11}).field;
    g.b1(0.5, std::vector<double>{0.0, 0.0}, y, out);
    CHECK(out[0] == 0.0);
  }
}

TEST_CASE("mollification error of a Lipschitz field is at most Lip / n") {
  // |f(x) - f(x')| <= 2 |x - x'| (Lipschitz constant 2 in every argument jointly).
  const auto f = field(Dims(2, 1), zeros(),
                       [](double t, auto x, auto y, std::span<double> o) { o[0] = std::sin(t) + std::abs(x[1]) + std::cos(y[0]); },
                       constant({1}));
  const std::vector<double> x{0.2, 0.3}, y{0.1, -0.4};
  std::vector<double> ref(1), out(1);
  f.b1(0.5, x, y, ref);
  for (int n : {2, 4, 8, 16}) {
    const auto g = mollify(f, {n, 64, 17}).field;
    g.b1(0.5, x, y, out);
    CHECK(std::abs(out[0] - ref[0]) <= 2.0 / n);
  }
}

TEST_CASE("regularized rough field keeps its structural constants") {
  const auto base = rough_field(1);
  SampleSpec spec;
  spec.count = 64;
  spec.mean_field_points = 4;
  const double c_base = base.growth_c;
  for (int n : {1, 4}) {
    const auto reg = mollify(base, {n, 32, 12345});
    CHECK(check_linear_growth(reg.field, spec).max_growth_ratio <= c_base + 1.0);
    CHECK(check_ellipticity(reg.field, spec).min_sym_eigenvalue >= base.ellipticity_lambda - 1e-10);
  }
}

TEST_CASE("nested regularization is reentrant") {
  const auto base = rough_field(1);
  const auto once = mollify(base, {2, 8, 1}).field;
  const auto twice = mollify(once, {4, 8, 2}).field;
  const std::vector<double> x{0.3, -0.1}, y{0.2, 0.5};
  std::vector<double> a(1), b(1);
  twice.b1(0.3, x, y, a);
  twice.b1(0.3, x, y, b);
  CHECK(a == b);
  CHECK(std::isfinite(a[0]));
  CHECK(std::abs(a[0]) <= 0.5);
}

}
