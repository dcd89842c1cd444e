#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mkv/error.hpp"
#include "mkv/scenarios.hpp"
#include "support.hpp"

using namespace mkv;
using namespace testing;

TEST_SUITE("coefficients") {

TEST_CASE("ellipticity of constant matrices") {
  SampleSpec spec;
  spec.count = 16;
  SUBCASE("identity") {
    auto f = field(Dims(2, 2), zeros(), zeros(), constant({1, 0, 0, 1}));
    const auto r = check_ellipticity(f, spec);
    CHECK(r.min_sym_eigenvalue == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.ok());
  }
  SUBCASE("diagonal") {
    auto f = field(Dims(2, 2), zeros(), zeros(), constant({2, 0, 0, 3}));
    f.ellipticity_lambda = 2.0;
    const auto r = check_ellipticity(f, spec);
    CHECK(r.min_sym_eigenvalue == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.ok());
  }
  SUBCASE("non-symmetric") {
    // Symmetric part [[1, .5], [.5, 1]]: eigenvalues 1 +- 0.5.
    auto f = field(Dims(2, 2), zeros(), zeros(), constant({1, 1, 0, 1}));
    const auto r = check_ellipticity(f, spec);
    CHECK(r.min_sym_eigenvalue == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_FALSE(r.ok());
    CHECK(r.violations.size() == r.samples_checked);
    f.ellipticity_lambda = 0.5;
    CHECK(check_ellipticity(f, spec, 1e-12).ok());
  }
}

TEST_CASE("ellipticity needs a diffusion block") {
  const auto f = zero_field(Dims(2, 0));
  CHECK_THROWS_WITH_AS(check_ellipticity(f, SampleSpec{}), doctest::Contains("no diffusion block"), Error);
}

TEST_CASE("gram matrix of mean-field sigma dominates lambda squared") {
  const auto f = rough_field(2);
  SampleSpec spec;
  spec.count = 64;
  const auto r = check_ellipticity(f, spec);
  CHECK(r.min_sym_eigenvalue >= 1.0 - 1e-12);
  CHECK(r.min_gram_eigenvalue >= r.min_sym_eigenvalue * r.min_sym_eigenvalue - 1e-12);
}

TEST_CASE("linear growth") {
  SampleSpec spec;
  spec.count = 200;
  SUBCASE("zero field") { CHECK(check_linear_growth(zero_field(Dims(3, 1)), spec).max_growth_ratio == 0.0); }
  SUBCASE("b = x") {
    auto f = field(Dims(2, 1),
                   [](double, auto x, auto, std::span<double> o) { o[0] = x[0]; },
                   [](double, auto x, auto, std::span<double> o) { o[0] = x[1]; }, constant({0}));
    f.growth_c = 1.0;
    const auto r = check_linear_growth(f, spec);
    CHECK(r.max_growth_ratio <= 1.0);
    CHECK(r.ok());
  }
  SUBCASE("bounded sign drift") {
    auto f = field(Dims(1, 1), zeros(), [](double, auto x, auto, std::span<double> o) { o[0] = x[0] > 0 ? 1.0 : -1.0; },
                   constant({0}));
    CHECK(check_linear_growth(f, spec).max_growth_ratio <= 1.0);
  }
  SUBCASE("declared constants of built-in scenarios hold") {
    for (const auto& id : scenario_ids()) {
      CAPTURE(id);
      const auto f = make_scenario(id, {});
      CHECK(check_linear_growth(f, spec).ok());
    }
  }
}

TEST_CASE("mean field examples") {
  const auto b1y = field(Dims(2, 1), zeros(), [](double, auto, auto y, std::span<double> o) { o[0] = y[1]; },
                         constant({0}));
  SUBCASE("arithmetic mean") {
    const std::vector<double> cloud{0, 1, 0, 3};
    const auto v = eval_mean_field(b1y, 0.0, std::vector<double>{0, 0}, {cloud, 2});
    CHECK(v.b1[0] == 2.0);
  }
  SUBCASE("single atom") {
    const auto f = rough_field(1);
    const std::vector<double> x{0.3, -0.2}, y{1.0, 0.7};
    const auto v = eval_mean_field(f, 0.5, x, {y, 2});
    std::vector<double> b0(1), b1(1), s(1);
    f.b0(0.5, x, y, b0);
    f.b1(0.5, x, y, b1);
    f.sigma1(0.5, x, y, s);
    CHECK(v.b0[0] == b0[0]);
    CHECK(v.b1[0] == b1[0]);
    CHECK(v.sigma1[0] == s[0]);
  }
  SUBCASE("constant sigma") {
    const auto f = field(Dims(2, 2), zeros(), zeros(), constant({1.5, 0.25, -0.5, 2}));
    const auto cloud = random_cloud(3, 37, 2);
    const auto v = eval_mean_field(f, 0.0, std::vector<double>{0, 0}, {cloud, 2});
    CHECK(v.sigma1 == std::vector<double>{1.5, 0.25, -0.5, 2});
  }
  SUBCASE("empty cloud") {
    const std::vector<double> none;
    CHECK_THROWS_AS(eval_mean_field(b1y, 0.0, std::vector<double>{0, 0}, {none, 2}), Error);
  }
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 1001.0 * 1002.0 / 2.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  // Fixed tree: (((1+2)+(3+4))+5) in row order.
  std::vector<double> rows{1, 10, 2, 20, 3, 30, 4, 40, 5, 50};
  pairwise_rows_inplace(rows, 5, 2);
  CHECK(rows[0] == 15.0);
  CHECK(rows[1] == 150.0);
}

TEST_CASE("mean field is linear in the coefficient") {
  const auto f = langevin_field(1, 0.7);
  const auto g = rough_field(1);
  const auto h = combine(2.5, f, -1.25, g);
  const auto cloud = random_cloud(11, 129, 2);
  const std::vector<double> x{0.4, -1.1};
  const auto vf = eval_mean_field(f, 0.2, x, {cloud, 2});
  const auto vg = eval_mean_field(g, 0.2, x, {cloud, 2});
  const auto vh = eval_mean_field(h, 0.2, x, {cloud, 2});
  CHECK(vh.b0[0] == doctest::Approx(2.5 * vf.b0[0] - 1.25 * vg.b0[0]).epsilon(1e-13));
  CHECK(vh.b1[0] == doctest::Approx(2.5 * vf.b1[0] - 1.25 * vg.b1[0]).epsilon(1e-13));
  CHECK(vh.sigma1[0] == doctest::Approx(2.5 * vf.sigma1[0] - 1.25 * vg.sigma1[0]).epsilon(1e-13));
}

TEST_CASE("mean field is permutation invariant") {
  const auto f = langevin_field(2, 0.3);
  const std::size_t n = 200;
  const auto cloud = random_cloud(5, n, 4);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(9);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto u = rng.uniform2(Stream::Test, i, 0, 0)[0];
    std::swap(perm[i], perm[static_cast<std::size_t>(u * double(i + 1))]);
  }
  std::vector<double> shuffled(cloud.size());
  for (std::size_t i = 0; i < n; ++i) std::copy_n(cloud.begin() + perm[i] * 4, 4, shuffled.begin() + i * 4);
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  const auto a = eval_mean_field(f, 0.0, x, {cloud, 4});
  const auto b = eval_mean_field(f, 0.0, x, {shuffled, 4});
  for (std::size_t k = 0; k < 2; ++k) CHECK(a.b1[k] == doctest::Approx(b.b1[k]).epsilon(1e-14));
  // Under the declared order the result is reproducible bit for bit.
  const auto c = eval_mean_field(f, 0.0, x, {cloud, 4});
  CHECK(a.b1 == c.b1);
}

TEST_CASE("measure-free coefficients equal one pointwise evaluation") {
  const auto f = uniqueness_field(1);
  const auto cloud = random_cloud(8, 50, 2);
  const std::vector<double> x{0.5, 0.25};
  const auto v = eval_mean_field(f, 0.0, x, {cloud, 2});
  std::vector<double> b0(1), s(1);
  f.b0(0.0, x, std::vector<double>{9, 9}, b0);
  f.sigma1(0.0, x, std::vector<double>{-9, 9}, s);
  CHECK(v.b0[0] == b0[0]);
  CHECK(v.sigma1[0] == s[0]);
}

TEST_CASE("measure-free flags are honest") {
  const auto cloud = random_cloud(21, 20, 4);
  for (const auto& id : scenario_ids()) {
    CAPTURE(id);
    ScenarioParams p;
    const auto f = make_scenario(id, p);
    const std::size_t n = f.dims.state;
    const std::size_t m = cloud.size() / n;
    std::vector<double> a(n), b(n);
    const std::vector<double> x(cloud.begin(), cloud.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t j = 1; j < m; ++j) {
      const std::span<const double> y0(cloud.data(), n), y1(cloud.data() + j * n, n);
      auto same = [&](const Evaluator& e, std::size_t w) {
        std::vector<double> u(w), v(w);
        e(0.3, x, y0, u);
        e(0.3, x, y1, v);
        return u == v;
      };
      if (f.measure_free_b0) CHECK(same(f.b0, f.dims.degenerate()));
      if (f.measure_free_b1) CHECK(same(f.b1, f.dims.noise));
      if (f.measure_free_sigma) CHECK(same(f.sigma1, f.dims.sigma_size()));
    }
  }
}

TEST_CASE("scenario registry") {
  CHECK(has_scenario("langevin"));
  CHECK_FALSE(has_scenario("nope"));
  try {
    make_scenario("nope", {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  register_scenario("test_custom", [](const ScenarioParams& p) { return brownian_field(p.noise_dim); });
  CHECK(make_scenario("test_custom", {2, 0, 1}).dims == Dims(2, 2));
}

}
