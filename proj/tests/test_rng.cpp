#include <doctest.h>

#include <cmath>
#include <vector>

#include "mkv/rng.hpp"

using namespace mkv;

TEST_SUITE("rng") {

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST_CASE("philox4x32-10 known answers") {
  const Philox zero(0);
  CHECK(zero({0, 0, 0, 0}) == Philox::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  const Philox ones(0xffffffffffffffffULL);
  CHECK(ones({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
        Philox::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  const Philox pi(0x299f31d0a4093822ULL);
  CHECK(pi({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
        Philox::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are pure functions of their address") {
  const CounterRng a(42), b(42);
  std::vector<double> x(7), y(7);
  a.normals(Stream::Noise, 3, 9, x);
  b.normals(Stream::Noise, 3, 9, y);
  CHECK(x == y);
  b.normals(Stream::Noise, 3, 10, y);
  CHECK(x != y);
  b.normals(Stream::Init, 3, 9, y);
  CHECK(x != y);
}

TEST_CASE("uniforms stay in the open unit interval") {
  const CounterRng r(1);
  std::vector<double> u(4096);
  r.uniforms(Stream::Test, 0, 0, u);
  for (double v : u) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("normal moments") {
  const CounterRng r(7);
  const std::size_t n = 200000;
  std::vector<double> z(n);
  r.normals(Stream::Test, 0, 0, z);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : z) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("derived seeds differ by tag") {
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

}
