#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "isnet/subband.hpp"

using namespace isnet;

namespace {
Tensor<double> random_mag(std::size_t F, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> m({F, T});
  rng.fill_uniform(m, 0.0, 2.0);
  return m;
}
}  // namespace

TEST_CASE("magnitude is the complex modulus") {
  Spectrogram spec(2, 2, 2, 1);
  spec.at(0, 0) = {3.0, 4.0};
  spec.at(1, 1) = {0.0, -2.0};
  Tensor<double> mag = magnitude<double>(spec);
  REQUIRE(mag.at(0, 0) == 5.0);
  REQUIRE(mag.at(1, 1) == 2.0);
  REQUIRE(mag.at(0, 1) == 0.0);

  // invariant under per-entry phase rotation
  Spectrogram rot = spec;
  for (auto& z : rot.data) z *= std::polar(1.0, 1.234);
  Tensor<double> mag2 = magnitude<double>(rot);
  for (std::size_t i = 0; i < mag.size(); ++i)
    REQUIRE(mag2.v[i] == Catch::Approx(mag.v[i]).margin(1e-12));
}

TEST_CASE("circular unfold wraps at both spectrum edges") {
  // F=4, n=1: unit 0 = (X3, X0, X1), unit 3 = (X2, X3, X0)
  Tensor<double> mag({4, 2}, {0, 1, 10, 11, 20, 21, 30, 31});
  Tensor<double> units = unfold(mag, 1, BoundaryMode::circular);
  REQUIRE(units.shape == std::vector<std::size_t>{4, 3, 2});
  REQUIRE(units.at(0, 0, 0) == 30.0);  // X3
  REQUIRE(units.at(0, 1, 0) == 0.0);   // X0
  REQUIRE(units.at(0, 2, 0) == 10.0);  // X1
  REQUIRE(units.at(3, 0, 1) == 21.0);  // X2
  REQUIRE(units.at(3, 1, 1) == 31.0);  // X3
  REQUIRE(units.at(3, 2, 1) == 1.0);   // X0
}

TEST_CASE("full-scale unfold yields 257 units of width 31") {
  Tensor<double> mag = random_mag(257, 3, 1);
  Tensor<double> units = unfold(mag, 15);
  REQUIRE(units.shape == std::vector<std::size_t>{257, 31, 3});
}

TEST_CASE("center row of every unit equals the magnitude row exactly") {
  Tensor<double> mag = random_mag(9, 4, 2);
  for (auto mode : {BoundaryMode::circular, BoundaryMode::reflect}) {
    Tensor<double> units = unfold(mag, 2, mode);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t t = 0; t < 4; ++t) REQUIRE(units.at(i, 2, t) == mag.at(i, t));
  }
}

TEST_CASE("every unit row is copied verbatim from some magnitude row") {
  // poison-style check: any out-of-range read would fabricate a row that is
  // not in this set
  Tensor<double> mag = random_mag(11, 5, 3);
  std::set<std::vector<double>> rows;
  for (std::size_t f = 0; f < 11; ++f)
    rows.insert(std::vector<double>(&mag.at(f, 0), &mag.at(f, 0) + 5));
  for (auto mode : {BoundaryMode::circular, BoundaryMode::reflect}) {
    Tensor<double> units = unfold(mag, 4, mode);
    for (std::size_t i = 0; i < 11; ++i)
      for (std::size_t k = 0; k < 9; ++k) {
        std::vector<double> row(&units.at(i, k, 0), &units.at(i, k, 0) + 5);
        REQUIRE(rows.count(row) == 1);
      }
  }
}

TEST_CASE("circular unfold commutes with circular rotation of the unit axis") {
  const std::size_t F = 8, T = 3, n = 2;
  Tensor<double> mag = random_mag(F, T, 4);
  Tensor<double> units = unfold(mag, n, BoundaryMode::circular);
  for (std::size_t k = 1; k < F; ++k) {
    Tensor<double> rotated({F, T});
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < T; ++t) rotated.at(f, t) = mag.at((f + k) % F, t);
    Tensor<double> rot_units = unfold(rotated, n, BoundaryMode::circular);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t j = 0; j < (2 * n + 1) * T; ++j)
        REQUIRE(rot_units.v[f * (2 * n + 1) * T + j] ==
                units.v[((f + k) % F) * (2 * n + 1) * T + j]);
  }
}

TEST_CASE("reflect mode mirrors without repeating the edge row") {
  // F=5, n=2: unit 0 = (X2, X1, X0, X1, X2)
  Tensor<double> mag({5, 1}, {0, 10, 20, 30, 40});
  Tensor<double> units = unfold(mag, 2, BoundaryMode::reflect);
  REQUIRE(units.at(0, 0, 0) == 20.0);
  REQUIRE(units.at(0, 1, 0) == 10.0);
  REQUIRE(units.at(0, 2, 0) == 0.0);
  REQUIRE(units.at(0, 3, 0) == 10.0);
  REQUIRE(units.at(0, 4, 0) == 20.0);
  // unit 4 = (X2, X3, X4, X3, X2)
  REQUIRE(units.at(4, 0, 0) == 20.0);
  REQUIRE(units.at(4, 3, 0) == 30.0);
  REQUIRE(units.at(4, 4, 0) == 20.0);
}

TEST_CASE("collapsing units back to center rows reproduces the magnitude") {
  Tensor<double> mag = random_mag(33, 7, 5);
  Tensor<double> units = unfold(mag, 4);
  Tensor<double> rebuilt({33, 7});
  for (std::size_t i = 0; i < 33; ++i)
    for (std::size_t t = 0; t < 7; ++t) rebuilt.at(i, t) = units.at(i, 4, t);
  REQUIRE(rebuilt.v == mag.v);
}

TEST_CASE("unfold requires F > 2n") {
  Tensor<double> mag = random_mag(8, 2, 6);
  REQUIRE_THROWS_WITH(unfold(mag, 4), Catch::Matchers::ContainsSubstring("F > 2n"));
  REQUIRE_NOTHROW(unfold(mag, 3));
}

TEST_CASE("time-major unfold agrees with the contract form") {
  Tensor<double> mag = random_mag(9, 4, 7);
  Tensor<double> a = unfold(mag, 2, BoundaryMode::circular);
  Tensor<double> b = unfold_time_major(mag, 2, BoundaryMode::circular);
  for (std::size_t f = 0; f < 9; ++f)
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t t = 0; t < 4; ++t) REQUIRE(a.at(f, k, t) == b.at(f, t, k));
}

TEST_CASE("input normalization scales by the utterance mean") {
  Tensor<double> c = Tensor<double>::full({5, 4}, 3.0);
  auto [nc, st] = normalize_input(c);
  for (double v : nc.v) REQUIRE(v == Catch::Approx(1.0).margin(1e-7));
  REQUIRE(st.denom == Catch::Approx(3.0).margin(1e-7));

  Tensor<double> mag = random_mag(6, 5, 8);
  auto [n1, s1] = normalize_input(mag);
  Tensor<double> scaled(mag.shape);
  for (std::size_t i = 0; i < mag.size(); ++i) scaled.v[i] = 10.0 * mag.v[i];
  auto [n2, s2] = normalize_input(scaled);
  for (std::size_t i = 0; i < mag.size(); ++i)
    REQUIRE(n2.v[i] == Catch::Approx(n1.v[i]).margin(1e-6));

  Tensor<double> zero({3, 3});
  auto [nz, sz] = normalize_input(zero);
  for (double v : nz.v) REQUIRE(v == 0.0);
}
