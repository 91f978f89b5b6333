#include "doctest.h"

#include "cinema3d/harmonic.hpp"
#include "support.hpp"

using namespace cinema3d;
using namespace testing;

TEST_SUITE("harmonic") {

TEST_CASE("constant boundary fills with the constant") {
  const int w = 7, h = 6;
  std::vector<CellRole> roles(w * h, CellRole::fixed);
  HarmonicValues values = HarmonicValues::Constant(w * h, 2, 0.375);
  for (int y = 2; y < 5; ++y) {
    for (int x = 2; x < 5; ++x) {
      roles[y * w + x] = CellRole::free;
      values.row(y * w + x) << 9.0, -9.0;
    }
  }
  for (const HarmonicScheme scheme : {HarmonicScheme::jacobi, HarmonicScheme::gauss_seidel}) {
    for (const bool seed : {true, false}) {
      HarmonicValues v = values;
      const HarmonicReport report = solve_harmonic(w, h, roles, v, {5000, 1e-9, scheme, seed});
      CHECK(report.converged);
      CHECK((v == 0.375).all());
    }
  }
}

TEST_CASE("1-D strip gives a linear ramp") {
  const int w = 10;
  std::vector<CellRole> roles(w, CellRole::free);
  roles[0] = roles[w - 1] = CellRole::fixed;
  HarmonicValues values = HarmonicValues::Zero(w, 1);
  values(w - 1, 0) = 9.0;
  for (const bool seed : {true, false}) {
    HarmonicValues v = values;
    solve_harmonic(w, 1, roles, v, {20000, 1e-12, HarmonicScheme::jacobi, seed});
    for (int x = 0; x < w; ++x) CHECK(v(x, 0) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("excluded cells act as walls and unreachable cells are reported") {
  // Row: fixed 1 | free | excluded | free (isolated) | free
  const int w = 5;
  std::vector<CellRole> roles = {CellRole::fixed, CellRole::free, CellRole::excluded,
                                 CellRole::free, CellRole::free};
  HarmonicValues v = HarmonicValues::Constant(w, 1, -4.0);
  v(0, 0) = 1.0;
  const HarmonicReport report = solve_harmonic(w, 1, roles, v, {});
  CHECK(v(1, 0) == 1.0);
  CHECK(v(2, 0) == -4.0);
  CHECK(v(3, 0) == -4.0);
  CHECK(v(4, 0) == -4.0);
  REQUIRE(report.unreachable.size() == 2);
  CHECK(report.unreachable[0] == 3);
  CHECK(report.unreachable[1] == 4);
}

TEST_CASE("maximum principle and scheme agreement on random problems") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = uniform_int(rng, 2, 14), h = uniform_int(rng, 2, 14);
    std::vector<CellRole> roles(std::size_t(w * h));
    HarmonicValues values = HarmonicValues::Zero(w * h, 1);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < w * h; ++i) {
      const double r = uniform(rng, 0, 1);
      roles[i] = r < 0.2 ? CellRole::fixed : (r < 0.3 ? CellRole::excluded : CellRole::free);
      if (roles[i] == CellRole::fixed) {
        values(i, 0) = uniform(rng, -5, 5);
        lo = std::min(lo, values(i, 0));
        hi = std::max(hi, values(i, 0));
      }
    }
    HarmonicValues jacobi = values, gauss = values;
    const auto a = solve_harmonic(w, h, roles, jacobi, {20000, 1e-10, HarmonicScheme::jacobi});
    solve_harmonic(w, h, roles, gauss, {20000, 1e-10, HarmonicScheme::gauss_seidel});
    std::vector<bool> unreachable(std::size_t(w * h), false);
    for (auto i : a.unreachable) unreachable[i] = true;
    for (int i = 0; i < w * h; ++i) {
      if (roles[i] != CellRole::free || unreachable[i]) continue;
      CHECK(jacobi(i, 0) >= lo);
      CHECK(jacobi(i, 0) <= hi);
      CHECK(jacobi(i, 0) == doctest::Approx(gauss(i, 0)).epsilon(1e-6));
    }
  }
}

}  // TEST_SUITE
