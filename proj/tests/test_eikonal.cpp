#include "doctest.h"
#include "test_support.hpp"

#include "abfield/error.hpp"
#include "abfield/eikonal.hpp"

using namespace abfield;
using abfield::testing::kPi;

TEST_CASE("path phase examples") {
  const auto zero_flux = VectorPotentialSpec::ideal_solenoid(Vec2::Zero(), 1.0, 0.0);
  CHECK(path_phase(zero_flux, PathSpec{{Vec2(-5, 1), Vec2(0, 4), Vec2(5, -2)}, false}, 1.0).phase == 0.0);

  const auto s = VectorPotentialSpec::ideal_solenoid(Vec2::Zero(), 1.0, 2 * kPi);
  const EikonalResult loop = path_phase(s, PathSpec::polygon_circle(Vec2::Zero(), 2.0, 40), 1.0);
  CHECK(std::abs(loop.phase + 2 * kPi) < 1e-8);
  CHECK(loop.closed);
  CHECK(std::abs(loop.phase_mod_2pi) < 1e-8);
  double sum = 0;
  for (double v : loop.segments) sum += v;
  CHECK(sum == loop.phase);
  CHECK(loop.segments.size() == 40);
}

TEST_CASE("slit paths give e * flux, independent of deformation") {
  const auto s = VectorPotentialSpec::ideal_solenoid(Vec2(10, 0), 1.0, 1.0);
  const Vec2 src(0, 0), screen(30, 0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> wob(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    PathSpec upper{{src, Vec2(5, 4 + wob(rng)), Vec2(10, 5 + wob(rng)), Vec2(18, 3 + wob(rng)), screen}, false};
    PathSpec lower{{src, Vec2(4, -4 + wob(rng)), Vec2(10, -5 + wob(rng)), Vec2(20, -3 + wob(rng)), screen}, false};
    CHECK(std::abs(fringe_shift(s, upper, lower, 1.0) - 1.0) < 1e-8);
    // Same pair under a gauge shift: the difference is unchanged.
    const auto shifted = VectorPotentialSpec::gauge_shifted(s, GaugeFunction::sinusoid(1.3, Vec2(0.2, 0.5), k));
    CHECK(std::abs(fringe_shift(shifted, upper, lower, 1.0) - 1.0) < 1e-8);
  }
  CHECK_THROWS_AS(fringe_shift(s, PathSpec{{src, screen}, false}, PathSpec{{src, Vec2(1, 1)}, false}, 1.0),
                  GeometryError);
}

TEST_CASE("path phase is linear in flux and coupling") {
  const PathSpec path{{Vec2(-3, -1), Vec2(0, 3), Vec2(4, 1)}, false};
  const double base = path_phase(VectorPotentialSpec::ideal_solenoid(Vec2(0.2, 0), 0.5, 1.0), path, 1.0).phase;
  CHECK(path_phase(VectorPotentialSpec::ideal_solenoid(Vec2(0.2, 0), 0.5, 3.0), path, 1.0).phase ==
        doctest::Approx(3 * base).epsilon(1e-12));
  CHECK(path_phase(VectorPotentialSpec::ideal_solenoid(Vec2(0.2, 0), 0.5, 1.0), path, -2.5).phase ==
        doctest::Approx(-2.5 * base).epsilon(1e-12));
}

TEST_CASE("loop phase invariant under winding-preserving deformation") {
  const auto s = VectorPotentialSpec::ideal_solenoid(Vec2(1, 1), 0.7, 2.3);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const PathSpec loop = abfield::testing::random_loop(rng, Vec2(1, 1), 1.0, 4.0, 12, 2);
    CHECK(std::abs(path_phase(s, loop, 1.0).phase + 2 * 2.3) < 1e-8);
  }
}

TEST_CASE("eikonal residual") {
  RealDressedPair pair;
  pair.grid = Grid::centered(4, 3, 1.0);
  pair.phi = RealArray::Ones(4, 3);
  pair.abar_x = RealArray::Zero(4, 3);
  pair.abar_y = RealArray::Zero(4, 3);
  pair.abar_t = RealArray::Zero(4, 3);
  pair.defined = MaskArray::Constant(4, 3, true);
  pair.defined(2, 1) = false;
  const RealArray r = eikonal_residual(pair, 1.0, 1.7);
  for (int k = 0; k < 12; ++k)
    if (k != 2 + 4) CHECK(r(k) == doctest::Approx(-1.7 * 1.7));
  CHECK(std::isnan(r(2, 1)));

  // e -> 2e with Abar -> Abar/2.
  pair.abar_x.setConstant(0.3);
  pair.abar_y.setConstant(-0.8);
  pair.abar_t.setConstant(1.9);
  pair.has_time_component = true;
  const RealArray r1 = eikonal_residual(pair, 1.0, 1.2);
  RealDressedPair half = pair;
  half.abar_x /= 2;
  half.abar_y /= 2;
  half.abar_t /= 2;
  const RealArray r2 = eikonal_residual(half, 2.0, 1.2);
  CHECK(r1(0, 0) == doctest::Approx(1.9 * 1.9 - 0.09 - 0.64 - 1.44));
  CHECK(std::abs(r1(0, 0) - r2(0, 0)) < 1e-14);
  // Without a time component the spatial part alone enters.
  pair.has_time_component = false;
  CHECK(eikonal_residual(pair, 1.0, 1.2)(0, 0) == doctest::Approx(-0.09 - 0.64 - 1.44));
}

TEST_CASE("refractive shift") {
  const RefractiveShift same = refractive_shift({3.0, 0.4, 0.4, 5.0}, 1.0);
  CHECK(same.delta_n == 0.0);
  CHECK(same.delta_theta == 0.0);

  const RefractiveModel m{10.0, 0.0, 0.5, 4.0};
  const RefractiveShift rs = refractive_shift(m, 1.0);
  CHECK(rs.delta_n == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(rs.delta_theta == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rs.delta_theta == doctest::Approx(1.0 * 4.0 * 0.5).epsilon(1e-14));
  CHECK(std::abs(refractive_shift_from_paths(m, 1.0) - rs.delta_theta) < 1e-12);

  CHECK_THROWS_WITH_AS(refractive_shift({0.0, 0.0, 1.0, 1.0}, 1.0), "eikonal model undefined at zero momentum",
                       GeometryError);
  CHECK_THROWS_AS(refractive_shift({1.0, 0.0, 1.0, -1.0}, 1.0), GeometryError);
}
