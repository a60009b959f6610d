#pragma once

#include "abfield/field_config.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace abfield::testing {

inline constexpr double kPi = std::numbers::pi;

/// Star-shaped random polygon around `center`, radii in [rmin, rmax].
inline PathSpec random_loop(std::mt19937_64& rng, const Vec2& center, double rmin, double rmax, int n,
                            int turns = 1) {
  std::uniform_real_distribution<double> radius(rmin, rmax);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  PathSpec p;
  p.closed = true;
  const int total = n * std::abs(turns);
  const double dir = turns < 0 ? -1.0 : 1.0;
  for (int k = 0; k < total; ++k) {
    const double ang = dir * 2.0 * kPi * (k + 0.5 + jitter(rng)) / n;
    const double r = radius(rng);
    p.vertices.push_back(center + r * Vec2(std::cos(ang), std::sin(ang)));
  }
  return p;
}

}  // namespace abfield::testing

#include "abfield/kg_evolve.hpp"

namespace abfield::testing {

/// Small two-slit geometry with the solenoid inside the barrier's central
/// wall; runs in well under a second.
inline SimulationConfig small_ab_config(double flux) {
  SimulationConfig c;
  c.geometry.grid = Grid::centered(240, 160, 0.25);
  c.geometry.barrier_column = 120;
  c.geometry.barrier_thickness = 8;
  c.geometry.slits = {Slit{60, 68}, Slit{92, 100}};
  c.geometry.sponge_width = 16;
  const Vec2 axis(c.geometry.grid.position(120, 0).x() + 0.5 * 7 * 0.25, 0.0);
  c.geometry.exclusion = Disk{axis, 0.8};
  c.potential = VectorPotentialSpec::ideal_solenoid(axis, 0.5, flux);
  c.packet = WavepacketParams{Vec2(14.0, 0.0), 2.5, Vec2(2.0, 0.0)};
  c.dt = 0.05;
  c.steps = 1400;
  c.output_cadence = 200;
  return c;
}

/// Open box with a solenoid in free space next to the packet's path.
inline SimulationConfig open_solenoid_config(double flux) {
  SimulationConfig c;
  c.geometry.grid = Grid::centered(200, 120, 0.25);
  c.geometry.sponge_width = 16;
  const Vec2 axis(30.0, 0.0);
  c.geometry.exclusion = Disk{axis, 1.2};
  c.potential = VectorPotentialSpec::ideal_solenoid(axis, 0.8, flux);
  c.packet = WavepacketParams{Vec2(14.0, 2.0), 2.5, Vec2(2.0, 0.0)};
  c.dt = 0.05;
  c.steps = 600;
  c.output_cadence = 100;
  return c;
}

}  // namespace abfield::testing
