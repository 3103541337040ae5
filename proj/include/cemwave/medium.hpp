#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/errors.hpp"
#include "cemwave/field_file.hpp"
#include "cemwave/grid.hpp"

namespace cemwave {

namespace detail {

// splitmix-style generator; kept self-contained so seeded fields are stable
// across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ull) {}
  double uniform(double lo, double hi) {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) / 9007199254740992.0;
    return lo + u * (hi - lo);
  }

private:
  std::uint64_t state_;
};

} // namespace detail

/// Seeded high-contrast inclusion pattern: background 1, a few channels and
/// random rectangular blobs at permeability 1/contrast (so kappa_max stays 1
/// and the wave speed is bounded by 1, while kappa_max/kappa_min = contrast).
/// Shapes are drawn in the continuum and rasterized at cell centers, so one
/// seed describes the same medium at every resolution.
struct GeneratorSpec {
  std::uint64_t seed = 7;
  double contrast = 1e4;
  int channels = 3;
  int inclusions = 12;
};

inline Eigen::VectorXd generate_kappa(const GridHierarchy& g, const GeneratorSpec& spec) {
  if (!(spec.contrast > 0.0)) throw ConfigError("medium generator: contrast must be positive");
  struct Box {
    double x0, x1, y0, y1;
  };
  std::vector<Box> boxes;
  detail::Rng rng(spec.seed);
  for (int k = 0; k < spec.channels; ++k) {
    const double pos = rng.uniform(0.1, 0.9);
    const double half = 0.5 * rng.uniform(0.02, 0.045);
    const double a = rng.uniform(0.0, 0.2), b = rng.uniform(0.8, 1.0);
    if (k % 2 == 0)
      boxes.push_back({a, b, pos - half, pos + half});
    else
      boxes.push_back({pos - half, pos + half, a, b});
  }
  for (int k = 0; k < spec.inclusions; ++k) {
    const double cx = rng.uniform(0.05, 0.95), cy = rng.uniform(0.05, 0.95);
    const double hx = rng.uniform(0.01, 0.05), hy = rng.uniform(0.01, 0.05);
    boxes.push_back({cx - hx, cx + hx, cy - hy, cy + hy});
  }
  Eigen::VectorXd kappa = Eigen::VectorXd::Ones(g.n_cells());
  const double inclusion = 1.0 / spec.contrast;
  for (int c = 0; c < g.n_cells(); ++c) {
    const double x = g.cell_cx(c), y = g.cell_cy(c);
    for (const Box& b : boxes)
      if (x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1) {
        kappa[c] = inclusion;
        break;
      }
  }
  return kappa;
}

/// Loads a permeability raster from a field file onto the fine grid,
/// resampling by nearest cell when resolutions differ.
inline Eigen::VectorXd load_kappa_file(const std::string& path, const GridHierarchy& g) {
  const FieldData f = read_field(path);
  for (long i = 0; i < f.values.size(); ++i)
    if (!(f.values[i] > 0.0))
      throw IoError(path + ": nonpositive permeability at cell " + std::to_string(i));
  return resample_nearest(f, g.n_fine());
}

} // namespace cemwave
