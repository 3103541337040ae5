#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <locale>
#include <string>

#include "cemwave/errors.hpp"

namespace cemwave {

/// Legacy ASCII VTK writer for one per-cell scalar on a uniform nx-by-ny grid
/// (STRUCTURED_POINTS with CELL_DATA), for external visualization.
inline void write_vtk_cell_scalar(const std::string& path, const std::string& name, int nx, int ny,
                                  double spacing, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<long>(nx) * ny)
    throw InternalError("vtk write: payload size mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.imbue(std::locale::classic());
  out.precision(12);
  out << "# vtk DataFile Version 3.0\n"
      << name << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << nx + 1 << ' ' << ny + 1 << " 1\n"
      << "ORIGIN 0 0 0\n"
      << "SPACING " << spacing << ' ' << spacing << " 1\n"
      << "CELL_DATA " << static_cast<long>(nx) * ny << "\n"
      << "SCALARS " << name << " double 1\n"
      << "LOOKUP_TABLE default\n";
  for (long i = 0; i < values.size(); ++i) out << values[i] << '\n';
  if (!out) throw IoError("write failed for " + path);
}

} // namespace cemwave
