#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "cemwave/errors.hpp"

namespace cemwave {

/// Raster of per-cell values on an nx-by-ny grid, row-major with the y=0 row
/// first. Serialized with a one-line header
///   CEMFIELD 1 <text|binary> <nx> <ny> <kind>
/// followed by whitespace-separated values (text) or little-endian float64
/// (binary).
struct FieldData {
  int nx = 0, ny = 0;
  std::string kind; // free-form token: kappa, rho, pressure, ...
  Eigen::VectorXd values;
};

inline void write_field(const std::string& path, const FieldData& f, bool binary = false) {
  if (f.values.size() != static_cast<long>(f.nx) * f.ny)
    throw InternalError("field write: payload size mismatch");
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "CEMFIELD 1 " << (binary ? "binary" : "text") << ' ' << f.nx << ' ' << f.ny << ' '
      << (f.kind.empty() ? "generic" : f.kind) << '\n';
  if (binary) {
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(sizeof(double)) * f.values.size());
  } else {
    out.precision(17);
    for (int iy = 0; iy < f.ny; ++iy) {
      for (int ix = 0; ix < f.nx; ++ix) {
        out << f.values[static_cast<long>(iy) * f.nx + ix];
        out << (ix + 1 == f.nx ? '\n' : ' ');
      }
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

inline FieldData read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, mode;
  int version = 0;
  FieldData f;
  if (!(hs >> magic >> version >> mode >> f.nx >> f.ny >> f.kind) || magic != "CEMFIELD")
    throw IoError(path + ": malformed field header '" + header + "'");
  if (version != 1) throw IoError(path + ": unsupported field version");
  if (f.nx <= 0 || f.ny <= 0) throw IoError(path + ": nonpositive raster size");
  const long count = static_cast<long>(f.nx) * f.ny;
  f.values.resize(count);
  if (mode == "binary") {
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * count);
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double)) * count)
      throw IoError(path + ": short binary payload");
  } else if (mode == "text") {
    for (long i = 0; i < count; ++i)
      if (!(in >> f.values[i])) throw IoError(path + ": short text payload at value " + std::to_string(i));
  } else {
    throw IoError(path + ": unknown field mode '" + mode + "'");
  }
  return f;
}

/// Nearest-cell resampling onto an n-by-n target: each target cell takes the
/// value of the source cell containing its center.
inline Eigen::VectorXd resample_nearest(const FieldData& src, int n) {
  Eigen::VectorXd out(static_cast<long>(n) * n);
  for (int iy = 0; iy < n; ++iy) {
    const double y = (iy + 0.5) / n;
    const int sy = std::min(static_cast<int>(y * src.ny), src.ny - 1);
    for (int ix = 0; ix < n; ++ix) {
      const double x = (ix + 0.5) / n;
      const int sx = std::min(static_cast<int>(x * src.nx), src.nx - 1);
      out[static_cast<long>(iy) * n + ix] = src.values[static_cast<long>(sy) * src.nx + sx];
    }
  }
  return out;
}

} // namespace cemwave
