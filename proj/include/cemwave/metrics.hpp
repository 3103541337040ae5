#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/dynamics.hpp"
#include "cemwave/errors.hpp"

namespace cemwave {

struct ErrorRow {
  double t = 0.0;
  double e_pre = 0.0;
  double e_vel = 0.0;
  bool pre_absolute = false; // reference norm vanished; value is absolute
  bool vel_absolute = false;
};

inline double a_norm(const Eigen::VectorXd& v, const FineOperators& ops) {
  return std::sqrt(std::max(0.0, v.dot(ops.A * v)));
}

inline double rho_norm(const Eigen::VectorXd& p, const FineOperators& ops) {
  return std::sqrt(std::max(0.0, p.dot(ops.M_rho.cwiseProduct(p))));
}

/// Expands reduced snapshots to fine DOFs through the basis matrices.
inline std::vector<Snapshot> expand_snapshots(const std::vector<Snapshot>& reduced,
                                              const ReducedSystem& sys) {
  std::vector<Snapshot> out;
  out.reserve(reduced.size());
  for (const Snapshot& s : reduced)
    out.push_back({s.t, s.step, sys.Psi * s.v, sys.P * s.p});
  return out;
}

/// Relative a-norm and rho-norm errors per snapshot time. A vanishing
/// reference norm flips the row to absolute and flags it.
inline std::vector<ErrorRow> error_metrics(const std::vector<Snapshot>& fine,
                                           const std::vector<Snapshot>& ms,
                                           const FineOperators& ops) {
  if (fine.size() != ms.size()) throw InternalError("error metrics: snapshot count mismatch");
  std::vector<ErrorRow> rows;
  rows.reserve(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    if (fine[k].step != ms[k].step)
      throw InternalError("error metrics: snapshots at different times");
    ErrorRow r;
    r.t = fine[k].t;
    const double vn = a_norm(fine[k].v, ops);
    const double pn = rho_norm(fine[k].p, ops);
    const double dv = a_norm(fine[k].v - ms[k].v, ops);
    const double dp = rho_norm(fine[k].p - ms[k].p, ops);
    if (vn > 0.0) {
      r.e_vel = dv / vn;
    } else {
      r.e_vel = dv;
      r.vel_absolute = true;
    }
    if (pn > 0.0) {
      r.e_pre = dp / pn;
    } else {
      r.e_pre = dp;
      r.pre_absolute = true;
    }
    rows.push_back(r);
  }
  return rows;
}

} // namespace cemwave
