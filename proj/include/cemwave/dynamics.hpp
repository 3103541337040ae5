#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/cem.hpp"
#include "cemwave/errors.hpp"
#include "cemwave/spectral.hpp"

namespace cemwave {

/// SPD solver with Jacobi equilibration. A rank-deficient matrix is rejected
/// unless the caller opts into the spectral pseudo-inverse (used only by the
/// full-space degeneracy checks, where the kernel never receives load).
class SpdSolver {
public:
  void compute(const SpMat& M, bool allow_semidefinite, const std::string& label) {
    scale_ = M.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    SpMat Ms = scale_.asDiagonal() * M * scale_.asDiagonal();
    Ms.makeCompressed();
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(Ms);
    bool ok = ldlt_->info() == Eigen::Success;
    if (ok) {
      const Eigen::VectorXd d = ldlt_->vectorD();
      ok = (d.array() > 1e-12 * d.maxCoeff()).all();
    }
    if (ok) {
      pseudo_ = false;
      return;
    }
    if (!allow_semidefinite)
      throw NumericalError(label + ": matrix is not positive definite (rank deficiency)");
    const Eigen::MatrixXd Ms_dense(Ms);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ms_dense);
    if (es.info() != Eigen::Success) throw NumericalError(label + ": eigendecomposition failed");
    const double cut = 1e-12 * es.eigenvalues().maxCoeff();
    pinv_vals_ = es.eigenvalues().unaryExpr([cut](double l) { return l > cut ? 1.0 / l : 0.0; });
    pinv_vecs_ = es.eigenvectors();
    pseudo_ = true;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    const Eigen::VectorXd bs = scale_.cwiseProduct(b);
    Eigen::VectorXd xs;
    if (pseudo_)
      xs = pinv_vecs_ * pinv_vals_.cwiseProduct(pinv_vecs_.transpose() * bs);
    else
      xs = ldlt_->solve(bs);
    return scale_.cwiseProduct(xs);
  }

  bool pseudo_inverse() const { return pseudo_; }

private:
  Eigen::VectorXd scale_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  bool pseudo_ = false;
  Eigen::VectorXd pinv_vals_;
  Eigen::MatrixXd pinv_vecs_;
};

enum class PressureWeight { Rho, Plain };

/// Reduced matrices of the multiscale system plus cached factorizations.
struct ReducedSystem {
  SpMat M_v;        // Psi^T A Psi
  SpMat M_p;        // P^T diag(weight) P
  SpMat R;          // Psi^T B^T P; entry (i,j) = b(psi_i, p_j)
  SpMat Psi;        // expansion to fine edges
  SpMat P;          // expansion to fine cells
  SpMat source_proj;           // P^T M_plain: cell field -> ((f, p_i))
  Eigen::VectorXd M_rho_diag;  // fine rho-mass, for the initial pressure projection
  SpdSolver mv_solver, mp_solver;

  int dim_v() const { return static_cast<int>(R.rows()); }
  int dim_p() const { return static_cast<int>(R.cols()); }

  Eigen::VectorXd project_source(const Eigen::VectorXd& f_cells) const { return source_proj * f_cells; }
};

struct ReducedOptions {
  bool allow_rank_deficient = false;
};

namespace detail {

inline double max_abs(const SpMat& M) {
  if (M.nonZeros() == 0) return 0.0;
  return Eigen::Map<const Eigen::ArrayXd>(M.valuePtr(), M.nonZeros()).abs().maxCoeff();
}

inline SpMat symmetrized(SpMat M, const std::string& label) {
  M.makeCompressed();
  SpMat D = SpMat(M - SpMat(M.transpose()));
  if (max_abs(D) > 1e-12 * std::max(max_abs(M), 1e-300))
    throw InternalError(label + ": assembled matrix is not symmetric");
  return SpMat(0.5 * (M + SpMat(M.transpose())));
}

} // namespace detail

/// Assembles M_v, M_p, R and the source projector from the basis matrices.
inline ReducedSystem assemble_reduced(const GridHierarchy& g, const FineOperators& ops,
                                      const AuxiliarySpace& aux, const CemVelocityBasis& cem,
                                      PressureWeight weight = PressureWeight::Rho,
                                      const ReducedOptions& opts = {}) {
  ReducedSystem sys;
  sys.Psi = cem.Psi;
  sys.P = aux.P;
  sys.M_v = detail::symmetrized(SpMat(cem.Psi.transpose() * (ops.A * cem.Psi).eval()), "M_v");
  const Eigen::VectorXd& w = weight == PressureWeight::Rho ? ops.M_rho : ops.M_plain;
  sys.M_p = detail::symmetrized(SpMat(aux.P.transpose() * w.asDiagonal() * aux.P), "M_p");
  sys.R = SpMat(cem.Psi.transpose() * (ops.B.transpose() * aux.P).eval());
  sys.source_proj = SpMat(aux.P.transpose() * ops.M_plain.asDiagonal());
  sys.M_rho_diag = ops.M_rho;
  sys.mv_solver.compute(sys.M_v, opts.allow_rank_deficient, "M_v");
  sys.mp_solver.compute(sys.M_p, opts.allow_rank_deficient, "M_p");
  return sys;
}

/// Builds a reduced system from explicit basis matrices (identity bases give
/// back the fine system; used by the degeneracy checks and tests).
inline ReducedSystem assemble_reduced_from_bases(const FineOperators& ops, const SpMat& Psi,
                                                 const SpMat& P,
                                                 PressureWeight weight = PressureWeight::Rho,
                                                 const ReducedOptions& opts = {}) {
  ReducedSystem sys;
  sys.Psi = Psi;
  sys.P = P;
  sys.M_v = detail::symmetrized(SpMat(Psi.transpose() * (ops.A * Psi).eval()), "M_v");
  const Eigen::VectorXd& w = weight == PressureWeight::Rho ? ops.M_rho : ops.M_plain;
  sys.M_p = detail::symmetrized(SpMat(P.transpose() * w.asDiagonal() * P), "M_p");
  sys.R = SpMat(Psi.transpose() * (ops.B.transpose() * P).eval());
  sys.source_proj = SpMat(P.transpose() * ops.M_plain.asDiagonal());
  sys.M_rho_diag = ops.M_rho;
  sys.mv_solver.compute(sys.M_v, opts.allow_rank_deficient, "M_v");
  sys.mp_solver.compute(sys.M_p, opts.allow_rank_deficient, "M_p");
  return sys;
}

/// Staggered state: v lives at t_n, p at t_{n+1/2}. The previous half-step
/// pressure is kept so energy monitors can form time-centered quantities.
struct WaveState {
  Eigen::VectorXd v;      // coefficients at t_n
  Eigen::VectorXd p;      // coefficients at t_{n+1/2}
  Eigen::VectorXd p_prev; // coefficients at t_{n-1/2}; equals p until n >= 1
  long n = 0;
  double tau = 0.0;

  double t() const { return n * tau; }
};

/// Projects fine initial data: M_v v0 = Psi^T A h_v and
/// M_p p_half = P^T M_rho h_p.
inline WaveState project_initial(const Eigen::VectorXd& h_v, const Eigen::VectorXd& h_p,
                                 const ReducedSystem& sys, const FineOperators& ops, double tau) {
  WaveState s;
  s.tau = tau;
  s.v = sys.mv_solver.solve(sys.Psi.transpose() * (ops.A * h_v));
  s.p = sys.mp_solver.solve(sys.P.transpose() * sys.M_rho_diag.cwiseProduct(h_p));
  s.p_prev = s.p;
  s.n = 0;
  return s;
}

/// One staggered step: two back-substitutions.
inline void leapfrog_step(WaveState& s, const ReducedSystem& sys, const Eigen::VectorXd& f_next) {
  s.v += s.tau * sys.mv_solver.solve(sys.R * s.p);
  s.p_prev = s.p;
  s.p += s.tau * sys.mp_solver.solve(f_next - sys.R.transpose() * s.v);
  ++s.n;
  if (!s.v.allFinite() || !s.p.allFinite())
    throw NumericalError("leapfrog diverged at step " + std::to_string(s.n) +
                         " (time step too large?)");
}

/// The monitored functional ||v||_a^2 + ||p||_rho^2 on the stored state.
inline double discrete_energy(const WaveState& s, const ReducedSystem& sys) {
  return s.v.dot(sys.M_v * s.v) + s.p.dot(sys.M_p * s.p);
}

/// Cross-staggered product v^T M_v v + p^{n-1/2,T} M_p p^{n+1/2}; conserved
/// exactly by the scheme when f = 0 (valid once n >= 1).
inline double cross_staggered_energy(const WaveState& s, const ReducedSystem& sys) {
  return s.v.dot(sys.M_v * s.v) + s.p_prev.dot(sys.M_p * s.p);
}

/// Plain functional with the pressure centered to t_n; drifts at O(tau^2).
inline double centered_energy(const WaveState& s, const ReducedSystem& sys) {
  const Eigen::VectorXd pm = 0.5 * (s.p_prev + s.p);
  return s.v.dot(sys.M_v * s.v) + pm.dot(sys.M_p * pm);
}

struct CflReport {
  bool converged = false;
  bool stable = false;
  double tau_max = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;
};

/// Power iteration on M_v^-1 R M_p^-1 R^T; stable iff tau <= 2 / sqrt(lambda_max).
inline CflReport check_cfl(const ReducedSystem& sys, double tau, double tol = 1e-6,
                           int max_iter = 500) {
  CflReport rep;
  const int n = sys.dim_v();
  Eigen::VectorXd x(n);
  // fixed deterministic pseudo-random start
  unsigned long long state = 0x9e3779b97f4a7c15ull;
  for (int i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    x[i] = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
  }
  x.normalize();
  double lambda = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd y = sys.mv_solver.solve(sys.R * sys.mp_solver.solve(sys.R.transpose() * x));
    const double norm = y.norm();
    rep.iterations = it;
    if (norm == 0.0) {
      lambda = 0.0;
      rep.converged = true;
      break;
    }
    const double next = x.dot(y);
    y /= norm;
    if (std::abs(next - lambda) <= tol * std::max(std::abs(next), 1e-300)) {
      lambda = next;
      rep.converged = true;
      x = y;
      break;
    }
    lambda = next;
    x = y;
  }
  rep.lambda_max = std::max(lambda, 0.0);
  rep.tau_max = rep.lambda_max > 0.0 ? 2.0 / std::sqrt(rep.lambda_max)
                                     : std::numeric_limits<double>::infinity();
  rep.stable = !(tau > rep.tau_max);
  return rep;
}

struct Snapshot {
  double t = 0.0; // the integer level t_n of the stored velocity
  long step = 0;
  Eigen::VectorXd v; // coefficients
  Eigen::VectorXd p; // coefficients at t_{n+1/2}
};

struct EnergySample {
  long step = 0;
  double plain = 0.0;
  double cross = 0.0;
  double centered = 0.0;
};

/// Time-separable source: cell field times a scalar profile.
struct SourceTerm {
  Eigen::VectorXd spatial;                 // per fine cell
  std::function<double(double)> profile;   // time factor; empty means 1
  bool active = false;

  double factor(double t) const { return profile ? profile(t) : 1.0; }
};

struct RunResult {
  std::vector<Snapshot> snapshots;
  std::vector<EnergySample> energy;
  long steps = 0;
};

inline long steps_for(double T, double tau) {
  const double ratio = T / tau;
  const long n = std::lround(ratio);
  if (n <= 0 || std::abs(ratio - n) > 1e-8 * std::max(1.0, ratio))
    throw ConfigError("time step " + std::to_string(tau) + " does not divide horizon " +
                      std::to_string(T));
  return n;
}

inline std::vector<long> snapshot_steps(const std::vector<double>& times, double tau, long n_steps) {
  std::vector<long> steps;
  for (double t : times) {
    const double ratio = t / tau;
    const long n = std::lround(ratio);
    if (n < 0 || n > n_steps || std::abs(ratio - n) > 1e-8 * std::max(1.0, ratio))
      throw ConfigError("snapshot time " + std::to_string(t) + " is not a multiple of tau inside the run");
    steps.push_back(n);
  }
  return steps;
}

/// Reduced leapfrog driver. Snapshots record (v^n, p^{n+1/2}); energy samples
/// are taken every `energy_every` steps when positive.
inline RunResult run_reduced(const ReducedSystem& sys, const SourceTerm& f, WaveState state,
                             double T, const std::vector<double>& snapshot_times,
                             int energy_every = 0) {
  RunResult out;
  const long n_steps = steps_for(T, state.tau);
  const std::vector<long> snaps = snapshot_steps(snapshot_times, state.tau, n_steps);
  Eigen::VectorXd f_spatial = Eigen::VectorXd::Zero(sys.dim_p());
  if (f.active) f_spatial = sys.project_source(f.spatial);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.dim_p());

  auto record = [&](long n) {
    for (long s : snaps)
      if (s == n) out.snapshots.push_back({n * state.tau, n, state.v, state.p});
  };
  record(0);
  for (long n = 0; n < n_steps; ++n) {
    const double t_next = (n + 1) * state.tau;
    if (f.active)
      leapfrog_step(state, sys, (f.factor(t_next) * f_spatial).eval());
    else
      leapfrog_step(state, sys, zero);
    if (energy_every > 0 && (state.n % energy_every == 0 || state.n == n_steps))
      out.energy.push_back({state.n, discrete_energy(state, sys), cross_staggered_energy(state, sys),
                            centered_energy(state, sys)});
    record(state.n);
  }
  out.steps = n_steps;
  return out;
}

/// The fine-scale RT0 reference solver: same staggered scheme on the interior
/// edge and cell unknowns, diagonal pressure mass.
struct FineSystem {
  SpMat A_int;
  SpMat B_int; // cells x interior edges
  Eigen::VectorXd Mp_diag, Mp_inv;
  Eigen::VectorXd Mplain;
  std::vector<int> interior_edges;
  std::vector<int> edge_interior_id;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> A_fact;
  int n_edges_total = 0;

  Eigen::VectorXd restrict_edges(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(interior_edges.size());
    for (std::size_t k = 0; k < interior_edges.size(); ++k) r[k] = full[interior_edges[k]];
    return r;
  }
  Eigen::VectorXd extend_edges(const Eigen::VectorXd& interior) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n_edges_total);
    for (std::size_t k = 0; k < interior_edges.size(); ++k) full[interior_edges[k]] = interior[k];
    return full;
  }
};

inline FineSystem build_fine_system(const GridHierarchy& g, const FineOperators& ops) {
  FineSystem fs;
  fs.interior_edges = ops.interior_edges;
  fs.edge_interior_id = ops.edge_interior_id;
  fs.n_edges_total = g.n_edges();
  fs.A_int = restrict_sym(ops.A, ops.interior_edges, ops.edge_interior_id);
  std::vector<Triplet> tb;
  for (int c = 0; c < g.n_cells(); ++c) {
    const auto edges = g.cell_edges(c);
    const double sign[4] = {1.0, -1.0, 1.0, -1.0};
    for (int k = 0; k < 4; ++k) {
      const int il = ops.edge_interior_id[edges[k]];
      if (il >= 0) tb.emplace_back(c, il, sign[k]);
    }
  }
  fs.B_int.resize(g.n_cells(), static_cast<int>(ops.interior_edges.size()));
  fs.B_int.setFromTriplets(tb.begin(), tb.end());
  fs.B_int.makeCompressed();
  fs.Mp_diag = ops.M_rho;
  fs.Mp_inv = ops.M_rho.cwiseInverse();
  fs.Mplain = ops.M_plain;
  fs.A_fact = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(fs.A_int);
  if (fs.A_fact->info() != Eigen::Success)
    throw NumericalError("fine solver: velocity mass factorization failed");
  return fs;
}

struct FineRunResult {
  std::vector<Snapshot> snapshots; // v expanded to all edges (zero on boundary), p on cells
  std::vector<EnergySample> energy;
  long steps = 0;
};

inline FineRunResult run_fine_reference(const GridHierarchy& g, const FineOperators& ops,
                                        const SourceTerm& f, const Eigen::VectorXd& h_v,
                                        const Eigen::VectorXd& h_p, double tau, double T,
                                        const std::vector<double>& snapshot_times,
                                        int energy_every = 0) {
  const FineSystem fs = build_fine_system(g, ops);
  const long n_steps = steps_for(T, tau);
  const std::vector<long> snaps = snapshot_steps(snapshot_times, tau, n_steps);

  // a-projection of the initial velocity onto the interior-edge space
  Eigen::VectorXd v = fs.A_fact->solve(fs.restrict_edges(ops.A * h_v));
  Eigen::VectorXd p = h_p; // rho-projection is the identity on cell fields
  Eigen::VectorXd p_prev = p;

  Eigen::VectorXd f_spatial;
  if (f.active) f_spatial = fs.Mplain.cwiseProduct(f.spatial);

  FineRunResult out;
  auto record = [&](long n) {
    for (long s : snaps)
      if (s == n) out.snapshots.push_back({n * tau, n, fs.extend_edges(v), p});
  };
  record(0);
  for (long n = 0; n < n_steps; ++n) {
    v += tau * fs.A_fact->solve(fs.B_int.transpose() * p);
    p_prev = p;
    Eigen::VectorXd rhs = -(fs.B_int * v);
    if (f.active) rhs += f.factor((n + 1) * tau) * f_spatial;
    p += tau * fs.Mp_inv.cwiseProduct(rhs);
    if (!v.allFinite() || !p.allFinite())
      throw NumericalError("fine leapfrog diverged at step " + std::to_string(n + 1));
    if (energy_every > 0 && ((n + 1) % energy_every == 0 || n + 1 == n_steps)) {
      const double vv = v.dot(fs.A_int * v);
      const Eigen::VectorXd pc = 0.5 * (p_prev + p);
      out.energy.push_back({n + 1, vv + p.dot(fs.Mp_diag.cwiseProduct(p)),
                            vv + p_prev.dot(fs.Mp_diag.cwiseProduct(p)),
                            vv + pc.dot(fs.Mp_diag.cwiseProduct(pc))});
    }
    record(n + 1);
  }
  out.steps = n_steps;
  return out;
}

} // namespace cemwave
