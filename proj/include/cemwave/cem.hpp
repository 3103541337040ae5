#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <string>
#include <tuple>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/grid.hpp"
#include "cemwave/parallel.hpp"
#include "cemwave/spectral.hpp"

namespace cemwave {

/// The constraint-energy-minimizing velocity space: one locally supported
/// fine-edge field per auxiliary column, plus the multiplier pressures kept
/// for the constraint diagnostics.
struct CemVelocityBasis {
  SpMat Psi;            // fine edges x M, column (i,j) supported in K_{i,l}
  SpMat Mu;             // fine cells x M, the multiplier q_{j,ms}
  int layers = 0;
  double max_residual = 0.0;
};

namespace detail {

// One patch factorization serving all J_i right-hand sides of element i.
// The saddle system is solved in an augmented symmetric form that keeps the
// projection block sparse: with G = S_loc P_loc and nu = G^T mu',
//   [ A   B^T   0 ] [psi]   [ 0     ]
//   [ B    0   -G ] [mu'] = [ S p_j ]
//   [ 0  -G^T   I ] [nu ]   [ 0     ]
// where mu' = -mu eliminates to A psi - B^T mu = 0 and
// s(pi mu, pi q) + b(psi, q) = s(p_j, q) on the patch.
struct PatchSolver {
  Patch patch;
  SpMat A_loc;                  // interior-edge velocity mass of the patch
  SpMat B_loc;                  // patch cells x patch interior edges
  SpMat G;                      // patch cells x local aux columns
  std::vector<int> aux_columns; // global aux column ids backing G
  Eigen::SparseLU<SpMat> lu;
  int ne = 0, nc = 0, na = 0;

  PatchSolver(const GridHierarchy& g, const FineOperators& ops, const AuxiliarySpace& aux, int i,
              int layers) {
    patch = oversample(g, i, layers);
    ne = patch.n_interior_edges();
    nc = patch.n_cells();

    A_loc = restrict_sym(ops.A, patch.interior_edges, patch.edge_local);

    std::vector<Triplet> tb;
    for (int cl = 0; cl < nc; ++cl) {
      const auto edges = g.cell_edges(patch.cells[cl]);
      const double sign[4] = {1.0, -1.0, 1.0, -1.0};
      for (int k = 0; k < 4; ++k) {
        const int el = patch.edge_local[edges[k]];
        if (el >= 0) tb.emplace_back(cl, el, sign[k]);
      }
    }
    B_loc.resize(nc, ne);
    B_loc.setFromTriplets(tb.begin(), tb.end());

    // aux columns of the member elements; their supports lie inside the patch
    std::vector<Triplet> tg;
    for (int e : patch.element_set) {
      const ElementEigenBlock& blk = aux.blocks[e];
      for (int j = 0; j < blk.retained; ++j) {
        const int col = static_cast<int>(aux_columns.size());
        aux_columns.push_back(aux.column(e, j));
        for (std::size_t r = 0; r < blk.cells.size(); ++r) {
          const int cl = patch.cell_local[blk.cells[r]];
          const double s = ops.S[blk.cells[r]];
          tg.emplace_back(cl, col, s * blk.vectors(static_cast<int>(r), j));
        }
      }
    }
    na = static_cast<int>(aux_columns.size());
    G.resize(nc, na);
    G.setFromTriplets(tg.begin(), tg.end());

    std::vector<Triplet> tk;
    tk.reserve(A_loc.nonZeros() + 2 * B_loc.nonZeros() + 2 * G.nonZeros() + na);
    for (int k = 0; k < A_loc.outerSize(); ++k)
      for (SpMat::InnerIterator it(A_loc, k); it; ++it) tk.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < B_loc.outerSize(); ++k)
      for (SpMat::InnerIterator it(B_loc, k); it; ++it) {
        tk.emplace_back(ne + it.row(), it.col(), it.value());
        tk.emplace_back(it.col(), ne + it.row(), it.value());
      }
    for (int k = 0; k < G.outerSize(); ++k)
      for (SpMat::InnerIterator it(G, k); it; ++it) {
        tk.emplace_back(ne + it.row(), ne + nc + it.col(), -it.value());
        tk.emplace_back(ne + nc + it.col(), ne + it.row(), -it.value());
      }
    for (int k = 0; k < na; ++k) tk.emplace_back(ne + nc + k, ne + nc + k, 1.0);
    SpMat K(ne + nc + na, ne + nc + na);
    K.setFromTriplets(tk.begin(), tk.end());
    K.makeCompressed();
    lu.compute(K);
    if (lu.info() != Eigen::Success)
      throw NumericalError("cem: singular saddle factorization on patch of element " + std::to_string(i));
  }

  // Solves for the basis paired with local eigenvector j of the root element.
  // Returns (psi on patch interior edges, mu on patch cells, relative residual).
  std::tuple<Eigen::VectorXd, Eigen::VectorXd, double>
  solve(const FineOperators& ops, const AuxiliarySpace& aux, int i, int j) const {
    const ElementEigenBlock& blk = aux.blocks[i];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ne + nc + na);
    for (std::size_t r = 0; r < blk.cells.size(); ++r) {
      const int c = blk.cells[r];
      rhs[ne + patch.cell_local[c]] = ops.S[c] * blk.vectors(static_cast<int>(r), j);
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd psi = sol.head(ne);
    Eigen::VectorXd mu = -sol.segment(ne, nc);

    // residuals of the unaugmented equations
    const Eigen::VectorXd apsi = A_loc * psi;
    const Eigen::VectorXd btmu = B_loc.transpose() * mu;
    const Eigen::VectorXd r1 = apsi - btmu;
    const Eigen::VectorXd r2 = G * (G.transpose() * mu) + B_loc * psi - rhs.segment(ne, nc);
    const double s1 = std::max(apsi.norm() + btmu.norm(), 1e-300);
    const double s2 = std::max(rhs.segment(ne, nc).norm(), 1e-300);
    const double rel = std::max(r1.norm() / s1, r2.norm() / s2);
    return {std::move(psi), std::move(mu), rel};
  }
};

} // namespace detail

/// Solves (msv_1)-(msv_2) for a single basis function. Returns the fine-edge
/// field (zero-extended) and its multiplier pressure.
inline std::tuple<Eigen::VectorXd, Eigen::VectorXd, double>
build_cem_basis(const GridHierarchy& g, const FineOperators& ops, const AuxiliarySpace& aux, int i,
                int j, int layers) {
  if (j < 0 || j >= aux.blocks[i].retained)
    throw ConfigError("cem: basis index out of range for element " + std::to_string(i));
  detail::PatchSolver solver(g, ops, aux, i, layers);
  auto [psi_loc, mu_loc, rel] = solver.solve(ops, aux, i, j);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(g.n_edges());
  for (int el = 0; el < solver.ne; ++el) psi[solver.patch.interior_edges[el]] = psi_loc[el];
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(g.n_cells());
  for (int cl = 0; cl < solver.nc; ++cl) mu[solver.patch.cells[cl]] = mu_loc[cl];
  return {std::move(psi), std::move(mu), rel};
}

struct CemOptions {
  double residual_tol = 1e-10;
  double rank_tol = 1e-12;
  bool allow_rank_deficient = false;
};

/// Builds the full velocity space: one patch factorization per element, all
/// J_i right-hand sides solved against it. The Gram matrix Psi^T A Psi must
/// be positive definite unless explicitly waived.
inline CemVelocityBasis assemble_velocity_space(const GridHierarchy& g, const FineOperators& ops,
                                                const AuxiliarySpace& aux, int layers,
                                                const CemOptions& opts = {}) {
  const int N = g.n_elements();
  std::vector<std::vector<Triplet>> psi_trip(N), mu_trip(N);
  std::vector<double> residuals(N, 0.0);

  parallel_for(N, [&](int i) {
    const int J_i = aux.blocks[i].retained;
    if (J_i == 0) return;
    detail::PatchSolver solver(g, ops, aux, i, layers);
    for (int j = 0; j < J_i; ++j) {
      auto [psi_loc, mu_loc, rel] = solver.solve(ops, aux, i, j);
      residuals[i] = std::max(residuals[i], rel);
      const int col = aux.column(i, j);
      for (int el = 0; el < solver.ne; ++el)
        if (psi_loc[el] != 0.0) psi_trip[i].emplace_back(solver.patch.interior_edges[el], col, psi_loc[el]);
      for (int cl = 0; cl < solver.nc; ++cl)
        if (mu_loc[cl] != 0.0) mu_trip[i].emplace_back(solver.patch.cells[cl], col, mu_loc[cl]);
    }
  });

  CemVelocityBasis basis;
  basis.layers = layers;
  std::vector<Triplet> all_psi, all_mu;
  for (int i = 0; i < N; ++i) {
    all_psi.insert(all_psi.end(), psi_trip[i].begin(), psi_trip[i].end());
    all_mu.insert(all_mu.end(), mu_trip[i].begin(), mu_trip[i].end());
    basis.max_residual = std::max(basis.max_residual, residuals[i]);
  }
  basis.Psi.resize(g.n_edges(), aux.M);
  basis.Psi.setFromTriplets(all_psi.begin(), all_psi.end());
  basis.Psi.makeCompressed();
  basis.Mu.resize(g.n_cells(), aux.M);
  basis.Mu.setFromTriplets(all_mu.begin(), all_mu.end());
  basis.Mu.makeCompressed();

  if (basis.max_residual > opts.residual_tol)
    throw NumericalError("cem: saddle residual " + std::to_string(basis.max_residual) +
                         " exceeds tolerance");

  SpMat gram = SpMat(basis.Psi.transpose() * (ops.A * basis.Psi).eval());
  Eigen::SimplicialLDLT<SpMat> chol(gram);
  bool deficient = chol.info() != Eigen::Success;
  std::vector<int> offending;
  if (!deficient) {
    const Eigen::VectorXd d = chol.vectorD();
    const double dmax = d.maxCoeff();
    const auto& perm = chol.permutationP().indices();
    for (int k = 0; k < d.size(); ++k)
      if (!(d[k] > opts.rank_tol * dmax)) offending.push_back(perm[k]);
    deficient = !offending.empty();
  }
  if (deficient && !opts.allow_rank_deficient) {
    std::string cols;
    for (int c : offending) cols += " " + std::to_string(c);
    throw NumericalError("cem: velocity space Gram matrix is rank deficient; offending columns:" + cols);
  }
  return basis;
}

} // namespace cemwave
