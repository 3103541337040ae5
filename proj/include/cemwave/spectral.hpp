#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/grid.hpp"
#include "cemwave/parallel.hpp"

namespace cemwave {

/// Eigenpairs of the local spectral problem on one coarse element.
/// Vectors are stored on the element's cells (zero-extended globally) and are
/// s_i-orthonormal; eigenvalues ascend and start at 0 (constant pressure).
struct ElementEigenBlock {
  int element = -1;
  Eigen::VectorXd eigenvalues;  // J_i + extra, ascending
  Eigen::MatrixXd vectors;      // element cells x pairs, s_i-orthonormal
  std::vector<int> cells;       // global cell ids backing the rows
  int retained = 0;             // J_i
  bool floored = false;         // kappa-tilde floor was triggered
};

/// The auxiliary pressure space Q_ms: all retained eigenvectors as columns of
/// a global sparse matrix with disjoint per-element supports.
struct AuxiliarySpace {
  std::vector<ElementEigenBlock> blocks;
  std::vector<int> offsets;     // column offset per element
  SpMat P;                      // fine cells x M
  Eigen::VectorXd S_diag;       // the s-form diagonal used to build the space
  double Lambda = 0.0;          // min over elements of the first discarded eigenvalue
  int M = 0;

  int column(int element, int j) const { return offsets[element] + j; }
  int J(int element) const { return blocks[element].retained; }
};

/// Schur-complement solve of the saddle eigenproblem on coarse element i:
/// eliminates the velocity through the interior-edge mass and solves
/// T p = lambda S p with T = B A^-1 B^T, returning J_i + L_extra pairs.
inline ElementEigenBlock solve_local_spectral(const GridHierarchy& g, const FineOperators& ops,
                                              int i, int J_i, int L_extra = 1) {
  const Patch patch = oversample(g, i, 0);
  const int nc = patch.n_cells();
  if (J_i < 1 || J_i > nc)
    throw ConfigError("spectral: J=" + std::to_string(J_i) + " out of range for element with " +
                      std::to_string(nc) + " cells");

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nc, nc);
  if (patch.n_interior_edges() > 0) {
    const SpMat A_loc = restrict_sym(ops.A, patch.interior_edges, patch.edge_local);
    std::vector<Triplet> tb;
    for (int cl = 0; cl < nc; ++cl) {
      const int c = patch.cells[cl];
      const auto edges = g.cell_edges(c);
      const double sign[4] = {1.0, -1.0, 1.0, -1.0};
      for (int k = 0; k < 4; ++k) {
        const int el = patch.edge_local[edges[k]];
        if (el >= 0) tb.emplace_back(cl, el, sign[k]);
      }
    }
    SpMat B_loc(nc, patch.n_interior_edges());
    B_loc.setFromTriplets(tb.begin(), tb.end());

    Eigen::SimplicialLDLT<SpMat> Asolv(A_loc);
    if (Asolv.info() != Eigen::Success)
      throw NumericalError("spectral: velocity mass factorization failed on element " + std::to_string(i));
    const Eigen::MatrixXd X = Asolv.solve(Eigen::MatrixXd(B_loc.transpose()));
    T = Eigen::MatrixXd(B_loc) * X;
    T = 0.5 * (T + T.transpose()).eval();
  }

  Eigen::VectorXd S_loc(nc);
  for (int cl = 0; cl < nc; ++cl) S_loc[cl] = ops.S[patch.cells[cl]];
  if ((S_loc.array() < 0.0).any())
    throw DomainError("spectral: indefinite s-form weight on element " + std::to_string(i));
  ElementEigenBlock blk;
  const double floor = 1e-14 * S_loc.maxCoeff();
  for (int cl = 0; cl < nc; ++cl)
    if (S_loc[cl] < floor) {
      S_loc[cl] = floor;
      blk.floored = true;
    }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      T, Eigen::MatrixXd(S_loc.asDiagonal()), Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success)
    throw NumericalError("spectral: eigensolve failed on element " + std::to_string(i));

  const int pairs = std::min(J_i + std::max(L_extra, 0), nc);
  blk.element = i;
  blk.retained = J_i;
  blk.cells = patch.cells;
  blk.eigenvalues = ges.eigenvalues().head(pairs);
  blk.vectors = ges.eigenvectors().leftCols(pairs);
  // deterministic sign: the entry of largest magnitude is positive
  for (int j = 0; j < pairs; ++j) {
    int arg = 0;
    for (int r = 1; r < nc; ++r)
      if (std::abs(blk.vectors(r, j)) > std::abs(blk.vectors(arg, j))) arg = r;
    if (blk.vectors(arg, j) < 0.0) blk.vectors.col(j) = -blk.vectors.col(j);
  }
  return blk;
}

inline AuxiliarySpace build_auxiliary_space(const GridHierarchy& g, const FineOperators& ops,
                                            std::vector<ElementEigenBlock> blocks) {
  if (static_cast<int>(blocks.size()) != g.n_elements())
    throw InternalError("auxiliary space: missing element blocks");
  AuxiliarySpace aux;
  aux.S_diag = ops.S;
  aux.offsets.resize(blocks.size());
  int M = 0;
  double Lambda = std::numeric_limits<double>::infinity();
  std::vector<Triplet> trip;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const ElementEigenBlock& blk = blocks[i];
    if (blk.element != static_cast<int>(i))
      throw InternalError("auxiliary space: block order does not match element order");
    aux.offsets[i] = M;
    for (int j = 0; j < blk.retained; ++j)
      for (std::size_t r = 0; r < blk.cells.size(); ++r)
        trip.emplace_back(blk.cells[r], M + j, blk.vectors(static_cast<int>(r), j));
    if (blk.eigenvalues.size() > blk.retained)
      Lambda = std::min(Lambda, blk.eigenvalues[blk.retained]);
    M += blk.retained;
  }
  aux.M = M;
  aux.Lambda = Lambda;
  aux.P.resize(g.n_cells(), M);
  aux.P.setFromTriplets(trip.begin(), trip.end());
  aux.P.makeCompressed();
  aux.blocks = std::move(blocks);
  return aux;
}

/// Solves all element eigenproblems (uniform J) and assembles Q_ms.
inline AuxiliarySpace build_auxiliary_space_uniform(const GridHierarchy& g, const FineOperators& ops,
                                                    int J, int L_extra = 1) {
  std::vector<ElementEigenBlock> blocks(g.n_elements());
  parallel_for(g.n_elements(), [&](int i) { blocks[i] = solve_local_spectral(g, ops, i, J, L_extra); });
  return build_auxiliary_space(g, ops, std::move(blocks));
}

/// s-orthogonal projection onto Q_ms: pi q = P P^T S q. Idempotent.
inline Eigen::VectorXd project_pi(const Eigen::VectorXd& q, const AuxiliarySpace& aux) {
  return aux.P * (aux.P.transpose() * aux.S_diag.cwiseProduct(q));
}

/// Eigenvalue-decay diagnostic: one row per (element, j) with lambda_j.
inline void write_eigen_csv(const AuxiliarySpace& aux, const GridHierarchy& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "element,cx,cy,j,lambda\n";
  for (const ElementEigenBlock& blk : aux.blocks) {
    const CoarseElement& K = g.element(blk.element);
    for (int j = 0; j < blk.eigenvalues.size(); ++j)
      out << blk.element << ',' << K.cx << ',' << K.cy << ',' << (j + 1) << ','
          << std::scientific << blk.eigenvalues[j] << '\n';
  }
}

} // namespace cemwave
