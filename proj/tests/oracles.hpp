// Test-only reference implementations, kept independent of the production
// assembly and solve paths: dense quadrature-based operators, a QZ solve of
// the full saddle pencil, dense CEM and leapfrog references.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "cemwave/grid.hpp"
#include "cemwave/spectral.hpp"

namespace oracle {

using cemwave::GridHierarchy;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline const double kGauss[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

// RT0 basis attached to the four edges of a cell, in the grid's edge order
// (right, left, top, bottom), all with global +x / +y normals.
struct Rt0Basis {
  double x0, y0, h;

  // component values at a global point, for local edge k
  std::array<double, 2> value(int k, double x, double y) const {
    const double denom = h * h;
    switch (k) {
      case 0: return {(x - x0) / denom, 0.0};          // right
      case 1: return {(x0 + h - x) / denom, 0.0};      // left
      case 2: return {0.0, (y - y0) / denom};          // top
      default: return {0.0, (y0 + h - y) / denom};     // bottom
    }
  }
  double divergence(int k) const {
    const double denom = h * h;
    return (k == 0 || k == 2) ? 1.0 / denom : -1.0 / denom;
  }
};

/// Dense velocity mass by 2x2 Gauss quadrature per cell.
inline MatrixXd dense_velocity_mass(const GridHierarchy& g, const VectorXd& kappa) {
  MatrixXd A = MatrixXd::Zero(g.n_edges(), g.n_edges());
  const double h = g.hx();
  for (int c = 0; c < g.n_cells(); ++c) {
    const Rt0Basis basis{g.cell_ix(c) * h, g.cell_iy(c) * h, h};
    const auto edges = g.cell_edges(c);
    for (double gx : kGauss)
      for (double gy : kGauss) {
        const double x = basis.x0 + gx * h, y = basis.y0 + gy * h;
        const double w = 0.25 * h * h / kappa[c];
        for (int a = 0; a < 4; ++a) {
          const auto va = basis.value(a, x, y);
          for (int b = 0; b < 4; ++b) {
            const auto vb = basis.value(b, x, y);
            A(edges[a], edges[b]) += w * (va[0] * vb[0] + va[1] * vb[1]);
          }
        }
      }
  }
  return A;
}

/// Dense divergence rows by quadrature.
inline MatrixXd dense_div(const GridHierarchy& g) {
  MatrixXd B = MatrixXd::Zero(g.n_cells(), g.n_edges());
  const double h = g.hx();
  for (int c = 0; c < g.n_cells(); ++c) {
    const Rt0Basis basis{g.cell_ix(c) * h, g.cell_iy(c) * h, h};
    const auto edges = g.cell_edges(c);
    for (double gx : kGauss)
      for (double gy : kGauss) {
        (void)gx;
        (void)gy;
        const double w = 0.25 * h * h;
        for (int a = 0; a < 4; ++a) B(c, edges[a]) += w * basis.divergence(a);
      }
  }
  return B;
}

/// Dense Q1 stiffness over a cell set by 2x2 Gauss quadrature; rows/columns
/// over all grid vertices (zero elsewhere).
inline MatrixXd dense_q1_stiffness(const GridHierarchy& g, const VectorXd& kappa,
                                   const std::vector<int>& cells) {
  MatrixXd K = MatrixXd::Zero(g.n_vertices(), g.n_vertices());
  const double h = g.hx();
  for (int c : cells) {
    const int ix = g.cell_ix(c), iy = g.cell_iy(c);
    const int vs[4] = {g.vertex_id(ix, iy), g.vertex_id(ix + 1, iy), g.vertex_id(ix + 1, iy + 1),
                       g.vertex_id(ix, iy + 1)};
    for (double gx : kGauss)
      for (double gy : kGauss) {
        // gradients of (1-xi)(1-eta), xi(1-eta), xi eta, (1-xi)eta
        const double dN[4][2] = {{-(1 - gy) / h, -(1 - gx) / h},
                                 {(1 - gy) / h, -gx / h},
                                 {gy / h, gx / h},
                                 {-gy / h, (1 - gx) / h}};
        const double w = 0.25 * h * h * kappa[c];
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            K(vs[a], vs[b]) += w * (dN[a][0] * dN[b][0] + dN[a][1] * dN[b][1]);
      }
  }
  return K;
}

// Dense restriction helpers over index subsets.
inline MatrixXd submatrix(const MatrixXd& M, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = M(rows[r], cols[c]);
  return out;
}

/// Finite real eigenvalues of the full saddle pencil
///   [A  -B^T] [phi]        [0 0] [phi]
///   [B    0 ] [ p ] = lam  [0 S] [ p ]
/// on one coarse element, via the QZ decomposition. Sorted ascending.
inline std::vector<double> dense_spectral_pencil(const GridHierarchy& g, const VectorXd& kappa,
                                                 const VectorXd& S_diag_global, int element) {
  const cemwave::Patch patch = cemwave::oversample(g, element, 0);
  const MatrixXd A_full = dense_velocity_mass(g, kappa);
  const MatrixXd B_full = dense_div(g);
  const MatrixXd A = submatrix(A_full, patch.interior_edges, patch.interior_edges);
  const MatrixXd B = submatrix(B_full, patch.cells, patch.interior_edges);
  const int ne = patch.n_interior_edges(), nc = patch.n_cells();

  MatrixXd K = MatrixXd::Zero(ne + nc, ne + nc);
  K.topLeftCorner(ne, ne) = A;
  K.topRightCorner(ne, nc) = -B.transpose();
  K.bottomLeftCorner(nc, ne) = B;
  MatrixXd M = MatrixXd::Zero(ne + nc, ne + nc);
  for (int c = 0; c < nc; ++c) M(ne + c, ne + c) = S_diag_global[patch.cells[c]];

  Eigen::GeneralizedEigenSolver<MatrixXd> qz(K, M, false);
  std::vector<double> lambdas;
  for (int k = 0; k < qz.alphas().size(); ++k) {
    const std::complex<double> alpha = qz.alphas()[k];
    const double beta = qz.betas()[k];
    if (std::abs(beta) < 1e-10) continue; // infinite eigenvalue
    const std::complex<double> lam = alpha / beta;
    if (std::abs(lam.imag()) > 1e-8 * (1.0 + std::abs(lam.real()))) continue;
    lambdas.push_back(lam.real());
  }
  std::sort(lambdas.begin(), lambdas.end());
  return lambdas;
}

/// Dense solve of the CEM saddle system on the patch of (element, j):
///   [A  -B^T] [psi]   [0      ]
///   [B    C ] [mu ] = [S p_j  ]
/// with C = S P P^T S restricted to the patch. Returns psi zero-extended to
/// all edges and mu zero-extended to all cells.
inline std::pair<VectorXd, VectorXd> dense_cem_solve(const GridHierarchy& g, const VectorXd& kappa,
                                                     const cemwave::AuxiliarySpace& aux, int element,
                                                     int j, int layers) {
  const cemwave::Patch patch = cemwave::oversample(g, element, layers);
  const MatrixXd A_full = dense_velocity_mass(g, kappa);
  const MatrixXd B_full = dense_div(g);
  const MatrixXd A = submatrix(A_full, patch.interior_edges, patch.interior_edges);
  const MatrixXd B = submatrix(B_full, patch.cells, patch.interior_edges);
  const int ne = patch.n_interior_edges(), nc = patch.n_cells();

  VectorXd S_loc(nc);
  for (int c = 0; c < nc; ++c) S_loc[c] = aux.S_diag[patch.cells[c]];
  // local auxiliary columns (all member elements)
  std::vector<int> cols;
  for (int e : patch.element_set)
    for (int jj = 0; jj < aux.blocks[e].retained; ++jj) cols.push_back(aux.column(e, jj));
  MatrixXd P_loc = MatrixXd::Zero(nc, cols.size());
  const MatrixXd P_dense = MatrixXd(aux.P);
  for (int c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < cols.size(); ++k) P_loc(c, k) = P_dense(patch.cells[c], cols[k]);
  const MatrixXd C = S_loc.asDiagonal() * P_loc * P_loc.transpose() * S_loc.asDiagonal();

  MatrixXd K = MatrixXd::Zero(ne + nc, ne + nc);
  K.topLeftCorner(ne, ne) = A;
  K.topRightCorner(ne, nc) = -B.transpose();
  K.bottomLeftCorner(nc, ne) = B;
  K.bottomRightCorner(nc, nc) = C;
  VectorXd rhs = VectorXd::Zero(ne + nc);
  const cemwave::ElementEigenBlock& blk = aux.blocks[element];
  for (std::size_t r = 0; r < blk.cells.size(); ++r) {
    const int cl = patch.cell_local[blk.cells[r]];
    rhs[ne + cl] = aux.S_diag[blk.cells[r]] * blk.vectors(static_cast<int>(r), j);
  }
  const VectorXd sol = Eigen::FullPivLU<MatrixXd>(K).solve(rhs);

  VectorXd psi = VectorXd::Zero(g.n_edges());
  for (int el = 0; el < ne; ++el) psi[patch.interior_edges[el]] = sol[el];
  VectorXd mu = VectorXd::Zero(g.n_cells());
  for (int cl = 0; cl < nc; ++cl) mu[patch.cells[cl]] = sol[ne + cl];
  return {psi, mu};
}

/// Dense reduced system with pseudo-inverse mass solves and an explicit
/// leapfrog loop; the reference for the stepping code.
struct DenseLeapfrog {
  MatrixXd Mv, Mp, R;
  MatrixXd Mv_pinv, Mp_pinv;

  static MatrixXd pinv(const MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    const double cut = 1e-12 * es.eigenvalues().maxCoeff();
    VectorXd inv = es.eigenvalues().unaryExpr([cut](double l) { return l > cut ? 1.0 / l : 0.0; });
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }

  DenseLeapfrog(const MatrixXd& mv, const MatrixXd& mp, const MatrixXd& r) : Mv(mv), Mp(mp), R(r) {
    Mv_pinv = pinv(Mv);
    Mp_pinv = pinv(Mp);
  }

  void step(VectorXd& v, VectorXd& p, double tau, const VectorXd& f_next) const {
    v += tau * (Mv_pinv * (R * p));
    p += tau * (Mp_pinv * (f_next - R.transpose() * v));
  }
};

} // namespace oracle
