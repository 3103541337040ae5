#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/grid.hpp"

namespace cemwave {

enum class GradientSampling { CellCenter, CellAverage };

/// Nodal values of one multiscale partition-of-unity function, stored on the
/// vertex window of its coarse neighborhood and zero outside.
struct ChiField {
  int node = -1;     // interior coarse node index
  int vx0 = 0, vy0 = 0; // window origin in fine vertex coordinates
  int nvx = 0, nvy = 0; // window extent in vertices
  Eigen::VectorXd values; // row-major over the window

  double at(int vx, int vy) const {
    const int lx = vx - vx0, ly = vy - vy0;
    if (lx < 0 || ly < 0 || lx >= nvx || ly >= nvy) return 0.0;
    return values[ly * nvx + lx];
  }
};

struct PartitionOfUnity {
  std::vector<ChiField> chi;     // one per interior coarse node
  Eigen::VectorXd kappa_tilde;   // per fine cell
};

/// Squared gradient of the bilinear interpolant of corner values
/// (SW, SE, NE, NW) on an hx-by-hy cell, sampled at the cell center.
inline double gradient_squared(double sw, double se, double ne, double nw, double hx, double hy) {
  const double dx = ((se - sw) + (ne - nw)) / (2.0 * hx);
  const double dy = ((nw - sw) + (ne - se)) / (2.0 * hy);
  return dx * dx + dy * dy;
}

/// Cell average of |grad chi|^2 for the same bilinear interpolant (2x2 Gauss,
/// exact for this integrand).
inline double gradient_squared_avg(double sw, double se, double ne, double nw, double hx, double hy) {
  static const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  double acc = 0.0;
  for (double xi : gp)
    for (double eta : gp) {
      const double dx = ((se - sw) * (1.0 - eta) + (ne - nw) * eta) / hx;
      const double dy = ((nw - sw) * (1.0 - xi) + (ne - se) * xi) / hy;
      acc += 0.25 * (dx * dx + dy * dy);
    }
  return acc;
}

namespace detail {

// Coarse hat value at a fine vertex: product of 1D hats centered on x_j.
inline double hat_value(const GridHierarchy& g, const CoarseNode& node, int vx, int vy) {
  const int m = g.refinement_ratio();
  const double tx = 1.0 - std::abs(vx - node.nx * m) / static_cast<double>(m);
  const double ty = 1.0 - std::abs(vy - node.ny * m) / static_cast<double>(m);
  return std::max(0.0, tx) * std::max(0.0, ty);
}

} // namespace detail

/// Solves the kappa-harmonic partition-of-unity functions chi_j (one small
/// Dirichlet solve per coarse element of each neighborhood) and the spectral
/// weight kappa_tilde = kappa * sum_j |grad chi_j|^2 per fine cell.
inline PartitionOfUnity solve_pou(const GridHierarchy& g, const MediumFields& m,
                                  GradientSampling sampling = GradientSampling::CellCenter) {
  m.validate(g);
  const int mr = g.refinement_ratio();
  const int n = g.n_fine();
  PartitionOfUnity pou;
  pou.chi.resize(g.interior_coarse_nodes().size());
  pou.kappa_tilde = Eigen::VectorXd::Zero(g.n_cells());
  Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(g.n_cells());

  for (const CoarseNode& node : g.interior_coarse_nodes()) {
    ChiField& chi = pou.chi[node.id];
    chi.node = node.id;
    chi.vx0 = (node.nx - 1) * mr;
    chi.vy0 = (node.ny - 1) * mr;
    chi.nvx = 2 * mr + 1;
    chi.nvy = 2 * mr + 1;
    chi.values = Eigen::VectorXd::Zero(chi.nvx * chi.nvy);

    for (int Kid : node.elements) {
      const CoarseElement& K = g.element(Kid);
      // Dirichlet data on the whole element boundary: the hat trace, which is
      // zero on the far edges (the part of the neighborhood boundary).
      std::vector<int> dirichlet;
      const int x0 = K.cx * mr, y0 = K.cy * mr;
      for (int iy = 0; iy <= mr; ++iy)
        for (int ix = 0; ix <= mr; ++ix)
          if (ix == 0 || iy == 0 || ix == mr || iy == mr)
            dirichlet.push_back(g.vertex_id(x0 + ix, y0 + iy));

      const NodalSystem sys = assemble_nodal_stiffness(g, m.kappa, K.fine_cells, dirichlet);
      Eigen::VectorXd gvals(dirichlet.size());
      for (std::size_t k = 0; k < dirichlet.size(); ++k) {
        const int v = dirichlet[k];
        gvals[k] = detail::hat_value(g, node, v % (n + 1), v / (n + 1));
      }
      Eigen::VectorXd u;
      if (!sys.free_nodes.empty()) {
        Eigen::SimplicialLDLT<SpMat> solver(sys.K_ff);
        if (solver.info() != Eigen::Success)
          throw InternalError("pou: singular local system on coarse element " + std::to_string(Kid));
        u = solver.solve(-(sys.K_fd * gvals));
      }
      // scatter into the chi window
      for (std::size_t k = 0; k < sys.free_nodes.size(); ++k) {
        const int v = sys.free_nodes[k];
        const int vx = v % (n + 1), vy = v / (n + 1);
        chi.values[(vy - chi.vy0) * chi.nvx + (vx - chi.vx0)] = u[k];
      }
      for (std::size_t k = 0; k < dirichlet.size(); ++k) {
        const int v = dirichlet[k];
        const int vx = v % (n + 1), vy = v / (n + 1);
        chi.values[(vy - chi.vy0) * chi.nvx + (vx - chi.vx0)] = gvals[k];
      }
    }

    // accumulate |grad chi_j|^2 on the neighborhood cells
    const double h = g.hx();
    for (int Kid : node.elements) {
      for (int c : g.element(Kid).fine_cells) {
        const int ix = g.cell_ix(c), iy = g.cell_iy(c);
        const double sw = chi.at(ix, iy), se = chi.at(ix + 1, iy);
        const double ne = chi.at(ix + 1, iy + 1), nw = chi.at(ix, iy + 1);
        grad_sum[c] += sampling == GradientSampling::CellCenter
                           ? gradient_squared(sw, se, ne, nw, h, h)
                           : gradient_squared_avg(sw, se, ne, nw, h, h);
      }
    }
  }

  pou.kappa_tilde = m.kappa.cwiseProduct(grad_sum);
  return pou;
}

/// Fills the kappa-tilde weighted diagonal mass S on the fine operators.
/// Zero entries are tolerated here; the spectral solves floor them.
inline void attach_spectral_weight(FineOperators& ops, const GridHierarchy& g,
                                   const PartitionOfUnity& pou) {
  ops.S = pou.kappa_tilde * g.cell_area();
}

} // namespace cemwave
