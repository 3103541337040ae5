#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "cemwave/errors.hpp"
#include "cemwave/grid.hpp"

namespace cemwave {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Cellwise permeability and density, sampled at fine cell centers.
struct MediumFields {
  Eigen::VectorXd kappa;
  Eigen::VectorXd rho;

  void validate(const GridHierarchy& g) const {
    if (kappa.size() != g.n_cells() || rho.size() != g.n_cells())
      throw ConfigError("medium: field size does not match the fine grid");
    for (int c = 0; c < kappa.size(); ++c) {
      if (!(kappa[c] > 0.0))
        throw DomainError("medium: nonpositive kappa at cell " + std::to_string(c));
      if (!(rho[c] > 0.0))
        throw DomainError("medium: nonpositive rho at cell " + std::to_string(c));
    }
  }

  static MediumFields constant(const GridHierarchy& g, double kappa_value, double rho_value) {
    MediumFields m;
    m.kappa = Eigen::VectorXd::Constant(g.n_cells(), kappa_value);
    m.rho = Eigen::VectorXd::Constant(g.n_cells(), rho_value);
    m.validate(g);
    return m;
  }
};

// RT0 element mass on a single hx-by-hy cell with constant 1/kappa weight.
// Edge order in each 2x2 block: (left,right) for the x pair, (bottom,top) for y.
inline Eigen::Matrix2d rt0_pair_mass(double h_par, double h_perp, double inv_kappa) {
  Eigen::Matrix2d m;
  m << h_par / 3.0, h_par / 6.0, h_par / 6.0, h_par / 3.0;
  return (inv_kappa / h_perp) * m;
}

/// Velocity mass of a(.,.) = int kappa^-1 v.w on all fine edges.
inline SpMat assemble_velocity_mass(const GridHierarchy& g, const MediumFields& m) {
  m.validate(g);
  const double h = g.hx();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(g.n_cells()) * 8);
  for (int c = 0; c < g.n_cells(); ++c) {
    const double ik = 1.0 / m.kappa[c];
    const auto e = g.cell_edges(c); // right, left, top, bottom
    const Eigen::Matrix2d mx = rt0_pair_mass(h, h, ik);
    const int vx[2] = {e[1], e[0]}; // left, right
    const int vy[2] = {e[3], e[2]}; // bottom, top
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        trip.emplace_back(vx[a], vx[b], mx(a, b));
        trip.emplace_back(vy[a], vy[b], mx(a, b));
      }
  }
  SpMat A(g.n_edges(), g.n_edges());
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

/// Signed unit-flux divergence rows: (B v)_c = integral of div v over cell c.
inline SpMat assemble_div(const GridHierarchy& g) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(g.n_cells()) * 4);
  for (int c = 0; c < g.n_cells(); ++c) {
    const auto e = g.cell_edges(c);
    trip.emplace_back(c, e[0], 1.0);  // right
    trip.emplace_back(c, e[1], -1.0); // left
    trip.emplace_back(c, e[2], 1.0);  // top
    trip.emplace_back(c, e[3], -1.0); // bottom
  }
  SpMat B(g.n_cells(), g.n_edges());
  B.setFromTriplets(trip.begin(), trip.end());
  B.makeCompressed();
  return B;
}

/// Diagonal weighted pressure mass: entry = weight(c) * area(c).
inline Eigen::VectorXd assemble_pressure_mass(const GridHierarchy& g, const Eigen::VectorXd& weight) {
  if (weight.size() != g.n_cells())
    throw ConfigError("pressure mass: weight size does not match the fine grid");
  Eigen::VectorXd d(g.n_cells());
  const double area = g.cell_area();
  for (int c = 0; c < g.n_cells(); ++c) {
    if (!(weight[c] > 0.0))
      throw DomainError("pressure mass: nonpositive weight at cell " + std::to_string(c));
    d[c] = weight[c] * area;
  }
  return d;
}

/// All fine-scale operators the multiscale construction consumes.
/// S (the kappa-tilde weighted mass) is filled after the partition of unity
/// is available.
struct FineOperators {
  SpMat A;                 // kappa^-1 weighted RT0 velocity mass, all edges
  SpMat B;                 // div rows, cells x edges
  Eigen::VectorXd M_rho;   // diagonal rho-weighted cell mass
  Eigen::VectorXd M_plain; // diagonal plain cell mass
  Eigen::VectorXd S;       // diagonal kappa-tilde weighted cell mass
  std::vector<bool> boundary_edge_mask;
  std::vector<int> interior_edges;   // global ids of non-boundary edges
  std::vector<int> edge_interior_id; // global edge -> interior index, -1 on boundary
};

inline FineOperators assemble_fine_operators(const GridHierarchy& g, const MediumFields& m) {
  FineOperators ops;
  ops.A = assemble_velocity_mass(g, m);
  ops.B = assemble_div(g);
  ops.M_rho = assemble_pressure_mass(g, m.rho);
  ops.M_plain = assemble_pressure_mass(g, Eigen::VectorXd::Ones(g.n_cells()));
  ops.boundary_edge_mask.resize(g.n_edges());
  ops.edge_interior_id.assign(g.n_edges(), -1);
  for (int e = 0; e < g.n_edges(); ++e) {
    ops.boundary_edge_mask[e] = g.edge_on_boundary(e);
    if (!ops.boundary_edge_mask[e]) {
      ops.edge_interior_id[e] = static_cast<int>(ops.interior_edges.size());
      ops.interior_edges.push_back(e);
    }
  }
  return ops;
}

/// Restriction of a symmetric sparse matrix to an index subset (same set on
/// rows and columns).
inline SpMat restrict_sym(const SpMat& A, const std::vector<int>& idx, const std::vector<int>& inv) {
  std::vector<Triplet> trip;
  for (int jl = 0; jl < static_cast<int>(idx.size()); ++jl) {
    const int j = idx[jl];
    for (SpMat::InnerIterator it(A, j); it; ++it) {
      const int il = inv[it.row()];
      if (il >= 0) trip.emplace_back(il, jl, it.value());
    }
  }
  SpMat R(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
  R.setFromTriplets(trip.begin(), trip.end());
  R.makeCompressed();
  return R;
}

// Q1 stiffness on an hx-by-hy rectangle, node order SW, SE, NE, NW.
inline Eigen::Matrix4d q1_cell_stiffness(double hx, double hy, double kappa) {
  static const double kx[4][4] = {{2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}};
  static const double ky[4][4] = {{2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
  Eigen::Matrix4d K;
  const double ax = hy / hx / 6.0, ay = hx / hy / 6.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) K(i, j) = kappa * (ax * kx[i][j] + ay * ky[i][j]);
  return K;
}

/// kappa-weighted bilinear nodal stiffness over a cell region with Dirichlet
/// elimination. Keeps the free-free block and the free-Dirichlet coupling so
/// callers can solve with inhomogeneous boundary data.
struct NodalSystem {
  SpMat K_ff;                    // free x free
  SpMat K_fd;                    // free x dirichlet
  std::vector<int> free_nodes;   // global vertex ids
  std::vector<int> dirichlet_nodes;
  std::vector<int> free_index;      // global vertex -> free index, -1 otherwise
  std::vector<int> dirichlet_index; // global vertex -> dirichlet index, -1 otherwise
};

inline NodalSystem assemble_nodal_stiffness(const GridHierarchy& g, const Eigen::VectorXd& kappa,
                                            const std::vector<int>& region_cells,
                                            const std::vector<int>& dirichlet_nodes) {
  if (region_cells.empty()) throw ConfigError("nodal stiffness: empty region");
  if (dirichlet_nodes.empty())
    throw NumericalError("nodal stiffness: empty Dirichlet set gives a singular system");

  NodalSystem sys;
  sys.free_index.assign(g.n_vertices(), -1);
  sys.dirichlet_index.assign(g.n_vertices(), -1);
  sys.dirichlet_nodes = dirichlet_nodes;
  for (std::size_t k = 0; k < dirichlet_nodes.size(); ++k)
    sys.dirichlet_index[dirichlet_nodes[k]] = static_cast<int>(k);
  for (int c : region_cells) {
    const int ix = g.cell_ix(c), iy = g.cell_iy(c);
    const int vs[4] = {g.vertex_id(ix, iy), g.vertex_id(ix + 1, iy), g.vertex_id(ix + 1, iy + 1),
                       g.vertex_id(ix, iy + 1)};
    for (int v : vs)
      if (sys.dirichlet_index[v] < 0 && sys.free_index[v] < 0) {
        sys.free_index[v] = static_cast<int>(sys.free_nodes.size());
        sys.free_nodes.push_back(v);
      }
  }

  std::vector<Triplet> tff, tfd;
  const double h = g.hx();
  for (int c : region_cells) {
    const int ix = g.cell_ix(c), iy = g.cell_iy(c);
    const int vs[4] = {g.vertex_id(ix, iy), g.vertex_id(ix + 1, iy), g.vertex_id(ix + 1, iy + 1),
                       g.vertex_id(ix, iy + 1)};
    const Eigen::Matrix4d K = q1_cell_stiffness(h, h, kappa[c]);
    for (int a = 0; a < 4; ++a) {
      const int ra = sys.free_index[vs[a]];
      if (ra < 0) continue; // dirichlet row eliminated
      for (int b = 0; b < 4; ++b) {
        const int rb = sys.free_index[vs[b]];
        if (rb >= 0)
          tff.emplace_back(ra, rb, K(a, b));
        else
          tfd.emplace_back(ra, sys.dirichlet_index[vs[b]], K(a, b));
      }
    }
  }
  sys.K_ff.resize(static_cast<int>(sys.free_nodes.size()), static_cast<int>(sys.free_nodes.size()));
  sys.K_ff.setFromTriplets(tff.begin(), tff.end());
  sys.K_ff.makeCompressed();
  sys.K_fd.resize(static_cast<int>(sys.free_nodes.size()), static_cast<int>(sys.dirichlet_nodes.size()));
  sys.K_fd.setFromTriplets(tfd.begin(), tfd.end());
  sys.K_fd.makeCompressed();
  return sys;
}

} // namespace cemwave
