#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cemwave/errors.hpp"

namespace cemwave {

// Index conventions on the unit square, n cells per axis, square cells:
//   cells            id = iy*n + ix,           ix,iy in [0,n)
//   vertices         id = iy*(n+1) + ix,       ix,iy in [0,n]
//   vertical edges   id = iy*(n+1) + ix        (normal +x), ix in [0,n], iy in [0,n)
//   horizontal edges id = n*(n+1) + iy*n + ix  (normal +y), ix in [0,n), iy in [0,n]
// All enumerations are lexicographic by (y, x).

struct CoarseElement {
  int id = 0;
  int cx = 0, cy = 0;            // coarse grid position
  std::vector<int> fine_cells;   // owned fine cells, lexicographic
  std::vector<int> fine_edges;   // all edges of owned cells, each once, sorted
};

struct CoarseNode {
  int id = 0;                    // index into interior node list
  int nx = 0, ny = 0;            // coarse vertex position, both in [1, n_coarse-1]
  std::array<int, 4> elements{}; // the four coarse elements of the neighborhood
};

/// Conforming fine/coarse rectangular meshes on (0,1)^2 with their
/// containment hierarchy and DOF enumerations.
class GridHierarchy {
public:
  GridHierarchy(int n_fine, int n_coarse) : n_(n_fine), nc_(n_coarse) {
    if (n_coarse < 2 || n_fine < n_coarse || n_fine % n_coarse != 0) {
      throw ConfigError("grid: n_coarse must be >= 2 and divide n_fine (got n_fine=" +
                        std::to_string(n_fine) + ", n_coarse=" + std::to_string(n_coarse) + ")");
    }
    m_ = n_ / nc_;
    elements_.resize(static_cast<std::size_t>(nc_) * nc_);
    for (int cy = 0; cy < nc_; ++cy) {
      for (int cx = 0; cx < nc_; ++cx) {
        CoarseElement& K = elements_[static_cast<std::size_t>(cy) * nc_ + cx];
        K.id = cy * nc_ + cx;
        K.cx = cx;
        K.cy = cy;
        K.fine_cells.reserve(static_cast<std::size_t>(m_) * m_);
        for (int iy = cy * m_; iy < (cy + 1) * m_; ++iy)
          for (int ix = cx * m_; ix < (cx + 1) * m_; ++ix)
            K.fine_cells.push_back(cell_id(ix, iy));
        K.fine_edges = collect_edges(K.fine_cells);
      }
    }
    nodes_.reserve(static_cast<std::size_t>(nc_ - 1) * (nc_ - 1));
    for (int ny = 1; ny < nc_; ++ny) {
      for (int nx = 1; nx < nc_; ++nx) {
        CoarseNode v;
        v.id = static_cast<int>(nodes_.size());
        v.nx = nx;
        v.ny = ny;
        v.elements = {element_id(nx - 1, ny - 1), element_id(nx, ny - 1),
                      element_id(nx - 1, ny), element_id(nx, ny)};
        nodes_.push_back(v);
      }
    }
  }

  int n_fine() const { return n_; }
  int n_coarse() const { return nc_; }
  int refinement_ratio() const { return m_; }
  double hx() const { return 1.0 / n_; }
  double Hx() const { return 1.0 / nc_; }
  double fine_diameter() const { return std::sqrt(2.0) / n_; }
  double coarse_diameter() const { return std::sqrt(2.0) / nc_; }
  double cell_area() const { return hx() * hx(); }

  int n_cells() const { return n_ * n_; }
  int n_vertices() const { return (n_ + 1) * (n_ + 1); }
  int n_edges() const { return 2 * n_ * (n_ + 1); }
  int n_elements() const { return nc_ * nc_; }
  int n_interior_nodes() const { return (nc_ - 1) * (nc_ - 1); }

  int cell_id(int ix, int iy) const { return iy * n_ + ix; }
  int cell_ix(int c) const { return c % n_; }
  int cell_iy(int c) const { return c / n_; }
  double cell_cx(int c) const { return (cell_ix(c) + 0.5) * hx(); }
  double cell_cy(int c) const { return (cell_iy(c) + 0.5) * hx(); }

  int vertex_id(int ix, int iy) const { return iy * (n_ + 1) + ix; }

  int vedge_id(int ix, int iy) const { return iy * (n_ + 1) + ix; }
  int hedge_id(int ix, int iy) const { return n_ * (n_ + 1) + iy * n_ + ix; }
  bool edge_is_vertical(int e) const { return e < n_ * (n_ + 1); }

  // Edges of a cell in the convention used by the div rows: right, left, top, bottom.
  std::array<int, 4> cell_edges(int c) const {
    const int ix = cell_ix(c), iy = cell_iy(c);
    return {vedge_id(ix + 1, iy), vedge_id(ix, iy), hedge_id(ix, iy + 1), hedge_id(ix, iy)};
  }

  bool edge_on_boundary(int e) const {
    if (edge_is_vertical(e)) {
      const int ix = e % (n_ + 1);
      return ix == 0 || ix == n_;
    }
    const int le = e - n_ * (n_ + 1);
    const int iy = le / n_;
    return iy == 0 || iy == n_;
  }

  // The one or two cells sharing an edge; missing neighbor is -1.
  std::array<int, 2> edge_cells(int e) const {
    if (edge_is_vertical(e)) {
      const int ix = e % (n_ + 1), iy = e / (n_ + 1);
      return {ix > 0 ? cell_id(ix - 1, iy) : -1, ix < n_ ? cell_id(ix, iy) : -1};
    }
    const int le = e - n_ * (n_ + 1);
    const int ix = le % n_, iy = le / n_;
    return {iy > 0 ? cell_id(ix, iy - 1) : -1, iy < n_ ? cell_id(ix, iy) : -1};
  }

  int element_id(int cx, int cy) const { return cy * nc_ + cx; }
  const CoarseElement& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
  const std::vector<CoarseElement>& elements() const { return elements_; }
  const std::vector<CoarseNode>& interior_coarse_nodes() const { return nodes_; }

  int cell_element(int c) const {
    return element_id(cell_ix(c) / m_, cell_iy(c) / m_);
  }

  std::vector<int> collect_edges(const std::vector<int>& cells) const {
    std::vector<int> edges;
    edges.reserve(cells.size() * 4);
    for (int c : cells)
      for (int e : cell_edges(c)) edges.push_back(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
  }

private:
  int n_, nc_, m_;
  std::vector<CoarseElement> elements_;
  std::vector<CoarseNode> nodes_;
};

/// An oversampled region K_{i,l}: a block of coarse elements with local DOF
/// enumerations. Interior edges encode the zero-normal-flux condition on the
/// patch boundary.
struct Patch {
  int root_element = -1;
  int layers = 0;
  std::vector<int> element_set;     // member coarse element ids, sorted
  std::vector<int> cells;           // member fine cells, global ids, sorted
  std::vector<int> interior_edges;  // fine edges with both neighbor cells inside
  std::vector<int> boundary_edges;  // remaining patch edges
  std::vector<int> cell_local;      // global cell id -> local index, -1 outside
  std::vector<int> edge_local;      // global edge id -> local interior index, -1 otherwise

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_interior_edges() const { return static_cast<int>(interior_edges.size()); }
};

/// Enlarges coarse element i by `layers` rings of coarse elements (closure
/// contact, so diagonal neighbors count), clipped at the domain boundary.
inline Patch oversample(const GridHierarchy& g, int i, int layers) {
  if (i < 0 || i >= g.n_elements()) {
    throw ConfigError("oversample: element id " + std::to_string(i) + " out of range");
  }
  if (layers < 0) throw ConfigError("oversample: negative layer count");
  const CoarseElement& root = g.element(i);
  Patch p;
  p.root_element = i;
  p.layers = layers;
  const int lo_x = std::max(0, root.cx - layers), hi_x = std::min(g.n_coarse() - 1, root.cx + layers);
  const int lo_y = std::max(0, root.cy - layers), hi_y = std::min(g.n_coarse() - 1, root.cy + layers);
  for (int cy = lo_y; cy <= hi_y; ++cy)
    for (int cx = lo_x; cx <= hi_x; ++cx) p.element_set.push_back(g.element_id(cx, cy));
  std::sort(p.element_set.begin(), p.element_set.end());

  for (int e : p.element_set) {
    const auto& K = g.element(e);
    p.cells.insert(p.cells.end(), K.fine_cells.begin(), K.fine_cells.end());
  }
  std::sort(p.cells.begin(), p.cells.end());

  p.cell_local.assign(g.n_cells(), -1);
  for (std::size_t k = 0; k < p.cells.size(); ++k) p.cell_local[p.cells[k]] = static_cast<int>(k);

  p.edge_local.assign(g.n_edges(), -1);
  std::vector<int> all_edges = g.collect_edges(p.cells);
  for (int e : all_edges) {
    const auto cs = g.edge_cells(e);
    const bool interior = cs[0] >= 0 && cs[1] >= 0 && p.cell_local[cs[0]] >= 0 && p.cell_local[cs[1]] >= 0;
    if (interior) {
      p.edge_local[e] = static_cast<int>(p.interior_edges.size());
      p.interior_edges.push_back(e);
    } else {
      p.boundary_edges.push_back(e);
    }
  }
  return p;
}

} // namespace cemwave
