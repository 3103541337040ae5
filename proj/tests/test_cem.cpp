#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "cemwave/cem.hpp"
#include "cemwave/medium.hpp"
#include "cemwave/pou.hpp"
#include "cemwave/spectral.hpp"
#include "oracles.hpp"

using namespace cemwave;

namespace {

struct Setup {
  GridHierarchy g;
  MediumFields m;
  FineOperators ops;
  AuxiliarySpace aux;
};

Setup make_setup(int n_fine, int n_coarse, int J, std::uint64_t seed, double contrast) {
  GridHierarchy g(n_fine, n_coarse);
  MediumFields m;
  m.kappa = contrast == 1.0 ? Eigen::VectorXd::Ones(g.n_cells())
                            : generate_kappa(g, {seed, contrast, 2, 6});
  m.rho = Eigen::VectorXd::Ones(g.n_cells());
  FineOperators ops = assemble_fine_operators(g, m);
  attach_spectral_weight(ops, g, solve_pou(g, m));
  AuxiliarySpace aux = build_auxiliary_space_uniform(g, ops, J);
  return {std::move(g), std::move(m), std::move(ops), std::move(aux)};
}

} // namespace

TEST_CASE("basis matches the dense saddle oracle on the tiny grid") {
  Setup su = make_setup(4, 2, 1, 3, 10.0);
  for (int i = 0; i < su.g.n_elements(); ++i) {
    auto [psi, mu, rel] = build_cem_basis(su.g, su.ops, su.aux, i, 0, 1);
    CHECK(rel <= 1e-10);
    const auto [psi_or, mu_or] = oracle::dense_cem_solve(su.g, su.m.kappa, su.aux, i, 0, 1);
    const double scale = std::max(psi_or.cwiseAbs().maxCoeff(), 1e-300);
    CHECK((psi - psi_or).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((mu - mu_or).cwiseAbs().maxCoeff() <= 1e-10 * std::max(mu_or.cwiseAbs().maxCoeff(), 1e-300));
  }
}

TEST_CASE("homogeneous right-hand side gives the zero solution") {
  Setup su = make_setup(4, 2, 2, 5, 10.0);
  detail::PatchSolver solver(su.g, su.ops, su.aux, 0, 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(solver.ne + solver.nc + solver.na);
  const Eigen::VectorXd sol = solver.lu.solve(zero);
  CHECK(sol.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full retention makes pi the identity and the system stays solvable") {
  Setup su = make_setup(4, 2, 4, 11, 10.0); // J = dim Q_h(K_i)
  CHECK(su.aux.M == su.g.n_cells());
  for (int i = 0; i < su.g.n_elements(); ++i)
    for (int j = 0; j < 4; ++j) {
      auto [psi, mu, rel] = build_cem_basis(su.g, su.ops, su.aux, i, j, 1);
      CHECK(rel <= 1e-10);
    }
}

TEST_CASE("basis support is confined to the patch") {
  Setup su = make_setup(16, 4, 2, 17, 1e3);
  const int i = su.g.element_id(1, 1);
  const Patch patch = oversample(su.g, i, 1);
  auto [psi, mu, rel] = build_cem_basis(su.g, su.ops, su.aux, i, 0, 1);
  for (int e = 0; e < su.g.n_edges(); ++e)
    if (patch.edge_local[e] < 0) CHECK(psi[e] == 0.0);
  for (int c = 0; c < su.g.n_cells(); ++c)
    if (patch.cell_local[c] < 0) CHECK(mu[c] == 0.0);
}

TEST_CASE("constraint readout identity") {
  Setup su = make_setup(16, 4, 2, 29, 1e4);
  const int i = su.g.element_id(2, 1);
  const int layers = 1;
  const Patch patch = oversample(su.g, i, layers);
  for (int j = 0; j < 2; ++j) {
    auto [psi, mu, rel] = build_cem_basis(su.g, su.ops, su.aux, i, j, layers);
    const Eigen::VectorXd pimu = project_pi(mu, su.aux);
    const Eigen::VectorXd bpsi = su.ops.B * psi;
    for (int m : patch.element_set)
      for (int k = 0; k < su.aux.blocks[m].retained; ++k) {
        const Eigen::VectorXd pkm = Eigen::VectorXd(su.aux.P.col(su.aux.column(m, k)));
        const double lhs = pimu.dot(su.aux.S_diag.cwiseProduct(pkm)) + pkm.dot(bpsi);
        const double rhs = (m == i && k == j) ? 1.0 : 0.0;
        CHECK(std::abs(lhs - rhs) <= 1e-10);
      }
  }
}

TEST_CASE("velocity space assembly and the Gram matrix") {
  SECTION("Gram is symmetric and matches the dense oracle on the tiny grid") {
    Setup su = make_setup(4, 2, 1, 3, 10.0);
    CemOptions opts;
    opts.allow_rank_deficient = true; // whole-domain patches are rank-deficient by one
    const CemVelocityBasis cem = assemble_velocity_space(su.g, su.ops, su.aux, 1, opts);
    const Eigen::MatrixXd Mv =
        Eigen::MatrixXd(SpMat(cem.Psi.transpose() * (su.ops.A * cem.Psi).eval()));
    CHECK((Mv - Mv.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Mv.cwiseAbs().maxCoeff());

    const Eigen::MatrixXd A_or = oracle::dense_velocity_mass(su.g, su.m.kappa);
    Eigen::MatrixXd Psi_or(su.g.n_edges(), su.aux.M);
    for (int i = 0; i < su.g.n_elements(); ++i)
      Psi_or.col(i) = oracle::dense_cem_solve(su.g, su.m.kappa, su.aux, i, 0, 1).first;
    const Eigen::MatrixXd Mv_or = Psi_or.transpose() * A_or * Psi_or;
    CHECK((Mv - Mv_or).cwiseAbs().maxCoeff() <= 1e-10 * Mv_or.cwiseAbs().maxCoeff());
  }
  SECTION("columns live on interior patch edges") {
    Setup su = make_setup(16, 4, 2, 23, 100.0);
    const CemVelocityBasis cem = assemble_velocity_space(su.g, su.ops, su.aux, 1);
    for (int i = 0; i < su.g.n_elements(); ++i) {
      const Patch patch = oversample(su.g, i, 1);
      for (int j = 0; j < 2; ++j) {
        const Eigen::VectorXd col = Eigen::VectorXd(cem.Psi.col(su.aux.column(i, j)));
        for (int e = 0; e < su.g.n_edges(); ++e)
          if (patch.edge_local[e] < 0) CHECK(col[e] == 0.0);
      }
    }
  }
  SECTION("whole-domain patches trip the rank check unless waived") {
    Setup su = make_setup(4, 2, 4, 11, 10.0);
    CHECK_THROWS_AS(assemble_velocity_space(su.g, su.ops, su.aux, 1), NumericalError);
    CemOptions opts;
    opts.allow_rank_deficient = true;
    CHECK_NOTHROW(assemble_velocity_space(su.g, su.ops, su.aux, 1, opts));
  }
}

TEST_CASE("localization error decays with the oversampling radius") {
  Setup su = make_setup(40, 4, 2, 41, 1e4);
  const int i = su.g.element_id(1, 1);
  std::vector<Eigen::VectorXd> psi;
  for (int layers = 1; layers <= 4; ++layers)
    psi.push_back(std::get<0>(build_cem_basis(su.g, su.ops, su.aux, i, 0, layers)));
  std::vector<double> diff;
  for (int k = 0; k + 1 < static_cast<int>(psi.size()); ++k) {
    const Eigen::VectorXd d = psi[k + 1] - psi[k];
    diff.push_back(std::sqrt(std::max(0.0, d.dot(su.ops.A * d))));
  }
  CHECK(diff[0] > 0.0);
  for (std::size_t k = 0; k + 1 < diff.size(); ++k) CHECK(diff[k + 1] <= diff[k] + 1e-14);
}
