#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "cemwave/assembly.hpp"
#include "cemwave/grid.hpp"
#include "oracles.hpp"

using namespace cemwave;

namespace {

MediumFields random_medium(const GridHierarchy& g, std::uint64_t seed, double contrast) {
  MediumFields m;
  m.kappa.resize(g.n_cells());
  m.rho = Eigen::VectorXd::Ones(g.n_cells());
  std::uint64_t s = seed;
  for (int c = 0; c < g.n_cells(); ++c) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    m.kappa[c] = ((s >> 40) % 2 == 0) ? 1.0 : contrast;
  }
  return m;
}

} // namespace

TEST_CASE("unit cell RT0 pair mass is the 1D interval mass") {
  const Eigen::Matrix2d m = rt0_pair_mass(1.0, 1.0, 1.0);
  CHECK(m(0, 0) == Catch::Approx(1.0 / 3));
  CHECK(m(0, 1) == Catch::Approx(1.0 / 6));
  CHECK(m(1, 1) == Catch::Approx(1.0 / 3));
}

TEST_CASE("velocity mass matches the quadrature oracle") {
  SECTION("kappa = 1 on 2x2") {
    GridHierarchy g(2, 2);
    const MediumFields m = MediumFields::constant(g, 1.0, 1.0);
    const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_velocity_mass(g, m));
    const Eigen::MatrixXd A_or = oracle::dense_velocity_mass(g, m.kappa);
    CHECK((A - A_or).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("checkerboard contrast 1e4 on 2x2") {
    GridHierarchy g(2, 2);
    MediumFields m = MediumFields::constant(g, 1.0, 1.0);
    m.kappa << 1.0, 1e4, 1e4, 1.0;
    const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_velocity_mass(g, m));
    const Eigen::MatrixXd A_or = oracle::dense_velocity_mass(g, m.kappa);
    CHECK((A - A_or).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("random contrast fields up to 8x8") {
    for (int n : {4, 8}) {
      GridHierarchy g(n, 2);
      const MediumFields m = random_medium(g, 11 + n, 1e4);
      const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_velocity_mass(g, m));
      const Eigen::MatrixXd A_or = oracle::dense_velocity_mass(g, m.kappa);
      CHECK((A - A_or).cwiseAbs().maxCoeff() <= 1e-12 * A_or.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("velocity mass scales inversely with kappa") {
  GridHierarchy g(4, 2);
  MediumFields m = random_medium(g, 3, 100.0);
  const SpMat A1 = assemble_velocity_mass(g, m);
  m.kappa *= 50.0;
  const SpMat A2 = assemble_velocity_mass(g, m);
  CHECK((Eigen::MatrixXd(A2) * 50.0 - Eigen::MatrixXd(A1)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("velocity mass rejects nonpositive kappa") {
  GridHierarchy g(2, 2);
  MediumFields m = MediumFields::constant(g, 1.0, 1.0);
  m.kappa[3] = 0.0;
  try {
    assemble_velocity_mass(g, m);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("div rows") {
  GridHierarchy g(2, 2);
  const SpMat B = assemble_div(g);
  SECTION("one row per cell has the signed unit pattern (+1, -1, +1, -1)") {
    for (int c = 0; c < g.n_cells(); ++c) {
      const auto e = g.cell_edges(c);
      CHECK(B.coeff(c, e[0]) == 1.0);
      CHECK(B.coeff(c, e[1]) == -1.0);
      CHECK(B.coeff(c, e[2]) == 1.0);
      CHECK(B.coeff(c, e[3]) == -1.0);
    }
  }
  SECTION("constant pressure annihilates interior fluxes") {
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(g.n_cells());
    const Eigen::RowVectorXd row = ones * Eigen::MatrixXd(B);
    for (int e = 0; e < g.n_edges(); ++e)
      if (!g.edge_on_boundary(e)) CHECK(row[e] == 0.0);
  }
  SECTION("a single interior edge feeds two cells with opposite sign") {
    const int e = g.vedge_id(1, 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.n_edges());
    v[e] = 1.0;
    const Eigen::VectorXd bv = B * v;
    int nonzero = 0;
    double sum = 0.0;
    for (int c = 0; c < g.n_cells(); ++c)
      if (bv[c] != 0.0) {
        ++nonzero;
        sum += bv[c];
      }
    CHECK(nonzero == 2);
    CHECK(sum == 0.0);
  }
  SECTION("matches the quadrature oracle") {
    CHECK((Eigen::MatrixXd(B) - oracle::dense_div(g)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("pressure mass") {
  GridHierarchy g(2, 2);
  SECTION("weight 1 gives cell areas") {
    const Eigen::VectorXd d = assemble_pressure_mass(g, Eigen::VectorXd::Ones(4));
    for (int c = 0; c < 4; ++c) CHECK(d[c] == Catch::Approx(0.25));
  }
  SECTION("rho = 1 makes the weighted and plain masses coincide") {
    const MediumFields m = MediumFields::constant(g, 2.0, 1.0);
    const FineOperators ops = assemble_fine_operators(g, m);
    CHECK((ops.M_rho - ops.M_plain).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("nonpositive weight is rejected") {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    w[1] = -1.0;
    CHECK_THROWS_AS(assemble_pressure_mass(g, w), DomainError);
  }
}

TEST_CASE("a-form positivity on random interior fields") {
  GridHierarchy g(8, 2);
  const MediumFields m = random_medium(g, 5, 1e4);
  const FineOperators ops = assemble_fine_operators(g, m);
  std::uint64_t s = 99;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.n_edges());
    for (int e = 0; e < g.n_edges(); ++e) {
      s = s * 6364136223846793005ull + 1442695040888963407ull;
      if (!g.edge_on_boundary(e)) v[e] = static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
    }
    if (v.norm() == 0.0) continue;
    CHECK(v.dot(ops.A * v) > 0.0);
  }
}

TEST_CASE("nodal stiffness") {
  SECTION("single-cell element matrix has zero row sums") {
    const Eigen::Matrix4d K = q1_cell_stiffness(0.25, 0.25, 1.0);
    for (int i = 0; i < 4; ++i) CHECK(K.row(i).sum() == Catch::Approx(0.0).margin(1e-14));
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SECTION("scales linearly in kappa") {
    const Eigen::Matrix4d K1 = q1_cell_stiffness(0.5, 0.5, 1.0);
    const Eigen::Matrix4d K7 = q1_cell_stiffness(0.5, 0.5, 7.0);
    CHECK((K7 - 7.0 * K1).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SECTION("assembled block matches the quadrature oracle on 2x2 cells") {
    GridHierarchy g(2, 2);
    const MediumFields m = random_medium(g, 17, 1e3);
    std::vector<int> region = {0, 1, 2, 3};
    // free node: the center vertex; everything else dirichlet
    std::vector<int> dirichlet;
    for (int vy = 0; vy <= 2; ++vy)
      for (int vx = 0; vx <= 2; ++vx)
        if (!(vx == 1 && vy == 1)) dirichlet.push_back(g.vertex_id(vx, vy));
    const NodalSystem sys = assemble_nodal_stiffness(g, m.kappa, region, dirichlet);
    REQUIRE(sys.free_nodes.size() == 1);
    const Eigen::MatrixXd K_or = oracle::dense_q1_stiffness(g, m.kappa, region);
    const int vc = g.vertex_id(1, 1);
    CHECK(sys.K_ff.coeff(0, 0) == Catch::Approx(K_or(vc, vc)).epsilon(1e-12));
    for (std::size_t k = 0; k < dirichlet.size(); ++k)
      CHECK(sys.K_fd.coeff(0, static_cast<int>(k)) ==
            Catch::Approx(K_or(vc, dirichlet[k])).margin(1e-12));
  }
  SECTION("empty Dirichlet set is rejected as singular") {
    GridHierarchy g(2, 2);
    CHECK_THROWS_AS(assemble_nodal_stiffness(g, Eigen::VectorXd::Ones(4), {0, 1, 2, 3}, {}),
                    NumericalError);
  }
}
