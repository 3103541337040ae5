#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cemwave/cem.hpp"
#include "cemwave/config.hpp"
#include "cemwave/dynamics.hpp"
#include "cemwave/field_file.hpp"
#include "cemwave/medium.hpp"
#include "cemwave/metrics.hpp"
#include "cemwave/pou.hpp"
#include "cemwave/sources.hpp"
#include "cemwave/spectral.hpp"
#include "cemwave/vtk.hpp"

namespace cemwave {

inline MediumFields build_medium(const ExperimentConfig& cfg, const GridHierarchy& g) {
  MediumFields m;
  if (cfg.medium == "constant") {
    if (!(cfg.medium_value > 0.0)) throw ConfigError("config: medium_value must be positive");
    m.kappa = Eigen::VectorXd::Constant(g.n_cells(), cfg.medium_value);
  } else if (cfg.medium == "file") {
    m.kappa = load_kappa_file(cfg.medium_file, g);
  } else {
    m.kappa = generate_kappa(g, {cfg.seed, cfg.contrast, cfg.channels, cfg.inclusions});
  }
  if (!cfg.rho_file.empty()) {
    const FieldData f = read_field(cfg.rho_file);
    m.rho = resample_nearest(f, g.n_fine());
  } else {
    m.rho = Eigen::VectorXd::Constant(g.n_cells(), cfg.rho);
  }
  m.validate(g);
  return m;
}

inline SourceTerm build_source(const ExperimentConfig& cfg, const GridHierarchy& g) {
  SourceTerm f;
  if (cfg.source == "none") return f;
  f.active = true;
  f.spatial.resize(g.n_cells());
  if (cfg.source == "example1") {
    for (int c = 0; c < g.n_cells(); ++c) f.spatial[c] = source_example1(g.cell_cx(c), g.cell_cy(c));
  } else {
    const double f0 = cfg.f0, delta = cfg.delta, cx = cfg.center_x, cy = cfg.center_y;
    const bool literal = cfg.wavelet_literal_sign;
    for (int c = 0; c < g.n_cells(); ++c)
      f.spatial[c] = wavelet_space(g.cell_cx(c), g.cell_cy(c), delta, cx, cy, literal);
    const double shift = cfg.midpoint_source ? 0.5 * cfg.tau : 0.0;
    f.profile = [f0, shift](double t) { return wavelet_time(t - shift, f0); };
  }
  return f;
}

/// RT0 cell-center velocity magnitude from edge fluxes.
inline Eigen::VectorXd cell_velocity_magnitude(const GridHierarchy& g, const Eigen::VectorXd& edges) {
  Eigen::VectorXd mag(g.n_cells());
  const double h = g.hx();
  for (int c = 0; c < g.n_cells(); ++c) {
    const auto e = g.cell_edges(c); // right, left, top, bottom
    const double vx = (edges[e[1]] + edges[e[0]]) / (2.0 * h);
    const double vy = (edges[e[3]] + edges[e[2]]) / (2.0 * h);
    mag[c] = std::sqrt(vx * vx + vy * vy);
  }
  return mag;
}

struct SweepPointResult {
  int n_coarse = 0, J = 0, ell = 0;
  double Lambda = 0.0;
  std::vector<ErrorRow> rows;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<SweepPointResult> points;
  std::filesystem::path out_dir;
};

namespace detail {

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<ElementEigenBlock> sliced_blocks(std::vector<ElementEigenBlock> blocks, int J) {
  for (ElementEigenBlock& b : blocks) {
    if (J > static_cast<int>(b.eigenvalues.size()))
      throw InternalError("sweep cache: requested J exceeds solved pairs");
    b.retained = J;
  }
  return blocks;
}

inline void write_csv_row(std::ostream& out, const SweepPointResult& pt, const ErrorRow& r,
                          bool with_timing, bool with_flags) {
  out << pt.n_coarse << ',' << pt.J << ',' << pt.ell << ',' << r.t << ',' << r.e_pre << ','
      << r.e_vel << ',' << pt.Lambda;
  if (with_timing) out << ',' << pt.offline_seconds << ',' << pt.online_seconds;
  if (with_flags) out << ',' << (r.pre_absolute ? 1 : 0) << ',' << (r.vel_absolute ? 1 : 0);
  out << '\n';
}

inline std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out.imbue(std::locale::classic());
  out.precision(12);
  return out;
}

} // namespace detail

/// Runs the configured sweep: one fine reference trajectory, then for every
/// (n_coarse, J, ell) point the offline construction, the reduced run and the
/// error rows. Writes results.csv (with timings), errors.csv (deterministic,
/// no timings) and timings.csv into the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  ExperimentResult result;
  result.out_dir = fs::path(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(result.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + result.out_dir.string());
  {
    std::ofstream echo(result.out_dir / "resolved.cfg");
    if (!echo) throw IoError("cannot write resolved config");
    echo << render_config(cfg);
  }

  const GradientSampling sampling = cfg.gradient_sampling == "center" ? GradientSampling::CellCenter
                                                                      : GradientSampling::CellAverage;
  const PressureWeight weight =
      cfg.pressure_weight == "rho" ? PressureWeight::Rho : PressureWeight::Plain;

  // the fine grid, medium and reference trajectory are shared by all points
  const GridHierarchy g(cfg.n_fine, cfg.n_coarse.front());
  const MediumFields medium = build_medium(cfg, g);
  const SourceTerm f = build_source(cfg, g);
  const FineOperators fine_ops = assemble_fine_operators(g, medium);

  if (log) *log << "fine reference: n_fine=" << cfg.n_fine << ", " << steps_for(cfg.T, cfg.tau)
                << " steps\n";
  const Eigen::VectorXd zero_v = Eigen::VectorXd::Zero(g.n_edges());
  const Eigen::VectorXd zero_p = Eigen::VectorXd::Zero(g.n_cells());
  const FineRunResult fine = run_fine_reference(g, fine_ops, f, zero_v, zero_p, cfg.tau, cfg.T,
                                                cfg.snapshots);

  if (cfg.dump_fields && !fine.snapshots.empty()) {
    const Snapshot& last = fine.snapshots.back();
    write_field((result.out_dir / "p_ref.field").string(),
                {cfg.n_fine, cfg.n_fine, "pressure", last.p});
    write_field((result.out_dir / "vmag_ref.field").string(),
                {cfg.n_fine, cfg.n_fine, "velocity_magnitude", cell_velocity_magnitude(g, last.v)});
    if (cfg.write_vtk) {
      write_vtk_cell_scalar((result.out_dir / "p_ref.vtk").string(), "pressure", cfg.n_fine,
                            cfg.n_fine, g.hx(), last.p);
    }
  }

  for (int nc : cfg.n_coarse) {
    const GridHierarchy gc(cfg.n_fine, nc);
    FineOperators ops = assemble_fine_operators(gc, medium);
    const auto t_pou = std::chrono::steady_clock::now();
    const PartitionOfUnity pou = solve_pou(gc, medium, sampling);
    attach_spectral_weight(ops, gc, pou);
    const double pou_seconds = detail::seconds_since(t_pou);

    int J_max = 0;
    for (int J : cfg.J) J_max = std::max(J_max, J);
    const int dim_local = gc.refinement_ratio() * gc.refinement_ratio();
    if (J_max > dim_local)
      throw ConfigError("sweep point n_coarse=" + std::to_string(nc) + ": J=" +
                        std::to_string(J_max) + " exceeds the local dimension " +
                        std::to_string(dim_local));
    const auto t_spec = std::chrono::steady_clock::now();
    std::vector<ElementEigenBlock> blocks(gc.n_elements());
    parallel_for(gc.n_elements(),
                 [&](int i) { blocks[i] = solve_local_spectral(gc, ops, i, J_max, 1); });
    const double spectral_seconds = detail::seconds_since(t_spec);

    for (int J : cfg.J) {
      const AuxiliarySpace aux = build_auxiliary_space(gc, ops, detail::sliced_blocks(blocks, J));
      if (cfg.eigen_csv) {
        std::ostringstream name;
        name << "eigenvalues_nc" << nc << "_J" << J << ".csv";
        write_eigen_csv(aux, gc, (result.out_dir / name.str()).string());
      }
      for (int ell : cfg.ell) {
        SweepPointResult pt;
        pt.n_coarse = nc;
        pt.J = J;
        pt.ell = ell;
        pt.Lambda = aux.Lambda;
        try {
          const auto t_off = std::chrono::steady_clock::now();
          const CemVelocityBasis cem = assemble_velocity_space(gc, ops, aux, ell);
          const ReducedSystem sys = assemble_reduced(gc, ops, aux, cem, weight);
          const CflReport cfl = check_cfl(sys, cfg.tau);
          if (cfl.converged && !cfl.stable)
            throw NumericalError("tau=" + std::to_string(cfg.tau) + " exceeds tau_max=" +
                                 std::to_string(cfl.tau_max));
          pt.offline_seconds = pou_seconds + spectral_seconds + detail::seconds_since(t_off);

          const auto t_on = std::chrono::steady_clock::now();
          WaveState state = project_initial(zero_v, zero_p, sys, ops, cfg.tau);
          const RunResult run = run_reduced(sys, f, std::move(state), cfg.T, cfg.snapshots);
          const std::vector<Snapshot> expanded = expand_snapshots(run.snapshots, sys);
          pt.rows = error_metrics(fine.snapshots, expanded, fine_ops);
          pt.online_seconds = detail::seconds_since(t_on);

          if (cfg.dump_fields && !expanded.empty()) {
            std::ostringstream tag;
            tag << "nc" << nc << "_J" << J << "_l" << ell;
            const Snapshot& last = expanded.back();
            write_field((result.out_dir / ("p_ms_" + tag.str() + ".field")).string(),
                        {cfg.n_fine, cfg.n_fine, "pressure", last.p});
            write_field((result.out_dir / ("vmag_ms_" + tag.str() + ".field")).string(),
                        {cfg.n_fine, cfg.n_fine, "velocity_magnitude",
                         cell_velocity_magnitude(gc, last.v)});
            if (cfg.write_vtk)
              write_vtk_cell_scalar((result.out_dir / ("p_ms_" + tag.str() + ".vtk")).string(),
                                    "pressure", cfg.n_fine, cfg.n_fine, gc.hx(), last.p);
          }
        } catch (const std::exception& e) {
          throw NumericalError("sweep point (n_coarse=" + std::to_string(nc) + ", J=" +
                               std::to_string(J) + ", ell=" + std::to_string(ell) + "): " + e.what());
        }
        if (log)
          *log << "point n_coarse=" << nc << " J=" << J << " ell=" << ell
               << ": e_pre(T)=" << (pt.rows.empty() ? 0.0 : pt.rows.back().e_pre)
               << " e_vel(T)=" << (pt.rows.empty() ? 0.0 : pt.rows.back().e_vel)
               << " Lambda=" << pt.Lambda << "\n";
        result.points.push_back(std::move(pt));
      }
    }
  }

  auto results_csv = detail::open_csv(result.out_dir / "results.csv");
  results_csv << "n_coarse,J,ell,t,e_pre,e_vel,Lambda,offline_seconds,online_seconds\n";
  auto errors_csv = detail::open_csv(result.out_dir / "errors.csv");
  errors_csv << "n_coarse,J,ell,t,e_pre,e_vel,Lambda,pre_absolute,vel_absolute\n";
  auto timings_csv = detail::open_csv(result.out_dir / "timings.csv");
  timings_csv << "n_coarse,J,ell,offline_seconds,online_seconds\n";
  for (const SweepPointResult& pt : result.points) {
    for (const ErrorRow& r : pt.rows) {
      detail::write_csv_row(results_csv, pt, r, true, false);
      detail::write_csv_row(errors_csv, pt, r, false, true);
    }
    timings_csv << pt.n_coarse << ',' << pt.J << ',' << pt.ell << ',' << pt.offline_seconds << ','
                << pt.online_seconds << '\n';
  }
  return result;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant battery on the first sweep point of a configuration.
inline std::vector<CheckResult> run_checks(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  validate_config(cfg);
  std::vector<CheckResult> out;
  auto push = [&](const std::string& name, bool pass, const std::string& detail) {
    out.push_back({name, pass, detail});
    if (log) *log << (pass ? "[ OK ] " : "[FAIL] ") << name << ": " << detail << "\n";
  };
  std::ostringstream msg;
  msg.precision(3);

  const int nc = cfg.n_coarse.front();
  const int J = cfg.J.front();
  const int ell = cfg.ell.front();
  const GridHierarchy g(cfg.n_fine, nc);
  const MediumFields medium = build_medium(cfg, g);

  // grid counts
  {
    const bool ok = g.n_elements() == nc * nc && g.n_edges() == 2 * cfg.n_fine * (cfg.n_fine + 1) &&
                    g.n_interior_nodes() == (nc - 1) * (nc - 1);
    push("grid_counts", ok, "N=" + std::to_string(g.n_elements()));
  }

  FineOperators ops = assemble_fine_operators(g, medium);
  const PartitionOfUnity pou = solve_pou(g, medium);
  attach_spectral_weight(ops, g, pou);

  // partition of unity away from the boundary
  {
    const int m = g.refinement_ratio();
    double worst = 0.0;
    for (int vy = m; vy <= g.n_fine() - m; ++vy)
      for (int vx = m; vx <= g.n_fine() - m; ++vx) {
        double sum = 0.0;
        for (const ChiField& chi : pou.chi) sum += chi.at(vx, vy);
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    msg.str("");
    msg << "max |sum chi - 1| = " << worst;
    push("pou_partition_of_unity", worst <= 1e-10, msg.str());
  }
  {
    double lo = 0.0, hi = 1.0;
    for (const ChiField& chi : pou.chi) {
      lo = std::min(lo, chi.values.minCoeff());
      hi = std::max(hi, chi.values.maxCoeff());
    }
    msg.str("");
    msg << "range [" << lo << ", " << hi << "]";
    push("pou_maximum_principle", lo >= -1e-12 && hi <= 1.0 + 1e-12, msg.str());
  }

  // spectral invariants on a few elements
  {
    double worst_l1 = 0.0, worst_orth = 0.0;
    const int stride = std::max(1, g.n_elements() / 8);
    for (int i = 0; i < g.n_elements(); i += stride) {
      const ElementEigenBlock blk = solve_local_spectral(g, ops, i, std::min(J + 1, g.refinement_ratio() * g.refinement_ratio()), 1);
      worst_l1 = std::max(worst_l1, std::abs(blk.eigenvalues[0]));
      Eigen::VectorXd s(blk.cells.size());
      for (std::size_t r = 0; r < blk.cells.size(); ++r) s[r] = ops.S[blk.cells[r]];
      const Eigen::MatrixXd Gm = blk.vectors.transpose() * s.asDiagonal() * blk.vectors;
      worst_orth = std::max(worst_orth,
                            (Gm - Eigen::MatrixXd::Identity(Gm.rows(), Gm.cols())).cwiseAbs().maxCoeff());
    }
    msg.str("");
    msg << "max |lambda_1| = " << worst_l1 << ", max orthonormality defect = " << worst_orth;
    push("spectral_invariants", worst_l1 <= 1e-10 && worst_orth <= 1e-10, msg.str());
  }

  // CEM build, Gram definiteness and saddle residuals
  try {
    const AuxiliarySpace aux = build_auxiliary_space_uniform(g, ops, J);
    const CemVelocityBasis cem = assemble_velocity_space(g, ops, aux, ell);
    msg.str("");
    msg << "max saddle residual = " << cem.max_residual;
    push("cem_residual_and_gram", cem.max_residual <= 1e-10, msg.str());

    const ReducedSystem sys = assemble_reduced(g, ops, aux, cem);
    const CflReport cfl = check_cfl(sys, cfg.tau);
    msg.str("");
    msg << "tau = " << cfg.tau << ", tau_max = " << cfl.tau_max
        << (cfl.converged ? "" : " (power iteration did not converge; check skipped)");
    push("cfl", !cfl.converged || cfl.stable, msg.str());

    // short conservation probe with seeded data
    Eigen::VectorXd hv(g.n_edges()), hp(g.n_cells());
    {
      detail::Rng rng(cfg.seed + 1);
      for (int e = 0; e < g.n_edges(); ++e) hv[e] = g.edge_on_boundary(e) ? 0.0 : rng.uniform(-1, 1);
      for (int c = 0; c < g.n_cells(); ++c) hp[c] = rng.uniform(-1, 1);
    }
    WaveState state = project_initial(hv, hp, sys, ops, cfg.tau);
    const long steps = std::min<long>(200, steps_for(cfg.T, cfg.tau));
    double e_ref = 0.0, drift = 0.0;
    for (long n = 0; n < steps; ++n) {
      leapfrog_step(state, sys, Eigen::VectorXd::Zero(sys.dim_p()));
      const double e = cross_staggered_energy(state, sys);
      if (n == 0)
        e_ref = e;
      else
        drift = std::max(drift, std::abs(e - e_ref) / std::max(std::abs(e_ref), 1e-300));
    }
    msg.str("");
    msg << "relative cross-staggered drift over " << steps << " steps = " << drift;
    push("energy_conservation_probe", drift <= 1e-10, msg.str());
  } catch (const std::exception& e) {
    push("cem_pipeline", false, e.what());
  }

  return out;
}

/// Diagnostic field dumps for the CLI `fields` subcommand.
struct FieldDumpSelection {
  bool kappa = false;
  bool kappa_tilde = false;
  bool chi_sum = false;
  std::vector<int> chi_nodes;                 // interior node indices
  std::vector<std::pair<int, int>> psi_cols;  // (element, j)
  bool eigen_csv = false;
};

inline void dump_diagnostic_fields(const ExperimentConfig& cfg, const FieldDumpSelection& sel,
                                   std::ostream* log = nullptr) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  const int nc = cfg.n_coarse.front();
  const GridHierarchy g(cfg.n_fine, nc);
  const MediumFields medium = build_medium(cfg, g);
  auto emit = [&](const std::string& name, const std::string& kind, const Eigen::VectorXd& cells) {
    write_field((dir / (name + ".field")).string(), {g.n_fine(), g.n_fine(), kind, cells});
    if (cfg.write_vtk)
      write_vtk_cell_scalar((dir / (name + ".vtk")).string(), kind, g.n_fine(), g.n_fine(), g.hx(),
                            cells);
    if (log) *log << "wrote " << (dir / (name + ".field")).string() << "\n";
  };

  if (sel.kappa) emit("kappa", "kappa", medium.kappa);

  const bool need_pou = sel.kappa_tilde || sel.chi_sum || !sel.chi_nodes.empty() ||
                        !sel.psi_cols.empty() || sel.eigen_csv;
  if (!need_pou) return;
  FineOperators ops = assemble_fine_operators(g, medium);
  const PartitionOfUnity pou = solve_pou(g, medium);
  attach_spectral_weight(ops, g, pou);
  if (sel.kappa_tilde) emit("kappa_tilde", "kappa_tilde", pou.kappa_tilde);

  auto chi_on_cells = [&](const ChiField& chi) {
    Eigen::VectorXd cells(g.n_cells());
    for (int c = 0; c < g.n_cells(); ++c) {
      const int ix = g.cell_ix(c), iy = g.cell_iy(c);
      cells[c] = 0.25 * (chi.at(ix, iy) + chi.at(ix + 1, iy) + chi.at(ix + 1, iy + 1) +
                         chi.at(ix, iy + 1));
    }
    return cells;
  };
  if (sel.chi_sum) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(g.n_cells());
    for (const ChiField& chi : pou.chi) sum += chi_on_cells(chi);
    emit("chi_sum", "chi", sum);
  }
  for (int j : sel.chi_nodes) {
    if (j < 0 || j >= static_cast<int>(pou.chi.size()))
      throw ConfigError("fields: chi node index " + std::to_string(j) + " out of range");
    emit("chi_" + std::to_string(j), "chi", chi_on_cells(pou.chi[j]));
  }

  if (!sel.psi_cols.empty() || sel.eigen_csv) {
    const AuxiliarySpace aux = build_auxiliary_space_uniform(g, ops, cfg.J.front());
    if (sel.eigen_csv) write_eigen_csv(aux, g, (dir / "eigenvalues.csv").string());
    for (auto [i, j] : sel.psi_cols) {
      if (i < 0 || i >= g.n_elements()) throw ConfigError("fields: element index out of range");
      auto [psi, mu, rel] = build_cem_basis(g, ops, aux, i, j, cfg.ell.front());
      emit("psi_mag_" + std::to_string(i) + "_" + std::to_string(j), "velocity_magnitude",
           cell_velocity_magnitude(g, psi));
      emit("psi_mu_" + std::to_string(i) + "_" + std::to_string(j), "pressure", mu);
    }
  }
}

} // namespace cemwave
