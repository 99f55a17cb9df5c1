#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace mfrelax::cli {

namespace {

std::string fmt(double v) { return format_double(v); }

}  // namespace

int helicity_cadence(const RunConfig& config, const DeRhamComplex& c) {
  if (config.helicity_cadence > 0) return config.helicity_cadence;
  const int ndof = c.dim(SpaceKind::nodal) + c.dim(SpaceKind::edge) + c.dim(SpaceKind::face) +
                   c.dim(SpaceKind::cell);
  return ndof <= 10000 ? 1 : 10;
}

int cmd_verify(const RunConfig& config, std::ostream& out, ComplexReport* report) {
  const BoxMesh mesh = config.mesh();
  const DeRhamComplex c = build_complex(mesh);
  const EntityCounts n = mesh.counts();
  const ComplexReport r = verify_complex(c);
  out << "mesh " << mesh.descriptor() << '\n'
      << "entities: vertices " << n.vertices << ", edges " << n.total_edges() << ", faces "
      << n.total_faces() << ", cells " << n.cells << ", euler " << n.euler_characteristic() << '\n'
      << "free dofs: nodal " << c.dim(SpaceKind::nodal) << ", edge " << c.dim(SpaceKind::edge)
      << ", face " << c.dim(SpaceKind::face) << ", cell " << c.dim(SpaceKind::cell) << '\n'
      << "max |curl grad| " << fmt(r.max_abs_curl_grad) << ", max |div curl| " << fmt(r.max_abs_div_curl)
      << ", incidence entries " << (r.incidence_entries_ok ? "ok" : "BAD") << '\n';
  if (r.dense_checked) {
    out << "ranks: grad " << r.rank_grad << ", curl " << r.rank_curl << ", div " << r.rank_div << '\n'
        << "cohomology defects: nodes " << r.node_defect << ", edges " << r.edge_defect << ", faces "
        << r.face_defect << ", cells " << r.cell_defect << '\n';
  } else {
    out << "ranks: skipped (too many dofs for the dense check)\n";
  }
  out << "harmonic_dim " << c.harmonic_dim << " (expected " << r.expected_harmonic_dim << ")\n";
  for (const auto& f : r.failures) out << "FAIL: " << f << '\n';
  out << (r.passed ? "verify: pass" : "verify: FAIL") << '\n';
  if (report) *report = r;
  return r.passed ? 0 : 1;
}

int cmd_run(const RunConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err,
            RunSummary* summary) {
  const auto wall0 = std::chrono::steady_clock::now();
  const BoxMesh mesh = config.mesh();
  const DeRhamComplex c = build_complex(mesh);
  const SchemeState initial = make_initial_state(c, config.scheme, config.ic);

  SchemeState state = initial;
  if (options.restart) state = checkpoint_load(c, *options.restart);
  if (state.scheme != config.scheme) {
    err << "restart checkpoint holds scheme " << to_string(state.scheme) << ", config asks for "
        << to_string(config.scheme) << '\n';
    return 2;
  }
  const int total = options.steps ? *options.steps : config.steps();
  if (total < 0) {
    err << "--steps must be >= 0\n";
    return 2;
  }
  const int first = static_cast<int>(std::llround(state.t / config.dt));

  StepperConfig sc;
  sc.dt = config.dt;
  sc.tau = config.tau;
  sc.newton_abs_tol = config.newton_abs_tol;
  sc.newton_max_iter = config.newton_max_iter;
  sc.halve_on_failure = config.halve_on_failure;
  // The tolerance scale comes from the initial condition, so restarts follow
  // the same solver path as uninterrupted runs.
  sc.reference_norm = std::sqrt(energy(c, initial.B));
  const Stepper stepper(c, sc);

  const bool face = state_space(config.scheme) == SpaceKind::face;
  std::optional<HodgeSolver> hodge;
  if (face) hodge.emplace(c);
  const int cadence = helicity_cadence(config, c);

  std::filesystem::create_directories(config.out_dir);
  const auto csv = config.out_dir / "diagnostics.csv";
  const auto ckpt = config.out_dir / "checkpoint.prlx";
  const auto snap_stem = config.out_dir / "snapshots" / "B";
  write_csv({}, csv);

  RunSummary sum;
  sum.first_step = first;
  sum.csv_path = csv;
  sum.checkpoint_path = ckpt;

  auto record = [&](int step, const StepReport* rep) {
    const DiagRow* prev = sum.rows.empty() ? nullptr : &sum.rows.back();
    DiagRow row;
    if (face && (step % cadence == 0 || step == total)) {
      const HodgeResult hr = hodge->decompose(state.B);
      row = diagnostics_row(c, state, &hr, rep, prev);
    } else {
      row = diagnostics_row(c, state, nullptr, rep, prev);
    }
    append_csv_row(row, csv);
    sum.rows.push_back(row);
    const bool snap = step == first || step == total ||
                      (config.snapshot_cadence > 0 && step % config.snapshot_cadence == 0);
    if (snap) write_vtk_snapshot(c, state, snap_stem, step);
    if (config.checkpoint_cadence > 0 && step % config.checkpoint_cadence == 0 && step != first) {
      checkpoint_save(c, state, ckpt);
    }
  };

  if (!options.quiet) {
    out << "run " << config.name << ": scheme " << to_string(config.scheme) << ", mesh "
        << mesh.descriptor() << ", steps " << first << ".." << total << ", dt " << fmt(config.dt)
        << ", tau " << fmt(config.tau) << '\n';
  }
  record(first, nullptr);
  const int report_every = std::max(1, (total - first) / 10);
  for (int n = first; n < total; ++n) {
    try {
      auto [next, rep] = stepper.step(state);
      state = std::move(next);
      record(n + 1, &rep);
      if (summary) sum.reports.push_back(std::move(rep));
    } catch (const StepError& e) {
      checkpoint_save(c, state, ckpt);
      err << "step " << n + 1 << " failed: " << e.what() << "\nlast good state (t = " << fmt(state.t)
          << ") written to " << ckpt.string() << '\n';
      if (summary) {
        sum.last_step = n;
        sum.final_state = state;
        *summary = std::move(sum);
      }
      return 1;
    }
    if (!options.quiet && ((n + 1 - first) % report_every == 0 || n + 1 == total)) {
      const DiagRow& r = sum.rows.back();
      out << "  step " << n + 1 << " t " << fmt(r.t) << " energy " << fmt(r.energy) << " helicity "
          << fmt(r.helicity) << " gen_helicity " << fmt(r.gen_helicity) << " newton "
          << r.newton_iters << '\n';
    }
  }
  checkpoint_save(c, state, ckpt);
  sum.last_step = std::max(first, total);
  sum.final_state = state;
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  if (!options.quiet) {
    out << "wrote " << csv.string() << " and " << ckpt.string() << " (" << fmt(sum.wall_seconds)
        << " s)\n";
  }
  if (summary) *summary = std::move(sum);
  return 0;
}

int cmd_trace(const RunConfig& config, const TraceOptions& options, std::ostream& out,
              std::ostream& err, TraceResult* result) {
  const BoxMesh mesh = config.mesh();
  const DeRhamComplex c = build_complex(mesh);
  const SchemeState state = options.checkpoint ? checkpoint_load(c, *options.checkpoint)
                                               : make_initial_state(c, config.scheme, config.ic);
  if (state.B.space != SpaceKind::face) {
    err << "trace needs a face-space field (scheme sp or hdiv_noH), got " << to_string(state.scheme)
        << '\n';
    return 2;
  }
  const std::vector<Vec3> seeds = options.seed_file ? load_seeds(*options.seed_file) : config.seeds;
  if (seeds.empty()) {
    err << "no seeds: pass --seed-file or set trace.seeds in the config\n";
    return 2;
  }
  TraceResult tr = trace_fieldlines(c, state.B, seeds, config.trace_step, config.trace_max_len);
  for (int s : tr.skipped_seeds) {
    const Vec3& p = seeds[s];
    err << "seed " << s << " (" << fmt(p[0]) << ", " << fmt(p[1]) << ", " << fmt(p[2])
        << ") lies outside the domain; skipped\n";
  }
  const auto path = config.out_dir / "fieldlines.vtk";
  write_polylines_vtk(tr.lines, path);
  for (const auto& line : tr.lines) {
    const Vec3& e = line.points.back();
    out << "seed " << line.seed_id << ": " << line.points.size() << " points, end (" << fmt(e[0])
        << ", " << fmt(e[1]) << ", " << fmt(e[2]) << "), " << to_string(line.reason) << '\n';
  }
  out << "wrote " << path.string() << '\n';
  if (result) *result = std::move(tr);
  return 0;
}

int cmd_poincare(const RunConfig& config, std::ostream& out, PoincareEstimate* estimate) {
  const BoxMesh mesh = config.mesh();
  const DeRhamComplex c = build_complex(mesh);
  const PoincareEstimate est = estimate_arnold_constant(c);
  out << "mesh " << mesh.descriptor() << '\n'
      << "lambda_min " << fmt(est.lambda_min) << '\n'
      << "C " << fmt(est.C) << '\n'
      << "C_generalized " << fmt(est.C_generalized) << '\n'
      << "relative_residual " << fmt(est.relative_residual) << '\n'
      << "iterations " << est.iterations << '\n';
  if (estimate) *estimate = est;
  return 0;
}

}  // namespace mfrelax::cli
