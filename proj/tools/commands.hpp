// Subcommands of the mfrelax driver. Each returns a process exit status and
// writes human-readable progress to `out`, problems to `err`.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mfrelax/diagio.hpp"
#include "mfrelax/hodge.hpp"
#include "run_config.hpp"

namespace mfrelax::cli {

struct RunOptions {
  std::optional<int> steps;  // replaces t_final by steps * dt
  std::optional<std::filesystem::path> restart;
  bool quiet = false;
};

struct RunSummary {
  int first_step = 0;
  int last_step = 0;
  SchemeState final_state;
  std::vector<DiagRow> rows;
  std::vector<StepReport> reports;
  std::filesystem::path csv_path;
  std::filesystem::path checkpoint_path;
  double wall_seconds = 0.0;
};

struct TraceOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> seed_file;
};

int cmd_verify(const RunConfig& config, std::ostream& out, ComplexReport* report = nullptr);
int cmd_run(const RunConfig& config, const RunOptions& options, std::ostream& out,
            std::ostream& err, RunSummary* summary = nullptr);
int cmd_trace(const RunConfig& config, const TraceOptions& options, std::ostream& out,
              std::ostream& err, TraceResult* result = nullptr);
int cmd_poincare(const RunConfig& config, std::ostream& out, PoincareEstimate* estimate = nullptr);

/// Steps between Hodge solves: the configured cadence, or 1 up to 1e4 DOFs and 10 above.
int helicity_cadence(const RunConfig& config, const DeRhamComplex& complex);

}  // namespace mfrelax::cli
