// Run configuration: JSON schema, validation and the embedded presets.
#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfrelax/fields.hpp"
#include "mfrelax/mesh.hpp"
#include "mfrelax/relax.hpp"

namespace mfrelax::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string name = "custom";
  std::array<Interval, 3> extents{Interval{-4.0, 4.0}, Interval{-4.0, 4.0}, Interval{-10.0, 10.0}};
  std::array<int, 3> resolution{4, 4, 10};
  bool periodic_z = false;
  SchemeKind scheme = SchemeKind::sp;
  ICKind ic = HopfParams{};
  double tau = 0.0;
  double dt = 0.0;
  double t_final = 0.0;
  double newton_abs_tol = 1e-10;
  int newton_max_iter = 20;
  bool halve_on_failure = false;
  int helicity_cadence = 0;    // 0: every step up to 1e4 DOFs, else every 10th
  int snapshot_cadence = 0;    // 0: first and last state only
  int checkpoint_cadence = 0;  // 0: final state only
  std::filesystem::path out_dir = "out";
  std::vector<Vec3> seeds;
  double trace_step = 0.0;  // 0: h_min / 4
  double trace_max_len = 40.0;

  BoxMesh mesh() const;
  /// T_final / dt, validated to be a positive integer.
  int steps() const;
};

/// Parses and validates a JSON document. Errors name the offending field (or
/// the line of a syntax error).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
std::string preset_json(const std::string& name);
RunConfig preset(const std::string& name);

/// Seeds as whitespace- or comma-separated triples, one per line; '#' starts a comment.
std::vector<Vec3> load_seeds(const std::filesystem::path& path);

}  // namespace mfrelax::cli
