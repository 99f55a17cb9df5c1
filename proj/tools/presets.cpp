#include <map>

#include "run_config.hpp"

namespace mfrelax::cli {

namespace {

// Desk-scale analogues of the reference experiments. Physics values are
// spelled out in every preset. The Newton tolerance is tighter than the
// library default so that 1000-step conservation drift stays below 1e-8.
const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> table = {
      {"hopf-trivial", R"({
  "name": "hopf-trivial",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": false},
  "scheme": "sp",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 10, "t_final": 10000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"hopf-periodic", R"({
  "name": "hopf-periodic",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": true},
  "scheme": "sp",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 10, "t_final": 10000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"hopf-noH", R"({
  "name": "hopf-noH",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": false},
  "scheme": "hdiv_noH",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 1, "t_final": 1000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"hopf-hcurl", R"({
  "name": "hopf-hcurl",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": false},
  "scheme": "hcurl",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 1, "t_final": 1000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"hopf-h1", R"({
  "name": "hopf-h1",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": false},
  "scheme": "h1",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 1, "t_final": 1000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"isohelix-periodic", R"({
  "name": "isohelix-periodic",
  "mesh": {"extents": [[-4, 4], [-4, 4], [-10, 10]], "resolution": [4, 4, 10], "periodic_z": true},
  "scheme": "sp",
  "ic": {"kind": "isohelix"},
  "physics": {"tau": 100, "dt": 10, "t_final": 10000},
  "newton": {"abs_tol": 1e-12}
})"},
      {"cube-2", R"({
  "name": "cube-2",
  "mesh": {"extents": [[-1, 1], [-1, 1], [-1, 1]], "resolution": [2, 2, 2], "periodic_z": false},
  "scheme": "sp",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 10, "t_final": 100},
  "newton": {"abs_tol": 1e-12}
})"},
      {"periodic-2", R"({
  "name": "periodic-2",
  "mesh": {"extents": [[-1, 1], [-1, 1], [-1, 1]], "resolution": [2, 2, 2], "periodic_z": true},
  "scheme": "sp",
  "ic": {"kind": "hopf", "omega1": 3, "omega2": 2, "s": 1},
  "physics": {"tau": 100, "dt": 10, "t_final": 100},
  "newton": {"abs_tol": 1e-12}
})"},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : presets()) names.push_back(k);
  return names;
}

std::string preset_json(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
  }
  return it->second;
}

RunConfig preset(const std::string& name) { return parse_config(preset_json(name)); }

}  // namespace mfrelax::cli
