#pragma once

// Experiment configuration: an INI document with sections [model],
// [feeding], [grid], [pinn], [deepos] and [run]. Every key has a default
// from the selected preset; unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aquaopt/deepos.hpp"
#include "aquaopt/fd_hjb.hpp"
#include "aquaopt/model.hpp"
#include "aquaopt/pinn.hpp"

namespace aquaopt {

struct RunSettings {
  std::uint64_t seed = 1;  // price paths shared by all strategies
  std::size_t n_paths = 8192;
  std::size_t n_steps = 2048;
  std::size_t threads = 1;
  std::string out_dir = "out";
  /// Paths whose trajectories are written by the trajectory command.
  std::vector<std::size_t> trajectory_paths{0};
};

struct ExperimentConfig {
  std::string preset = "desk";
  ModelParams model;
  FeedingStrategy feeding;
  GridSpec grid;
  std::size_t policy_stride = 16;
  double fd_stop_eps = 0.01;
  bool allow_unstable = false;
  PinnConfig pinn;
  DeepOsConfig deepos;
  RunSettings run;

  /// "paper": full grids and training; "desk": reduced grid, 2000 epochs
  /// of 1024 points, coarser stopping networks.
  static ExperimentConfig preset_config(const std::string& name);

  /// Throws std::invalid_argument on violated preconditions.
  void validate() const;
};

/// Parses an INI document on top of the given base configuration. Throws
/// std::invalid_argument on unknown sections/keys or malformed values.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base);
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base);

/// The [run] preset named in a config file, or an empty string.
std::string config_file_preset(const std::string& path);

/// Writes every key; parsing the output reproduces the configuration.
void write_config(const ExperimentConfig& cfg, std::ostream& out);

/// Feeding strategy of a given kind with the default normalisation of that
/// kind for f0 and T.
FeedingStrategy default_feeding(const std::string& kind, double f0, double T);

}  // namespace aquaopt
