#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rwpm/kernel.hpp"

namespace rwpm {

// Experiment configuration, read from a sectioned key-value file:
//
//   [kernel]
//   gamma = 0.75
//   slow_var = constant     # or log_power
//   ...
//
// Parsing is strict: every key must belong to the section it appears in,
// except inside [experiment.params], which holds free-form numeric knobs for
// the individual experiments.  Errors carry file:line locations.
struct ExperimentConfig {
	// [kernel]
	KernelSpec kernel;
	double tail_tol = 1e-12;

	// [model]
	double t_max = 1e4;
	double step = 0.05;
	std::vector<double> beta_grid;  // multiples of beta0

	// [disorder]
	std::vector<double> rho = {0.5};
	std::uint64_t seed = 1;
	std::size_t samples = 100;

	// [experiment]
	std::string name;
	std::string regime;
	int workers = 1;
	std::map<std::string, double> params;

	double param(const std::string& key, double fallback) const;
};

ExperimentConfig parse_config(const std::string& text,
							  const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization: every field in a fixed order with %.17g floats,
// so the hash pins the full numeric state of a run.
std::string canonical_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace rwpm
