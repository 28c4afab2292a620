#include "rwpm/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rwpm {

namespace {

std::string trim(const std::string& s) {
	std::size_t a = 0, b = s.size();
	while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
	while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
	return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line,
					   const std::string& what) {
	std::ostringstream msg;
	msg << origin << ":" << line << ": " << what;
	throw std::invalid_argument(msg.str());
}

double parse_number(const std::string& origin, int line,
					const std::string& key, const std::string& value) {
	std::size_t pos = 0;
	double v = 0.0;
	try {
		v = std::stod(value, &pos);
	} catch (const std::exception&) {
		fail(origin, line, "key '" + key + "': not a number: '" + value + "'");
	}
	if (pos != value.size())
		fail(origin, line,
			 "key '" + key + "': trailing characters in '" + value + "'");
	return v;
}

std::vector<double> parse_list(const std::string& origin, int line,
							   const std::string& key,
							   const std::string& value) {
	std::vector<double> out;
	std::stringstream ss(value);
	std::string item;
	while (std::getline(ss, item, ',')) {
		item = trim(item);
		if (item.empty())
			fail(origin, line, "key '" + key + "': empty list element");
		out.push_back(parse_number(origin, line, key, item));
	}
	if (out.empty()) fail(origin, line, "key '" + key + "': empty list");
	return out;
}

std::string fmt(double v) {
	char buf[64];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

}  // namespace

double ExperimentConfig::param(const std::string& key, double fallback) const {
	auto it = params.find(key);
	return it == params.end() ? fallback : it->second;
}

ExperimentConfig parse_config(const std::string& text,
							  const std::string& origin) {
	ExperimentConfig cfg;
	std::istringstream in(text);
	std::string raw, section;
	int line = 0;
	bool seen_beta_grid = false;

	while (std::getline(in, raw)) {
		++line;
		auto hash = raw.find('#');
		if (hash != std::string::npos) raw.erase(hash);
		std::string s = trim(raw);
		if (s.empty()) continue;

		if (s.front() == '[') {
			if (s.back() != ']') fail(origin, line, "unterminated section header");
			section = trim(s.substr(1, s.size() - 2));
			if (section != "kernel" && section != "model" &&
				section != "disorder" && section != "experiment" &&
				section != "experiment.params")
				fail(origin, line, "unknown section [" + section + "]");
			continue;
		}

		auto eq = s.find('=');
		if (eq == std::string::npos)
			fail(origin, line, "expected 'key = value', got '" + s + "'");
		std::string key = trim(s.substr(0, eq));
		std::string value = trim(s.substr(eq + 1));
		if (key.empty()) fail(origin, line, "missing key");
		if (value.empty()) fail(origin, line, "key '" + key + "': missing value");
		if (section.empty())
			fail(origin, line, "key '" + key + "' appears before any section");

		if (section == "kernel") {
			if (key == "gamma")
				cfg.kernel.gamma = parse_number(origin, line, key, value);
			else if (key == "slow_var") {
				if (value == "constant")
					cfg.kernel.slow_var = SlowVariation::Constant;
				else if (value == "log_power")
					cfg.kernel.slow_var = SlowVariation::LogPower;
				else
					fail(origin, line,
						 "slow_var must be 'constant' or 'log_power', got '" +
							 value + "'");
			} else if (key == "kappa")
				cfg.kernel.kappa = parse_number(origin, line, key, value);
			else if (key == "x_max")
				cfg.kernel.x_max = static_cast<std::int64_t>(
					parse_number(origin, line, key, value));
			else if (key == "tail_tol")
				cfg.tail_tol = parse_number(origin, line, key, value);
			else
				fail(origin, line, "unknown key '" + key + "' in [kernel]");
		} else if (section == "model") {
			if (key == "t_max")
				cfg.t_max = parse_number(origin, line, key, value);
			else if (key == "step")
				cfg.step = parse_number(origin, line, key, value);
			else if (key == "beta_grid") {
				cfg.beta_grid = parse_list(origin, line, key, value);
				seen_beta_grid = true;
			} else
				fail(origin, line, "unknown key '" + key + "' in [model]");
		} else if (section == "disorder") {
			if (key == "rho")
				cfg.rho = parse_list(origin, line, key, value);
			else if (key == "seed")
				cfg.seed = static_cast<std::uint64_t>(
					parse_number(origin, line, key, value));
			else if (key == "samples")
				cfg.samples = static_cast<std::size_t>(
					parse_number(origin, line, key, value));
			else
				fail(origin, line, "unknown key '" + key + "' in [disorder]");
		} else if (section == "experiment") {
			if (key == "name")
				cfg.name = value;
			else if (key == "regime")
				cfg.regime = value;
			else if (key == "workers")
				cfg.workers =
					static_cast<int>(parse_number(origin, line, key, value));
			else
				fail(origin, line, "unknown key '" + key + "' in [experiment]");
		} else {  // experiment.params: free-form numeric knobs
			cfg.params[key] = parse_number(origin, line, key, value);
		}
	}

	if (!(cfg.kernel.gamma > 0.0 && cfg.kernel.gamma < 1.0))
		fail(origin, line, "kernel.gamma must lie in (0, 1)");
	if (cfg.kernel.x_max < (1 << 10))
		fail(origin, line, "kernel.x_max must be >= 1024");
	if (!(cfg.t_max > 0.0)) fail(origin, line, "model.t_max must be positive");
	if (!(cfg.step > 0.0)) fail(origin, line, "model.step must be positive");
	for (double r : cfg.rho)
		if (!(r >= 0.0 && r < 1.0))
			fail(origin, line, "disorder.rho values must lie in [0, 1)");
	if (cfg.workers < 1) fail(origin, line, "experiment.workers must be >= 1");
	if (!seen_beta_grid)
		cfg.beta_grid = {1.1, 1.2, 1.35, 1.5, 1.75, 2.0};
	return cfg;
}

ExperimentConfig load_config(const std::string& path) {
	std::ifstream f(path);
	if (!f) throw std::invalid_argument("cannot open config file: " + path);
	std::ostringstream buf;
	buf << f.rdbuf();
	return parse_config(buf.str(), path);
}

std::string canonical_text(const ExperimentConfig& cfg) {
	std::ostringstream out;
	out << "[kernel]\n"
		<< "gamma = " << fmt(cfg.kernel.gamma) << "\n"
		<< "slow_var = "
		<< (cfg.kernel.slow_var == SlowVariation::Constant ? "constant"
														   : "log_power")
		<< "\n"
		<< "kappa = " << fmt(cfg.kernel.kappa) << "\n"
		<< "x_max = " << cfg.kernel.x_max << "\n"
		<< "tail_tol = " << fmt(cfg.tail_tol) << "\n"
		<< "[model]\n"
		<< "t_max = " << fmt(cfg.t_max) << "\n"
		<< "step = " << fmt(cfg.step) << "\n"
		<< "beta_grid =";
	for (std::size_t i = 0; i < cfg.beta_grid.size(); ++i)
		out << (i ? ", " : " ") << fmt(cfg.beta_grid[i]);
	out << "\n[disorder]\nrho =";
	for (std::size_t i = 0; i < cfg.rho.size(); ++i)
		out << (i ? ", " : " ") << fmt(cfg.rho[i]);
	out << "\nseed = " << cfg.seed << "\nsamples = " << cfg.samples << "\n"
		<< "[experiment]\n"
		<< "name = " << cfg.name << "\n"
		<< "regime = " << cfg.regime << "\n"
		<< "workers = " << cfg.workers << "\n"
		<< "[experiment.params]\n";
	for (const auto& [k, v] : cfg.params)
		out << k << " = " << fmt(v) << "\n";
	return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
	// FNV-1a over the canonical serialization
	std::uint64_t h = 14695981039346656037ULL;
	for (unsigned char c : canonical_text(cfg)) {
		h ^= c;
		h *= 1099511628211ULL;
	}
	return h;
}

}  // namespace rwpm
