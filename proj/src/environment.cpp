#include "rwpm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace rwpm {

void EnvPath::build_prefix() {
	prefix_.resize(jumps.size() + 1);
	prefix_[0] = y0;
	for (std::size_t i = 0; i < jumps.size(); ++i)
		prefix_[i + 1] = prefix_[i] + jumps[i].V;
}

std::int64_t EnvPath::y_at(double t) const {
	if (!(t >= 0.0 && t <= T))
		throw std::invalid_argument("y_at: time outside [0, T]");
	if (prefix_.size() != jumps.size() + 1)
		throw std::logic_error("y_at: prefix sums not built");
	// number of jumps with theta <= t
	std::size_t lo = 0, hi = jumps.size();
	while (lo < hi) {
		std::size_t mid = (lo + hi) / 2;
		if (jumps[mid].theta <= t)
			lo = mid + 1;
		else
			hi = mid;
	}
	return prefix_[lo];
}

EnvPath sample_env(const KernelTable& kernel, double rho, double T, Rng& rng) {
	if (!(rho >= 0.0 && rho < 1.0))
		throw std::invalid_argument("sample_env: rho must lie in [0, 1)");
	if (!(T > 0.0)) throw std::invalid_argument("sample_env: T must be positive");

	EnvPath path;
	path.rho = rho;
	path.T = T;
	std::int64_t n = rng.poisson(rho * T);
	std::vector<double> times(static_cast<std::size_t>(n));
	for (auto& s : times) s = rng.uniform(0.0, T);
	std::sort(times.begin(), times.end());
	path.jumps.reserve(times.size());
	for (double s : times) {
		EnvJump jp;
		jp.theta = s;
		jp.U = kernel.sample_amplitude(rng);
		jp.V = rng.uniform_int(-jp.U, jp.U);
		path.jumps.push_back(jp);
	}
	path.build_prefix();
	return path;
}

std::pair<double, std::int64_t> local_time_max(const EnvPath& path) {
	std::unordered_map<std::int64_t, double> occ;
	std::int64_t level = path.y0;
	double prev = 0.0;
	for (const auto& jp : path.jumps) {
		occ[level] += jp.theta - prev;
		prev = jp.theta;
		level += jp.V;
	}
	occ[level] += path.T - prev;

	double best = -1.0;
	std::int64_t best_x = path.y0;
	for (const auto& [x, time] : occ) {
		if (time > best || (time == best && x < best_x)) {
			best = time;
			best_x = x;
		}
	}
	return {best, best_x};
}

BridgeSample sample_bridge(const KernelTable& kernel, double duration, Rng& rng,
						   int max_attempts) {
	if (!(duration > 0.0))
		throw std::invalid_argument("sample_bridge: duration must be positive");
	if (max_attempts < 1)
		throw std::invalid_argument("sample_bridge: max_attempts must be >= 1");

	std::vector<double> times;
	std::vector<std::int64_t> steps;
	for (int attempt = 1; attempt <= max_attempts; ++attempt) {
		std::int64_t n = rng.poisson(duration);
		times.resize(static_cast<std::size_t>(n));
		steps.resize(times.size());
		for (auto& s : times) s = rng.uniform(0.0, duration);
		std::int64_t sum = 0;
		for (auto& v : steps) {
			v = kernel.sample_displacement(rng);
			sum += v;
		}
		if (sum != 0) continue;

		std::sort(times.begin(), times.end());
		BridgeSample out;
		out.duration = duration;
		out.attempts = attempt;
		out.path.reserve(times.size());
		for (std::size_t i = 0; i < times.size(); ++i) {
			EnvJump jp;
			jp.theta = times[i];
			jp.V = steps[i];
			jp.U = std::llabs(steps[i]);
			out.path.push_back(jp);
		}
		return out;
	}
	std::ostringstream msg;
	msg << "sample_bridge: no return in " << max_attempts
		<< " attempts at duration " << duration << " (acceptance < "
		<< 1.0 / max_attempts << ")";
	throw std::runtime_error(msg.str());
}

namespace {

// Enriched amplitude given the displacement: P(U >= l | V = x) = J(l)/J(|x|)
// for l >= |x| (the mu_bar/(2l+1) weights telescope), inverted on J.
std::int64_t enrich_amplitude(const KernelTable& kernel, std::int64_t absx,
							  Rng& rng) {
	double jx = kernel.j(absx);
	if (!(jx > 0.0)) return absx;
	double t = rng.u01() * jx;
	std::int64_t lo = absx;
	if (kernel.j(lo + 1) < t) return lo;
	std::int64_t span = 1, hi = lo + 1;
	while (kernel.j(hi) >= t) {
		lo = hi;
		span *= 2;
		hi = lo + span;
	}
	while (hi - lo > 1) {
		std::int64_t mid = lo + (hi - lo) / 2;
		if (kernel.j(mid) >= t) lo = mid; else hi = mid;
	}
	return lo;
}

}  // namespace

EnvPath size_biased_blocks(const TransitionKernel& tk,
						   const std::vector<double>& tau, double rho,
						   Rng& rng) {
	if (tau.size() < 2 || tau.front() != 0.0)
		throw std::invalid_argument("size_biased_blocks: tau must cover [0, T]");
	for (std::size_t i = 1; i < tau.size(); ++i)
		if (!(tau[i] > tau[i - 1]))
			throw std::invalid_argument("size_biased_blocks: tau must increase");
	if (!(rho >= 0.0 && rho < 1.0))
		throw std::invalid_argument("size_biased_blocks: rho must lie in [0, 1)");

	EnvPath path;
	path.rho = rho;
	path.T = tau.back();
	if (rho > 0.0) {
		for (std::size_t i = 1; i < tau.size(); ++i) {
			double d = tau[i] - tau[i - 1];
			double cap = std::ceil(100.0 / tk.p0(d));
			int max_attempts =
				static_cast<int>(std::min(cap, 1e9));
			auto bridge = sample_bridge(tk.kernel(), d, rng, max_attempts);
			for (const auto& jp : bridge.path) {
				if (jp.theta > rho * d) break;
				EnvJump scaled = jp;
				scaled.theta = std::min(tau[i - 1] + jp.theta / rho, tau[i]);
				scaled.U = enrich_amplitude(tk.kernel(), std::llabs(jp.V), rng);
				path.jumps.push_back(scaled);
			}
		}
	}
	path.build_prefix();
	return path;
}

double weight(const TransitionKernel& tk, double s, double t,
			  const EnvPath& path) {
	if (!(s >= 0.0 && s < t && t <= path.T))
		throw std::invalid_argument("weight: need 0 <= s < t <= T");
	if (path.rho == 0.0) return 1.0;
	double delta = t - s;
	std::int64_t d = path.y_at(t) - path.y_at(s);
	auto num = tk.lag((1.0 - path.rho) * delta);
	auto den = tk.lag(delta);
	return num->prob(d) / den->p0;
}

double mecke_mean(const TransitionKernel& tk, double rho, double t,
				  std::int64_t L) {
	if (L < 0) L = 0;
	const auto& kernel = tk.kernel();
	auto lag = tk.lag(t);
	double inv_p0 = 1.0 / lag->p0;

	// running sum_{|x| <= l} P(W_t = x), advanced with l
	double mass = lag->prob(0);
	for (std::int64_t x = 1; x <= L; ++x) mass += 2.0 * lag->prob(x);

	double total = 0.0;
	for (std::int64_t l = L;; ++l) {
		total += kernel.mu_bar(l) * mass / (2.0 * l + 1.0);
		// remaining terms are below J(l+1)/p0 (telescoping, mass <= 1)
		if (l > L + 8 &&
			kernel.j(l + 1) * inv_p0 < 1e-10 * std::max(total, 1e-300))
			break;
		if (l > (1 << 26)) break;
		mass += 2.0 * lag->prob(l + 1);
	}
	return rho * t * total * inv_p0;
}

}  // namespace rwpm
