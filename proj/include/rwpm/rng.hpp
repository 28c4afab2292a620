#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace rwpm {

// Per-stream random generator.  Streams are keyed by (master_seed, stream_id)
// so that Monte Carlo tasks can be assigned independent streams whose output
// does not depend on how tasks are scheduled across workers.
//
// All variate transforms are implemented here rather than through
// std::*_distribution so that byte-identical output is reproducible across
// standard-library versions.
class Rng {
public:
	explicit Rng(std::uint64_t master_seed, std::uint64_t stream_id = 0)
		: gen_(mix(master_seed, stream_id)) {}

	std::uint64_t raw() { return gen_(); }

	// Uniform on (0,1); never returns 0 or 1.
	double u01() {
		for (;;) {
			double u = (gen_() >> 11) * 0x1.0p-53;
			if (u > 0.0 && u < 1.0) return u;
		}
	}

	double uniform(double a, double b) { return a + (b - a) * u01(); }

	// Uniform integer on [a, b] inclusive.
	std::int64_t uniform_int(std::int64_t a, std::int64_t b) {
		std::uint64_t span = static_cast<std::uint64_t>(b - a) + 1;
		// rejection to avoid modulo bias
		std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
		for (;;) {
			std::uint64_t r = gen_();
			if (r < limit) return a + static_cast<std::int64_t>(r % span);
		}
	}

	double exponential(double rate) { return -std::log(u01()) / rate; }

	double normal() {
		// polar Marsaglia, uncached
		for (;;) {
			double x = 2.0 * u01() - 1.0, y = 2.0 * u01() - 1.0;
			double s = x * x + y * y;
			if (s > 0.0 && s < 1.0)
				return x * std::sqrt(-2.0 * std::log(s) / s);
		}
	}

	std::int64_t poisson(double mean) {
		if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
		if (mean == 0.0) return 0;
		if (mean < 10.0) return poisson_inversion(mean);
		return poisson_ptrs(mean);
	}

private:
	std::mt19937_64 gen_;

	static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
		// splitmix64 finalizer over the pair
		std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (2 * stream + 1);
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}

	std::int64_t poisson_inversion(double mean) {
		double p = std::exp(-mean), cdf = p, u = u01();
		std::int64_t k = 0;
		while (u > cdf) {
			++k;
			p *= mean / static_cast<double>(k);
			cdf += p;
			if (p < 1e-300 && k > 10 * mean + 100) break;
		}
		return k;
	}

	// Hormann's PTRS transformed-rejection sampler, valid for mean >= 10.
	std::int64_t poisson_ptrs(double mean) {
		const double slam = std::sqrt(mean), llam = std::log(mean);
		const double b = 0.931 + 2.53 * slam;
		const double a = -0.059 + 0.02483 * b;
		const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
		const double vr = 0.9277 - 3.6224 / (b - 2.0);
		for (;;) {
			double u = u01() - 0.5;
			double v = u01();
			double us = 0.5 - std::fabs(u);
			double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
			if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
			if (kf < 0.0 || (us < 0.013 && v > us)) continue;
			double k = kf;
			if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
				k * llam - mean - std::lgamma(k + 1.0))
				return static_cast<std::int64_t>(kf);
		}
	}
};

}  // namespace rwpm
