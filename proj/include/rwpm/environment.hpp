#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rwpm/kernel.hpp"
#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"

namespace rwpm {

struct EnvJump {
	double theta = 0.0;    // jump time in (0, T]
	std::int64_t U = 0;    // amplitude bound, U >= |V|
	std::int64_t V = 0;    // displacement, uniform on [-U, U] given U
};

// Enriched Poisson environment: jumps of the rate-rho disorder walk Y
// together with their amplitude marks.
struct EnvPath {
	double rho = 0.0;
	double T = 0.0;
	std::int64_t y0 = 0;
	std::vector<EnvJump> jumps;

	void build_prefix();
	std::int64_t y_at(double t) const;  // O(log n)

private:
	std::vector<std::int64_t> prefix_;
};

struct BridgeSample {
	double duration = 0.0;
	std::vector<EnvJump> path;  // rate-1 walk jumps, terminal sum of V is 0
	int attempts = 0;
};

EnvPath sample_env(const KernelTable& kernel, double rho, double T, Rng& rng);

// (max_x L_T(x), argmax)
std::pair<double, std::int64_t> local_time_max(const EnvPath& path);

BridgeSample sample_bridge(const KernelTable& kernel, double duration, Rng& rng,
						   int max_attempts);

// Environment under the size-biased law P_tau for the renewal times tau:
// per block a bridge of the block length, restricted to its first rho
// fraction and stretched by 1/rho (Lemma: Y on a block of length D has the
// law of W_{[0, rho D]} given W_D = 0).
EnvPath size_biased_blocks(const TransitionKernel& tk,
						   const std::vector<double>& tau, double rho,
						   Rng& rng);

// w(s,t,Y) = P(X_{t-s} = Y_t - Y_s) / P(W_{t-s} = 0), X at rate 1 - rho
double weight(const TransitionKernel& tk, double s, double t,
			  const EnvPath& path);

// Closed-form Mecke mean of the count of jumps in (0,t] with amplitude >= L
// under the weighted law:
//   rho t sum_{l >= L} mu_bar(l) (2l+1)^{-1} sum_{x=-l}^{l} P(W_t=x)/P(W_t=0)
double mecke_mean(const TransitionKernel& tk, double rho, double t,
				  std::int64_t L);

}  // namespace rwpm
