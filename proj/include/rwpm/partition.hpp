#pragma once

#include <cstddef>
#include <vector>

#include "rwpm/environment.hpp"
#include "rwpm/homogeneous.hpp"
#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"

namespace rwpm {

struct RenewalTrajectory {
	std::vector<double> points;  // increasing, inside [0, T]; starts at 0
	double beta = 0.0;           // tilt used to sample it
	bool bridge = false;         // endpoint-conditioned at T
};

enum class PartitionKind { Free, Constrained, Normalized };
enum class PartitionMethod { Volterra, Mc };

struct PartitionResult {
	double value = 0.0;
	double log_value = 0.0;
	PartitionKind kind = PartitionKind::Free;
	PartitionMethod method = PartitionMethod::Volterra;
	double std_error = 0.0;  // mc only
	double grid_step = 0.0;  // volterra only
	double ess = 0.0;        // mc only: effective sample size of the weights
	bool variance_warning = false;  // ess below 1% of the sample count
};

// K_w(s,t,Y) = beta0 * P(X_{t-s} = Y_t - Y_s), X at rate 1 - rho
double kw(const TransitionKernel& tk, const ReturnProbabilityCurve& curve,
		  double s, double t, const EnvPath& path);

// Constrained quenched partition zeta(t) = Z^{Y,c}_{beta,[0,t]} on the grid
// via the last-contact Volterra recursion, plus the free value 1 + int zeta.
struct QuenchedVolterra {
	double step = 0.0;
	std::vector<double> zeta;
	double free_value = 0.0;
	double disc_error = 0.0;   // Richardson estimate at the endpoint
	bool step_warning = false; // step coarser than half the min jump gap
	double min_gap = 0.0;
};

QuenchedVolterra volterra_quenched(const TransitionKernel& tk,
								   const AnnealedModel& model,
								   const EnvPath& path, double beta, double T,
								   double step);

// Normalized partition W = Z^{Y,c} / E[Z^{Y,c}] estimated by averaging the
// weight products over grid-aligned renewal bridges under Q_{beta,T}.
PartitionResult mc_normalized(const TransitionKernel& tk,
							  const AnnealedModel& model, const EnvPath& path,
							  double beta, double T, std::size_t n_samples,
							  double step, Rng& rng);

RenewalTrajectory renewal_bridge_sampler(const AnnealedModel& model,
										 double beta, double T, double step,
										 Rng& rng);

}  // namespace rwpm
