#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"

namespace rwpm {

double compute_beta0(const ReturnProbabilityCurve& curve);

// Tilted inter-arrival law K_beta(t) = (beta/beta0) e^{-F(beta) t} K(t),
// sampled by inverse CDF on a refined grid with a Pareto-proposal tail.
struct KbetaSampler {
	double beta = 0.0, F = 0.0;
	double total = 0.0;  // numeric mass of the density (should be ~1)
	std::vector<double> ts, cdf;
	double tail_mass = 0.0, tail_p = 0.0, tail_t0 = 0.0;

	double sample(Rng& rng) const;
};

// Renewal process under Q_beta conditioned to renew at T = N*step, sampled
// left to right through the Doob h-transform with h = the tilted renewal
// density u_beta.
struct RenewalBridge {
	double step = 0.0, beta = 0.0;
	std::vector<double> Kb;  // K_beta on the grid
	std::vector<double> u;   // u_beta on the grid

	// renewal grid indices in (0, N], last element is always N
	std::vector<std::int32_t> sample(Rng& rng) const;
};

struct TruncatedMoments {
	double m_beta = 0.0;
	double truncated_mean = 0.0;   // E[tau 1{tau <= 1/F}]
	double ratio_bound = 0.0;      // m_beta / (F^-2 K(1/F))
	bool laplace_ok = false;       // exp-moment bound with C = 10
	double laplace_margin = 0.0;   // min over lambda of rhs - lhs
};

class AnnealedModel {
public:
	// hhat_pi bounds the free-energy bisection bracket
	AnnealedModel(ReturnProbabilityCurve curve, double hhat_pi);

	const ReturnProbabilityCurve& curve() const { return curve_; }
	double beta0() const { return beta0_; }
	double alpha() const { return alpha_; }

	// int_0^upper t^k e^{-F t} p0(t) dt over the interpolated curve
	double integrate_weighted(double F, int k, double upper) const;
	double laplace_transform(double F) const;

	double free_energy(double beta) const;

	std::vector<double> renewal_density(double T_max, double step) const;
	std::vector<double> annealed_partition(double beta, double T_max,
										   double step) const;
	// discrete K on the step grid, trapezoid mass normalized to 1
	std::vector<double> volterra_kernel(double T_max, double step) const;

	KbetaSampler kbeta_sampler(double beta) const;
	RenewalBridge renewal_bridge(double beta, double T, double step) const;
	TruncatedMoments truncated_moments(double beta) const;

private:
	ReturnProbabilityCurve curve_;
	double hhat_pi_ = 0.0;
	double beta0_ = 0.0;
	double alpha_ = 0.0;

	mutable std::mutex mu_;
	mutable std::map<double, double> fcache_;
};

}  // namespace rwpm
