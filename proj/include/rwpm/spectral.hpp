#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rwpm/kernel.hpp"

namespace rwpm {

// P(W_t = x) for x = 0..x_range, computed by characteristic-function quadrature
//   probs[x] = (1/pi) int_0^pi exp(-t hhat(theta)) cos(theta x) dtheta.
struct TransitionTable {
	double t = 0.0;
	std::int64_t x_range = 0;
	std::vector<double> probs;
	double quad_error = 0.0;  // achieved p0 quadrature error estimate
	double tail_mass = 0.0;   // estimated mass beyond |x| > x_range

	double accounted_mass() const;
};

// Frozen per-lag evaluator: dense probabilities for |x| <= 64, a log-spaced
// interpolation table out to the far-tail crossover, and the single-jump
// asymptotic t*J(x) (with stable-series corrections) beyond.  Immutable.
class LagEvaluator {
public:
	double t = 0.0;
	double p0 = 1.0;
	double theta_tilde = 0.0;  // scale: t*hhat(theta_tilde) = 1 (pi if unreached)
	double quad_error = 0.0;

	double prob(std::int64_t x) const;

private:
	friend class TransitionKernel;
	const KernelTable* kern_ = nullptr;
	std::vector<double> dense_;       // x = 0..64 (or fewer)
	std::vector<float> log_vals_;     // log p at x = 64 * ratio^k
	double log_x0_ = 0.0, log_ratio_ = 0.0;
	double x_far_ = 0.0;
	double c2_ = 0.0, c3_ = 0.0;      // stable-tail series coefficients

	double region3(double x) const;   // t*J(x)*(1 + c2 z^-g + c3 z^-2g)
};

// Transition-probability engine for one kernel.  Quadrature nodes are placed
// on a polynomially graded grid over [0, theta_c] where t*hhat >= 40 beyond
// theta_c; each panel is integrated against cos(theta x) exactly (Filon), so
// a single panel set serves every displacement.  Thread-safe; the per-lag
// cache is synchronized and entries are immutable once built.
class TransitionKernel {
public:
	explicit TransitionKernel(const KernelTable& kernel);

	const KernelTable& kernel() const { return *kern_; }

	double p0(double t) const;
	double prob(double t, std::int64_t x) const;

	// x_range < 0 covers the bulk (30 / theta_tilde, capped at 2^21); the
	// heavy tail keeps substantial mass beyond any dense range, reported
	// through tail_mass
	TransitionTable table(double t, std::int64_t x_range = -1) const;

	std::shared_ptr<const LagEvaluator> lag(double t) const;

	// smallest theta with t*hhat(theta') >= target for all theta' >= theta
	double solve_level(double t, double target) const;

private:
	struct Nodes {
		std::vector<double> theta, E;  // 2M+1 points: panel edges + midpoints
		double theta_c = 0.0, theta_tilde = 0.0, err = 0.0;
	};
	const KernelTable* kern_;
	std::vector<double> env_theta_, env_min_;  // right-minimum envelope of hhat

	mutable std::mutex mu_;
	mutable std::map<std::int64_t, std::shared_ptr<const LagEvaluator>> cache_;

	Nodes build_nodes(double t) const;
	static double filon(const Nodes& n, double x);
	std::shared_ptr<const LagEvaluator> build_lag(double t) const;
};

// Cached p0 curve on a hybrid grid with power-law tail extrapolation.
struct ReturnProbabilityCurve {
	std::vector<double> grid;  // starts at 0
	std::vector<double> p0;
	std::vector<double> K;     // beta0 * p0, filled by set_beta0
	double fitted_exponent = 0.0;  // estimated 1 + alpha = 1/gamma
	double tail_A = 0.0, tail_p = 0.0;  // p0 ~ A t^-p beyond the grid
	double beta0 = 0.0;
	double lin_max = 10.0;
	std::size_t lin_count = 0;  // number of points in the linear section

	double p0_at(double t) const;
	double integral_p0() const;  // int_0^inf p0
	void set_beta0(double b0);
	double K_at(double t) const;
	double Kbar(double t) const;  // int_t^inf K
	void build_suffix();  // suffix integrals of p0; called by the builder

private:
	std::vector<double> suffix_;
};

std::vector<double> hybrid_grid(double lin_max, double lin_step, double t_max,
								int per_decade);

ReturnProbabilityCurve return_prob_curve(const TransitionKernel& tk,
										 const std::vector<double>& grid);

}  // namespace rwpm
