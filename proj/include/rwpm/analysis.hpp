#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwpm/environment.hpp"
#include "rwpm/homogeneous.hpp"
#include "rwpm/kernel.hpp"
#include "rwpm/partition.hpp"
#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"

namespace rwpm {

// Disorder regimes, each pairing a rare favorable-environment event A with a
// typical-renewal event B.
enum class Regime {
	TruncatedFenergy,  // deficit of jumps above the fixed amplitude threshold
	Criticality,       // deficit of crossings of the time-dependent threshold
	LargeRho,          // local-time peak of the environment walk
	SubTwoThirds,      // deficit of the total jump count
	Marginal,          // deficit of the amplitude-weighted statistic
};

struct EventSpec {
	Regime regime = Regime::SubTwoThirds;
	double eta = 0.0;      // relative depth of the mean deficit
	double delta = 0.0;    // renewal-sum threshold fraction
	double epsilon = 0.0;  // probe tolerance / deviation scale
	double R = 0.0;        // Chebyshev slack
	double T = 0.0;        // horizon
	double r = 0.0;        // probe window [r, s] inside [0, T]
	double s = 0.0;
	double beta = 0.0;     // tilt, for the regimes that need one
};

// Amplitude weights xi(k) = k^{1/3} phi(k)^{-2} with the cutoff U <= 2*beta0/K(T),
// plus the variance scale S(T) and the slowly varying psi(T) = phi(1/K(T))^3 S(T).
struct MarginalWeights {
	double T = 0.0;
	double S_of_T = 0.0;
	double psi_of_T = 0.0;
	double threshold = 0.0;  // 2 beta0 / K(T)
	const KernelTable* kernel = nullptr;

	double xi(double k) const;
};

MarginalWeights marginal_weights(const KernelTable& kernel,
								 const ReturnProbabilityCurve& curve, double T);

// S(t) = int_1^{1/K(t)} ds / (s phi(s)^3); zero when 1/K(t) <= 1
double s_of_t(const KernelTable& kernel, const ReturnProbabilityCurve& curve,
			  double t);
double psi_of_t(const KernelTable& kernel, const ReturnProbabilityCurve& curve,
				double t);
// smallest t with psi(t) >= target, by bisection on the monotone tabulation
double psi_inverse(const KernelTable& kernel,
				   const ReturnProbabilityCurve& curve, double target);

struct CoarseGrainConfig {
	double theta = 0.0;    // Holder exponent, needs (1 + alpha) theta > 1
	double block_T = 0.0;  // annealed correlation length 1 / F(beta)
	int n_blocks = 0;
};

// theta = 0 picks the default (1 + alpha)^{-1/2}
CoarseGrainConfig coarse_grain_config(const AnnealedModel& model, double beta,
									  int n_blocks, double theta = 0.0);

// Per-block Holder mass E[g^{-theta/(1-theta)}]^{1-theta} for the penalty
// g = 1_{A^c} + eta 1_A, with eta set so the A part contributes exactly one,
// which makes the mass (P(A^c) + 1)^{1-theta} <= 2.
struct HolderMass {
	double eta = 0.0;
	double mass = 0.0;
};
HolderMass holder_mass(double p_a, double theta);

// sup_r K(r/2) / K(r): deterministic weight-factorization constant, finite
// with limits 1 at r = 0 and 2^{1+alpha} at infinity (valid for rho <= 1/2)
double factorization_constant(const ReturnProbabilityCurve& curve);

// beta placements above beta0, constants c1 and C0 fixed by convention
double beta1_power(const AnnealedModel& model, double rho, double nu,
				   double c1 = 0.5, double C0 = 10.0);
double beta1_marginal(const AnnealedModel& model, const KernelTable& kernel,
					  double rho, double c1 = 0.5, double C0 = 10.0);

struct StatLine {
	std::string name;
	double param = 0.0;
	double value = 0.0;
	double std_error = 0.0;
	double n = 0.0;
};

struct StatReport {
	std::vector<StatLine> lines;
	std::vector<std::string> notes;

	void add(std::string name, double param, double value, double se = 0.0,
			 double n = 0.0);
	const StatLine& at(const std::string& name) const;
	const StatLine& at(const std::string& name, double param) const;
	std::vector<const StatLine*> all(const std::string& name) const;
};

// f(beta) = sum_{k >= beta0/K(1/F(beta))} mu_bar(k), the rate of jumps large
// enough to be felt within one correlation length
double f_beta(const KernelTable& kernel, const AnnealedModel& model,
			  double beta);

// jumps with theta in (a, b] and U >= threshold
std::int64_t jump_count(const EnvPath& path, double a, double b,
						double threshold);

// jumps with theta in (a, b] and U K(theta) >= beta0
std::int64_t criticality_stat(const EnvPath& path, double a, double b,
							  const ReturnProbabilityCurve& curve);

// closed-form mean of criticality_stat over (0, T] at jump rate rho
double criticality_mean(const KernelTable& kernel,
						const ReturnProbabilityCurve& curve, double rho,
						double T);

// sum of xi(U) over jumps in (0, T] with U <= weights.threshold
double marginal_stat(const EnvPath& path, double T,
					 const MarginalWeights& weights);

// Poisson mean and variance of marginal_stat over (0, T] under the free law
struct MarginalMoments {
	double mean = 0.0;
	double variance = 0.0;
};
MarginalMoments marginal_moments(const KernelTable& kernel,
								 const MarginalWeights& weights, double rho);

// Event cutoffs; a pure function of (spec, model, rho), recomputation is
// bit-identical.
struct EventThresholds {
	double a_cut = 0.0;   // the A statistic is compared against this
	double a_mean = 0.0;  // free-environment mean of the A statistic
	double a_sd = 0.0;    // free-environment std deviation (marginal regime)
	double b_cut = 0.0;   // the renewal sum must reach this for B
};
EventThresholds event_thresholds(const EventSpec& spec,
								 const AnnealedModel& model,
								 const TransitionKernel& tk, double rho);

bool a_event(const EnvPath& path, const EventSpec& spec,
			 const AnnealedModel& model, const TransitionKernel& tk);

bool b_event(const RenewalTrajectory& tau, const EventSpec& spec,
			 const AnnealedModel& model, const TransitionKernel& tk);

// Nested Monte Carlo: outer tau ~ Q_{[r,s]} via the renewal bridge, inner
// self-normalized importance-weighted estimate of P_tau(A^c).  Reports P(A)
// (pooled over the unweighted environment draws), Q_{[r,s]}[P_tau(A^c)],
// Q(B^c), and for the local-time regime the exact pinning probability
// Q_{[r,s]}[P_tau(all tau-points pinned)].
StatReport epsilon_good_probe(const EventSpec& spec, const AnnealedModel& model,
							  const TransitionKernel& tk, double rho,
							  std::size_t n_outer, std::size_t n_inner,
							  Rng& rng);

// Closed-form means of the regime statistic over a single pinned block of
// each length in grid, against the free means: the size-biased environment
// sees fewer large jumps, and the report quantifies the deficit.
StatReport expectation_shift_report(const AnnealedModel& model,
									const TransitionKernel& tk, double rho,
									Regime regime,
									const std::vector<double>& grid,
									double beta = 0.0);

// E[(Z^Y_{beta,nT})^theta] for n = 1..n_blocks with T = 1/F(beta), by direct
// Monte Carlo over environments with a Volterra solve per sample.  theta = 0
// picks the default (1 + alpha)^{-1/2}.  mc_budget caps the total number of
// solves; exhaustion yields partial results plus a note.
StatReport fractional_moment(const AnnealedModel& model,
							 const TransitionKernel& tk, double rho,
							 double beta, double theta, int n_blocks,
							 std::size_t mc_budget, Rng& rng);

// (1/T) E[log Z^Y_{beta,T}] per horizon, extrapolated linearly in 1/T
StatReport quenched_free_energy(const AnnealedModel& model,
								const TransitionKernel& tk, double rho,
								double beta, const std::vector<double>& T_grid,
								std::size_t reps, Rng& rng);

// distribution of the normalized partition W at beta0 per horizon, with the
// slope of log median against log T
StatReport criticality_experiment(const AnnealedModel& model,
								  const TransitionKernel& tk, double rho,
								  const std::vector<double>& T_grid,
								  std::size_t reps, Rng& rng);

// (1/T) log E[1 ^ W] per beta, with the ratio to F(beta)
StatReport irrelevance_gap(const AnnealedModel& model,
						   const TransitionKernel& tk, double rho,
						   const std::vector<double>& beta_grid, double T,
						   std::size_t reps, Rng& rng);

}  // namespace rwpm
