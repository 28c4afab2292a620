#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rwpm/rng.hpp"

namespace rwpm {

enum class SlowVariation { Constant, LogPower };

struct KernelSpec {
	double gamma = 0.5;              // tail index, must lie in (0,1)
	SlowVariation slow_var = SlowVariation::Constant;
	double kappa = 0.0;              // exponent of the log-power slowly varying factor
	std::int64_t x_max = 1 << 20;    // exact tabulation radius (>= 2^10)
};

// Tabulated heavy-tailed jump kernel
//
//   J(x) = c * phi(|x|) * (1+|x|)^{-(1+gamma)},   sum_{x in Z} J(x) = 1,
//
// with phi == 1 or phi(u) = log(e+u)^kappa, together with the derived
// enriched-jump measure
//
//   mu_bar(k) = (2k+1) (J(k) - J(k+1)),
//
// its tail sums, and the characteristic exponent
//
//   hhat(theta) = sum_x J(x) (1 - cos(theta x)).
//
// Values are exact (tabulated) up to x_max and continued analytically beyond,
// with tail sums evaluated by midpoint-corrected integrals.  The table is
// immutable after construction and safe for concurrent reads.
class KernelTable {
public:
	explicit KernelTable(const KernelSpec& spec);

	const KernelSpec& spec() const { return spec_; }
	double gamma() const { return spec_.gamma; }

	// phi(u) for u >= 0
	double phi(double u) const;

	// J(x); analytic continuation for |x| > x_max
	double j(std::int64_t x) const;

	// sum_{|x| > n} J(x) combined over both signs, n >= 0 (real-valued n allowed)
	double tail_j_both(double n) const;
	// one-sided sum_{x > n} J(x)
	double tail_j(double n) const;

	// mu_bar(k) = (2k+1)(J(k)-J(k+1)), k >= 0
	double mu_bar(std::int64_t k) const;

	// sum_{l >= ceil(threshold)} mu_bar(l); total mass (threshold <= 0) equals 1
	double tail_mu_bar(double threshold) const;

	// characteristic exponent, theta in [0, pi]
	double hhat(double theta) const;
	double hhat_pi() const { return hhat_pi_; }

	double normalization() const { return norm_; }
	// diagnostic: tabulated mass plus analytic tail (should be 1 to ~1e-15)
	double total_mass() const { return mass_in_ + 2.0 * tail_beyond_; }

	// amplitude U ~ mu_bar (includes the k = 0 ghost atom)
	std::int64_t sample_amplitude(Rng& rng) const;
	// single step x ~ J (signed)
	std::int64_t sample_displacement(Rng& rng) const;

	// Internal helpers exposed for cross-validation in tests.
	double tail_cos_integral(double a, double theta) const;  // int_a^inf c*phi(u)(1+u)^-(1+g) cos(theta u) du
	double tail_power_integral(double a) const;              // same without the cosine, midpoint-corrected

private:
	KernelSpec spec_;
	double norm_ = 1.0;        // c
	double mass_in_ = 0.0;     // sum_{|x| <= x_max} J(x)
	double tail_beyond_ = 0.0; // sum_{x > x_max} J(x)
	double hhat_pi_ = 0.0;

	std::vector<double> j_;         // J(x), x = 0..x_max
	std::vector<double> suffix_j_;  // suffix_j_[n] = sum_{x >= n} J(x) (one-sided), n = 0..x_max+1
	std::vector<double> suffix_mu_; // suffix_mu_[n] = sum_{l >= n} mu_bar(l), n = 0..x_max+1
	std::vector<double> cdf_mu_;    // cumulative mu_bar for amplitude sampling
	std::vector<double> cdf_j_;     // cumulative one-sided J for displacement sampling

	// characteristic exponent caches
	double dtheta_ = 0.0;             // uniform grid spacing pi/n_dct
	double theta_lo_ = 0.0;           // below this, use the log-log grid
	std::vector<double> h_uniform_;   // hhat on theta_j = j*pi/n_dct
	std::vector<double> log_theta_;   // log grid for small theta
	std::vector<double> log_h_;       // log hhat on that grid
	double small_slope_ = 0.0;        // local power for theta below the log grid

	double base(double u) const;          // phi(u)(1+u)^{-(1+gamma)}, unnormalized
	double base_logderiv(double u) const; // d/du log base
	double j_analytic(double x) const;    // norm_ * base(x)
	double hhat_small_direct(double theta) const;
	double invert_tail_mu(double target) const;   // continuous n with tail_mu_bar-cont(n) = target
	double tail_mu_bar_cont(double n) const;      // (2n+1)J(n) + 2 tail_j(n), analytic region
	void build_table();
	void build_hhat();
};

}  // namespace rwpm
