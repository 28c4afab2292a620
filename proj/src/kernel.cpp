#include "rwpm/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwpm {

namespace {

// 7-point Gauss-Legendre rule on [-1, 1]
constexpr int kGlN = 7;
constexpr double kGlX[kGlN] = {
	0.0,
	-0.4058451513773972, 0.4058451513773972,
	-0.7415311855993945, 0.7415311855993945,
	-0.9491079123427585, 0.9491079123427585};
constexpr double kGlW[kGlN] = {
	0.4179591836734694,
	0.3818300505051189, 0.3818300505051189,
	0.2797053914892766, 0.2797053914892766,
	0.1294849661688697, 0.1294849661688697};

std::int64_t pow2_ceil(std::int64_t v) {
	std::int64_t p = 1;
	while (p < v) p <<= 1;
	return p;
}

}  // namespace

double KernelTable::phi(double u) const {
	if (spec_.slow_var == SlowVariation::Constant) return 1.0;
	return std::pow(std::log(std::exp(1.0) + u), spec_.kappa);
}

double KernelTable::base(double u) const {
	return phi(u) * std::pow(1.0 + u, -(1.0 + spec_.gamma));
}

double KernelTable::base_logderiv(double u) const {
	double d = -(1.0 + spec_.gamma) / (1.0 + u);
	if (spec_.slow_var == SlowVariation::LogPower) {
		double eu = std::exp(1.0) + u;
		d += spec_.kappa / (eu * std::log(eu));
	}
	return d;
}

double KernelTable::j_analytic(double x) const { return norm_ * base(std::fabs(x)); }

double KernelTable::j(std::int64_t x) const {
	std::int64_t a = std::llabs(x);
	if (a <= spec_.x_max) return j_[static_cast<std::size_t>(a)];
	return j_analytic(static_cast<double>(a));
}

double KernelTable::tail_power_integral(double a) const {
	// norm * [ int_a^inf base(u) du + base'(a)/24 ]  (midpoint-corrected tail sum)
	double total = 0.0;
	int n_panels = static_cast<int>(std::ceil(45.0 / spec_.gamma));
	for (int p = 0; p < n_panels; ++p) {
		double s0 = p, s1 = p + 1;
		double acc = 0.0;
		for (int i = 0; i < kGlN; ++i) {
			double s = 0.5 * (s0 + s1) + 0.5 * kGlX[i];
			double u = a * std::exp(s);
			acc += kGlW[i] * base(u) * u;
		}
		total += 0.5 * acc;
	}
	double corr = base(a) * base_logderiv(a) / 24.0;
	return norm_ * (total + corr);
}

double KernelTable::tail_cos_integral(double a, double theta) const {
	if (theta == 0.0) return tail_power_integral(a);
	auto g = [this](double u) { return norm_ * base(u); };
	auto ibp = [&](double u0) {
		// four-term integration by parts for int_{u0}^inf g(u) cos(theta u) du
		double h = std::max(1e-3, 1e-3 * u0);
		double g0 = g(u0);
		double g1 = g0 * base_logderiv(u0);
		double g1p = g(u0 + h) * base_logderiv(u0 + h);
		double g1m = g(u0 - h) * base_logderiv(u0 - h);
		double g2 = (g1p - g1m) / (2.0 * h);
		double g3 = (g1p - 2.0 * g1 + g1m) / (h * h);
		double s = std::sin(theta * u0), c = std::cos(theta * u0);
		double t1 = 1.0 / theta, t2 = t1 * t1;
		return -g0 * s * t1 - g1 * c * t2 + g2 * s * t1 * t2 + g3 * c * t2 * t2;
	};
	double u_hi = 50.0 / theta;
	double total = 0.0;
	if (u_hi <= a) {
		total = ibp(a);
	} else {
		double u0 = a;
		double cap = M_PI / (3.0 * theta);
		while (u0 < u_hi) {
			double w = std::min({0.5 * u0 + 1.0, cap, u_hi - u0});
			double u1 = u0 + w;
			double acc = 0.0;
			for (int i = 0; i < kGlN; ++i) {
				double u = 0.5 * (u0 + u1) + 0.5 * w * kGlX[i];
				acc += kGlW[i] * g(u) * std::cos(theta * u);
			}
			total += 0.5 * w * acc;
			u0 = u1;
		}
		total += ibp(u_hi);
	}
	// midpoint correction: + d/du [g(u) cos(theta u)] / 24 at u = a
	double corr = (g(a) * base_logderiv(a) * std::cos(theta * a) -
				   g(a) * theta * std::sin(theta * a)) / 24.0;
	return total + corr;
}

void KernelTable::build_table() {
	const auto& s = spec_;
	if (!(s.gamma > 0.0 && s.gamma < 1.0))
		throw std::invalid_argument("KernelTable: gamma must lie in (0,1)");
	if (s.x_max < (1 << 10))
		throw std::invalid_argument("KernelTable: x_max must be >= 2^10");
	if (s.slow_var == SlowVariation::LogPower && s.kappa < 0.0)
		throw std::invalid_argument("KernelTable: kappa must be >= 0");

	std::size_t n = static_cast<std::size_t>(s.x_max) + 1;
	j_.resize(n);

	norm_ = 1.0;  // so that tail_power_integral below is unnormalized
	double side = 0.0;  // sum_{x=1..x_max} base(x), accumulated small-to-large
	for (std::int64_t x = s.x_max; x >= 1; --x)
		side += base(static_cast<double>(x));
	double tail_un = tail_power_integral(static_cast<double>(s.x_max) + 0.5);
	double total_un = base(0.0) + 2.0 * side + 2.0 * tail_un;
	norm_ = 1.0 / total_un;

	for (std::size_t x = 0; x < n; ++x)
		j_[x] = norm_ * base(static_cast<double>(x));
	for (std::size_t x = 0; x + 1 < n; ++x)
		if (j_[x + 1] > j_[x])
			throw std::invalid_argument("KernelTable: kernel not monotone (kappa too large)");

	tail_beyond_ = norm_ * tail_un;
	suffix_j_.resize(n + 1);
	suffix_j_[n] = tail_beyond_;
	for (std::size_t x = n; x-- > 0;) suffix_j_[x] = suffix_j_[x + 1] + j_[x];
	mass_in_ = j_[0] + 2.0 * (suffix_j_[1] - tail_beyond_);

	// suffix sums of mu_bar; beyond the table, the telescoped closed form is exact
	suffix_mu_.resize(n + 1);
	suffix_mu_[n - 1] = (2.0 * s.x_max + 1.0) * j_[n - 1] + 2.0 * suffix_j_[n];
	suffix_mu_[n] = tail_mu_bar_cont(static_cast<double>(s.x_max) + 1.0);
	for (std::size_t k = n - 1; k-- > 0;)
		suffix_mu_[k] = suffix_mu_[k + 1] + mu_bar(static_cast<std::int64_t>(k));

	cdf_mu_.resize(n - 1);
	double acc = 0.0;
	for (std::size_t k = 0; k + 1 < n; ++k) {
		acc += mu_bar(static_cast<std::int64_t>(k));
		cdf_mu_[k] = acc;
	}
	cdf_j_.resize(n - 1);
	acc = 0.0;
	for (std::size_t x = 1; x < n; ++x) {
		acc += j_[x];
		cdf_j_[x - 1] = acc;
	}
}

double KernelTable::mu_bar(std::int64_t k) const {
	if (k < 0) throw std::invalid_argument("mu_bar: k must be >= 0");
	double jk, jk1;
	if (k < spec_.x_max) {
		jk = j_[static_cast<std::size_t>(k)];
		jk1 = j_[static_cast<std::size_t>(k) + 1];
	} else {
		jk = j(k);
		jk1 = j_analytic(static_cast<double>(k) + 1.0);
	}
	return (2.0 * k + 1.0) * (jk - jk1);
}

double KernelTable::tail_j(double n) const {
	double m = std::floor(n) + 1.0;  // first included integer
	if (m <= static_cast<double>(spec_.x_max) + 1.0)
		return suffix_j_[static_cast<std::size_t>(m)];
	return tail_power_integral(m - 0.5);
}

double KernelTable::tail_j_both(double n) const {
	if (n < 0.0) throw std::invalid_argument("tail_j_both: n must be >= 0");
	return 2.0 * tail_j(n);
}

double KernelTable::tail_mu_bar_cont(double n) const {
	return (2.0 * n + 1.0) * j_analytic(n) + 2.0 * tail_power_integral(n + 0.5);
}

double KernelTable::tail_mu_bar(double threshold) const {
	double c = std::ceil(threshold);
	if (c <= 0.0) return suffix_mu_[0];
	if (c <= static_cast<double>(spec_.x_max) + 1.0)
		return suffix_mu_[static_cast<std::size_t>(c)];
	return tail_mu_bar_cont(c);
}

void KernelTable::build_hhat() {
	const std::int64_t n_dct = std::max<std::int64_t>(1 << 16, 2 * pow2_ceil(spec_.x_max));
	dtheta_ = M_PI / static_cast<double>(n_dct);
	theta_lo_ = 256.0 * dtheta_;

	// exact part sum_{|x| <= x_max} J(x) cos(theta_j x) for all grid points at once
	std::size_t np = static_cast<std::size_t>(n_dct) + 1;
	double* in = fftw_alloc_real(np);
	double* out = fftw_alloc_real(np);
	std::fill(in, in + np, 0.0);
	std::copy(j_.begin(), j_.end(), in);
	fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(np), in, out,
									  FFTW_REDFT00, FFTW_ESTIMATE);
	fftw_execute(plan);
	fftw_destroy_plan(plan);

	const double a = static_cast<double>(spec_.x_max) + 0.5;
	// theta-independent pieces of the integration-by-parts tail (precomputed once)
	h_uniform_.resize(np);
	h_uniform_[0] = 0.0;
	for (std::size_t jdx = 1; jdx < np; ++jdx) {
		double theta = dtheta_ * static_cast<double>(jdx);
		double tail_cos = tail_cos_integral(a, theta);
		h_uniform_[jdx] = (mass_in_ - out[jdx]) + 2.0 * (tail_beyond_ - tail_cos);
	}
	fftw_free(in);
	fftw_free(out);
	hhat_pi_ = h_uniform_[np - 1];

	// log-log grid below theta_lo
	const double th_min = 1e-8, th_max = theta_lo_ * 1.25;
	int npts = static_cast<int>(std::ceil(96.0 * std::log10(th_max / th_min))) + 1;
	log_theta_.resize(npts);
	log_h_.resize(npts);
	double l0 = std::log(th_min), l1 = std::log(th_max);
	for (int i = 0; i < npts; ++i) {
		double lt = l0 + (l1 - l0) * i / (npts - 1);
		log_theta_[i] = lt;
		log_h_[i] = std::log(hhat_small_direct(std::exp(lt)));
	}
	small_slope_ = (log_h_[1] - log_h_[0]) / (log_theta_[1] - log_theta_[0]);
}

double KernelTable::hhat_small_direct(double theta) const {
	const std::int64_t x1 = std::min<std::int64_t>(spec_.x_max, 16384);
	double acc = 0.0;
	for (std::int64_t x = x1; x >= 1; --x) {
		double tx = theta * static_cast<double>(x);
		// 1 - cos via sin half-angle for accuracy at small arguments
		double sh = std::sin(0.5 * tx);
		acc += j_[static_cast<std::size_t>(x)] * (2.0 * sh * sh);
	}
	double a = static_cast<double>(x1) + 0.5;
	double tail1 = tail_power_integral(a);
	double tailc = tail_cos_integral(a, theta);
	return 2.0 * acc + 2.0 * (tail1 - tailc);
}

namespace {
// 4-point Lagrange interpolation at t given values y at equally spaced
// abscissae i0..i0+3 (unit spacing); t measured from i0.
double lagrange4(const double* y, double t) {
	double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
	double l1 = t * (t - 2) * (t - 3) / 2.0;
	double l2 = -t * (t - 1) * (t - 3) / 2.0;
	double l3 = t * (t - 1) * (t - 2) / 6.0;
	return y[0] * l0 + y[1] * l1 + y[2] * l2 + y[3] * l3;
}
}  // namespace

double KernelTable::hhat(double theta) const {
	if (!(theta >= 0.0 && theta <= M_PI + 1e-12))
		throw std::domain_error("hhat: theta must lie in [0, pi]");
	if (theta == 0.0) return 0.0;
	if (theta >= theta_lo_) {
		double pos = std::min(theta, M_PI) / dtheta_;
		std::size_t j0 = static_cast<std::size_t>(pos);
		std::size_t lo = (j0 >= 1) ? j0 - 1 : 0;
		if (lo + 3 >= h_uniform_.size()) lo = h_uniform_.size() - 4;
		return lagrange4(&h_uniform_[lo], pos - static_cast<double>(lo));
	}
	double lt = std::log(theta);
	if (lt < log_theta_.front())
		return std::exp(log_h_.front() + small_slope_ * (lt - log_theta_.front()));
	double step = log_theta_[1] - log_theta_[0];
	double pos = (lt - log_theta_.front()) / step;
	std::size_t j0 = static_cast<std::size_t>(pos);
	std::size_t lo = (j0 >= 1) ? j0 - 1 : 0;
	if (lo + 3 >= log_h_.size()) lo = log_h_.size() - 4;
	return std::exp(lagrange4(&log_h_[lo], pos - static_cast<double>(lo)));
}

double KernelTable::invert_tail_mu(double target) const {
	// continuous n >= x_max with tail_mu_bar_cont(n) = target (decreasing in n)
	double lo = static_cast<double>(spec_.x_max), hi = lo;
	double span = lo;
	while (tail_mu_bar_cont(hi) > target && hi < 4.6e18) {
		lo = hi;
		span *= 4.0;
		hi = lo + span;
	}
	for (int it = 0; it < 80; ++it) {
		double mid = 0.5 * (lo + hi);
		if (tail_mu_bar_cont(mid) > target) lo = mid; else hi = mid;
		if (hi - lo < 0.5) break;
	}
	return 0.5 * (lo + hi);
}

std::int64_t KernelTable::sample_amplitude(Rng& rng) const {
	double u = rng.u01() * suffix_mu_[0];
	if (u <= cdf_mu_.back()) {
		auto it = std::lower_bound(cdf_mu_.begin(), cdf_mu_.end(), u);
		return static_cast<std::int64_t>(it - cdf_mu_.begin());
	}
	double rem = std::max(suffix_mu_[0] - u, 1e-300);
	return static_cast<std::int64_t>(std::floor(invert_tail_mu(rem)));
}

std::int64_t KernelTable::sample_displacement(Rng& rng) const {
	double u = rng.u01();
	if (u <= j_[0]) return 0;
	double sign = (rng.u01() < 0.5) ? 1.0 : -1.0;
	double t = rng.u01() * suffix_j_[1];
	std::int64_t mag;
	if (t <= cdf_j_.back()) {
		auto it = std::lower_bound(cdf_j_.begin(), cdf_j_.end(), t);
		mag = static_cast<std::int64_t>(it - cdf_j_.begin()) + 1;
	} else {
		double rem = std::max(suffix_j_[1] - t, 1e-300);
		// invert the analytic tail integral
		double lo = static_cast<double>(spec_.x_max) + 0.5, hi = lo, span = lo;
		while (tail_power_integral(hi) > rem && hi < 4.6e18) {
			lo = hi;
			span *= 4.0;
			hi = lo + span;
		}
		for (int it2 = 0; it2 < 80; ++it2) {
			double mid = 0.5 * (lo + hi);
			if (tail_power_integral(mid) > rem) lo = mid; else hi = mid;
			if (hi - lo < 0.5) break;
		}
		mag = static_cast<std::int64_t>(std::ceil(0.5 * (lo + hi)));
	}
	return static_cast<std::int64_t>(sign) * mag;
}

KernelTable::KernelTable(const KernelSpec& spec) : spec_(spec) {
	if (spec_.slow_var == SlowVariation::Constant) spec_.kappa = 0.0;
	build_table();
	build_hhat();
}

}  // namespace rwpm
