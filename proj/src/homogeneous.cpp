#include "rwpm/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rwpm {

namespace {

const double GL7_X[7] = {0.0,
						 -0.4058451513773972, 0.4058451513773972,
						 -0.7415311855993945, 0.7415311855993945,
						 -0.9491079123427585, 0.9491079123427585};
const double GL7_W[7] = {0.4179591836734694,
						 0.3818300505051189, 0.3818300505051189,
						 0.2797053914892766, 0.2797053914892766,
						 0.1294849661688697, 0.1294849661688697};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double compute_beta0(const ReturnProbabilityCurve& curve) {
	if (curve.fitted_exponent <= 1.0)
		throw std::runtime_error(
			"return probability tail exponent <= 1: beta0 integral diverges");
	return 1.0 / curve.integral_p0();
}

AnnealedModel::AnnealedModel(ReturnProbabilityCurve curve, double hhat_pi)
	: curve_(std::move(curve)), hhat_pi_(hhat_pi) {
	beta0_ = compute_beta0(curve_);
	curve_.set_beta0(beta0_);
	alpha_ = curve_.fitted_exponent - 1.0;
}

double AnnealedModel::integrate_weighted(double F, int k, double upper) const {
	if (F < 0.0) throw std::domain_error("integrate_weighted: negative tilt");
	if (upper <= 0.0) return 0.0;
	const auto& g = curve_.grid;
	const auto& p = curve_.p0;
	double acc = 0.0;

	// uniform section: integrate the local interpolating parabola (the same
	// one the curve's suffix integrals use, keeping beta0 and G(0) in exact
	// agreement)
	for (std::size_t i = 1; i < curve_.lin_count; ++i) {
		double a = g[i - 1], b = std::min(g[i], upper);
		if (a >= upper) return acc;
		if (F * a > 50.0) return acc;
		std::size_t n0 = (i + 1 < curve_.lin_count) ? i - 1 : i - 2;
		double t0 = g[n0], t1 = g[n0 + 1], t2 = g[n0 + 2];
		double y0 = p[n0], y1 = p[n0 + 1], y2 = p[n0 + 2];
		double c = 0.5 * (b + a), d = 0.5 * (b - a);
		for (int m = 0; m < 7; ++m) {
			double t = c + d * GL7_X[m];
			double l0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2));
			double l1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2));
			double l2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1));
			double val = y0 * l0 + y1 * l1 + y2 * l2;
			acc += d * GL7_W[m] * std::pow(t, k) * std::exp(-F * t) * val;
		}
	}

	// geometric section: per-segment power law, Gauss in log t
	for (std::size_t i = curve_.lin_count; i < g.size(); ++i) {
		double a = g[i - 1], b = std::min(g[i], upper);
		if (a >= upper) return acc;
		if (F * a > 50.0) return acc;
		double q = std::log(p[i - 1] / p[i]) / std::log(g[i] / g[i - 1]);
		double ua = std::log(a), ub = std::log(b);
		double c = 0.5 * (ub + ua), d = 0.5 * (ub - ua);
		for (int m = 0; m < 7; ++m) {
			double t = std::exp(c + d * GL7_X[m]);
			double val = p[i - 1] * std::pow(t / a, -q);
			acc += d * GL7_W[m] * std::pow(t, k + 1) * std::exp(-F * t) * val;
		}
	}

	// fitted power-law tail
	double t0 = g.back();
	if (t0 >= upper || F * t0 > 50.0) return acc;
	double pe = curve_.tail_p, A = curve_.tail_A;
	if (F == 0.0 && upper == kInf) {
		if (pe <= k + 1.0)
			throw std::runtime_error("tail moment diverges: exponent too small");
		return acc + A * std::pow(t0, k + 1.0 - pe) / (pe - 1.0 - k);
	}
	double a = t0;
	while (a < upper && F * a <= 50.0) {
		double b = std::min(a * 1.3, upper);
		double ua = std::log(a), ub = std::log(b);
		double c = 0.5 * (ub + ua), d = 0.5 * (ub - ua);
		for (int m = 0; m < 7; ++m) {
			double t = std::exp(c + d * GL7_X[m]);
			acc += d * GL7_W[m] * std::pow(t, k + 1) * std::exp(-F * t) *
				   A * std::pow(t, -pe);
		}
		a = b;
	}
	return acc;
}

double AnnealedModel::laplace_transform(double F) const {
	return integrate_weighted(F, 0, kInf);
}

double AnnealedModel::free_energy(double beta) const {
	if (beta <= 0.0) throw std::domain_error("free_energy: beta must be positive");
	if (beta <= beta0_) return 0.0;
	{
		std::lock_guard<std::mutex> g(mu_);
		auto it = fcache_.find(beta);
		if (it != fcache_.end()) return it->second;
	}
	double target = 1.0 / beta;
	double hi = 1e-4, hi_cap = 10.0 * std::max(hhat_pi_, beta);
	while (laplace_transform(hi) > target) {
		hi *= 4.0;
		if (hi > hi_cap)
			throw std::runtime_error("free_energy: root bracketing failed "
									 "(curve grid too short?)");
	}
	double lo = 0.0;
	for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
		double mid = 0.5 * (lo + hi);
		(laplace_transform(mid) > target ? lo : hi) = mid;
	}
	double F = 0.5 * (lo + hi);
	if (std::fabs(laplace_transform(F) - target) > 1e-8 * target)
		throw std::runtime_error("free_energy: residual tolerance not met");
	std::lock_guard<std::mutex> g(mu_);
	fcache_[beta] = F;
	return F;
}

std::vector<double> AnnealedModel::renewal_density(double T_max,
												   double step) const {
	if (step > 0.05 + 1e-12)
		throw std::invalid_argument("renewal_density: step must be <= 0.05");
	return annealed_partition(beta0_, T_max, step);
}

std::vector<double> AnnealedModel::volterra_kernel(double T_max,
												   double step) const {
	if (step <= 0.0 || T_max <= 0.0)
		throw std::invalid_argument("volterra_kernel: bad grid");
	std::size_t N = static_cast<std::size_t>(std::llround(T_max / step));
	std::vector<double> K(N + 1);
	for (std::size_t i = 0; i <= N; ++i)
		K[i] = curve_.K_at(static_cast<double>(i) * step);
	// normalize the discrete mass: the trapezoid surplus (h^2/12)|K'(0)|
	// makes the discrete renewal process slightly supercritical, which shows
	// up as spurious exponential growth of u at long horizons
	double mass = 0.5 * (K[0] + K[N]);
	for (std::size_t i = 1; i < N; ++i) mass += K[i];
	mass = mass * step + curve_.Kbar(T_max);
	for (double& v : K) v /= mass;
	return K;
}

std::vector<double> AnnealedModel::annealed_partition(double beta, double T_max,
													  double step) const {
	double b = beta / beta0_;
	std::vector<double> K = volterra_kernel(T_max, step);
	std::size_t N = K.size() - 1;
	std::vector<double> z(N + 1);
	double diag = 1.0 - 0.5 * b * step * K[0];
	if (diag <= 0.0)
		throw std::invalid_argument("annealed_partition: step too large");
	z[0] = b * K[0];
	for (std::size_t i = 1; i <= N; ++i) {
		double conv = 0.5 * K[i] * z[0];
		for (std::size_t j = 1; j < i; ++j) conv += K[i - j] * z[j];
		z[i] = b * (K[i] + step * conv) / diag;
	}
	return z;
}

KbetaSampler AnnealedModel::kbeta_sampler(double beta) const {
	if (beta < beta0_)
		throw std::domain_error("kbeta_sampler: beta below beta0");
	KbetaSampler s;
	s.beta = beta;
	s.F = free_energy(beta);
	double scale = beta;  // (beta/beta0) * beta0, multiplying p0
	const auto& g = curve_.grid;

	const auto& p = curve_.p0;
	s.ts.push_back(0.0);
	s.cdf.push_back(0.0);
	// piece masses use the same per-segment interpolants as
	// integrate_weighted, so the cdf total closes against beta * G(F) = 1
	for (std::size_t i = 1; i < curve_.lin_count; ++i) {
		double a = g[i - 1], b = g[i];
		std::size_t n0 = (i + 1 < curve_.lin_count) ? i - 1 : i - 2;
		double t0 = g[n0], t1 = g[n0 + 1], t2 = g[n0 + 2];
		double y0 = p[n0], y1 = p[n0 + 1], y2 = p[n0 + 2];
		double c = 0.5 * (b + a), d = 0.5 * (b - a), mass = 0.0;
		for (int m = 0; m < 7; ++m) {
			double t = c + d * GL7_X[m];
			double l0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2));
			double l1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2));
			double l2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1));
			mass += d * GL7_W[m] * std::exp(-s.F * t) *
					(y0 * l0 + y1 * l1 + y2 * l2);
		}
		s.ts.push_back(b);
		s.cdf.push_back(s.cdf.back() + scale * mass);
	}
	for (std::size_t i = curve_.lin_count; i < g.size(); ++i) {
		double aseg = g[i - 1];
		double q = std::log(p[i - 1] / p[i]) / std::log(g[i] / g[i - 1]);
		double mid = std::sqrt(g[i - 1] * g[i]);
		for (double bnd : {mid, g[i]}) {
			double a = s.ts.back(), b = bnd;
			double ua = std::log(a), ub = std::log(b);
			double c = 0.5 * (ub + ua), d = 0.5 * (ub - ua), mass = 0.0;
			for (int m = 0; m < 7; ++m) {
				double t = std::exp(c + d * GL7_X[m]);
				mass += d * GL7_W[m] * t * std::exp(-s.F * t) *
						p[i - 1] * std::pow(t / aseg, -q);
			}
			s.ts.push_back(b);
			s.cdf.push_back(s.cdf.back() + scale * mass);
		}
	}

	s.tail_t0 = g.back();
	s.tail_p = curve_.tail_p;
	double tail = 0.0;
	if (s.F == 0.0) {
		tail = scale * curve_.tail_A * std::pow(s.tail_t0, 1.0 - s.tail_p) /
			   (s.tail_p - 1.0);
	} else {
		double a = s.tail_t0;
		while (s.F * a <= 50.0) {
			double b = a * 1.3;
			double ua = std::log(a), ub = std::log(b);
			double c = 0.5 * (ub + ua), d = 0.5 * (ub - ua);
			for (int m = 0; m < 7; ++m) {
				double t = std::exp(c + d * GL7_X[m]);
				tail += d * GL7_W[m] * t * std::exp(-s.F * t) * scale *
						curve_.tail_A * std::pow(t, -s.tail_p);
			}
			a = b;
		}
	}
	s.tail_mass = tail;
	s.total = s.cdf.back() + tail;
	return s;
}

double KbetaSampler::sample(Rng& rng) const {
	double u = rng.u01() * total;
	if (u <= cdf.back()) {
		std::size_t i = static_cast<std::size_t>(
			std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
		if (i == 0) i = 1;
		double f = (u - cdf[i - 1]) / std::max(cdf[i] - cdf[i - 1], 1e-300);
		return ts[i - 1] + f * (ts[i] - ts[i - 1]);
	}
	for (int attempt = 0; attempt < 100000; ++attempt) {
		double t = tail_t0 * std::pow(rng.u01(), -1.0 / (tail_p - 1.0));
		if (F == 0.0 || rng.u01() <= std::exp(-F * (t - tail_t0))) return t;
	}
	return tail_t0;
}

RenewalBridge AnnealedModel::renewal_bridge(double beta, double T,
											double step) const {
	RenewalBridge br;
	br.step = step;
	br.beta = beta;
	double F = free_energy(beta);
	auto z = annealed_partition(beta, T, step);
	std::size_t N = z.size() - 1;
	br.u.resize(N + 1);
	br.Kb.resize(N + 1);
	double b = beta / beta0_;
	for (std::size_t i = 0; i <= N; ++i) {
		double t = static_cast<double>(i) * step;
		br.u[i] = std::exp(-F * t) * z[i];
		br.Kb[i] = b * std::exp(-F * t) * curve_.K_at(t);
	}
	return br;
}

std::vector<std::int32_t> RenewalBridge::sample(Rng& rng) const {
	std::size_t N = u.size() - 1;
	std::vector<std::int32_t> out;
	std::size_t i = 0;
	while (i < N) {
		double total = Kb[N - i];  // terminal atom: renew exactly at T
		for (std::size_t j = i + 1; j < N; ++j)
			total += step * Kb[j - i] * u[N - j];
		double draw = rng.u01() * total, run = 0.0;
		std::size_t pick = N;
		for (std::size_t j = i + 1; j < N; ++j) {
			run += step * Kb[j - i] * u[N - j];
			if (run >= draw) {
				pick = j;
				break;
			}
		}
		out.push_back(static_cast<std::int32_t>(pick));
		i = pick;
	}
	return out;
}

TruncatedMoments AnnealedModel::truncated_moments(double beta) const {
	if (beta <= beta0_)
		throw std::domain_error("truncated_moments: beta must exceed beta0");
	TruncatedMoments tm;
	double F = free_energy(beta);
	tm.m_beta = beta * integrate_weighted(F, 1, kInf);
	tm.truncated_mean = beta * integrate_weighted(F, 1, 1.0 / F);
	tm.ratio_bound = tm.m_beta * F * F / curve_.K_at(1.0 / F);
	tm.laplace_ok = true;
	tm.laplace_margin = kInf;
	for (double frac : {0.125, 0.25, 0.375}) {
		double lam = frac * F;
		double lhs = beta * integrate_weighted(F - lam, 0, kInf);
		double rhs = 1.0 + lam * tm.m_beta +
					 10.0 * lam * lam * tm.m_beta / F;
		tm.laplace_ok = tm.laplace_ok && lhs <= rhs;
		tm.laplace_margin = std::min(tm.laplace_margin, rhs - lhs);
	}
	return tm;
}

}  // namespace rwpm
