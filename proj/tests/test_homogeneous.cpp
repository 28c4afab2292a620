#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "rwpm/homogeneous.hpp"
#include "rwpm/kernel.hpp"
#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"
#include "rwpm/stats.hpp"

using namespace rwpm;

namespace {

struct Setup {
	KernelTable kernel;
	TransitionKernel tk;
	AnnealedModel model;
	Setup(double g, double t_max = 1e4)
		: kernel({g, SlowVariation::Constant, 0.0, 1 << 14}),
		  tk(kernel),
		  model(return_prob_curve(tk, hybrid_grid(10.0, 0.025, t_max, 64)),
				kernel.hhat_pi()) {}
};

Setup& setup75() {
	static Setup s(0.75);
	return s;
}

Setup& setup40() {
	static Setup s(0.4);
	return s;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("beta0: positivity, grid-refinement stability, K normalization") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	CHECK(b0 > 0.0);
	// refined grid agrees to 1e-4 relative
	auto fine = return_prob_curve(
		s.tk, hybrid_grid(10.0, 0.0125, 1e4, 96));
	double b0f = compute_beta0(fine);
	CHECK(b0 == doctest::Approx(b0f).epsilon(1e-4));
	// int K = 1 after K := beta0 p0
	CHECK(s.model.curve().Kbar(0.0) == doctest::Approx(1.0).epsilon(1e-9));
	CHECK(s.model.laplace_transform(0.0) == doctest::Approx(1.0 / b0).epsilon(1e-12));
}

TEST_CASE("free energy: boundary, residual, monotonicity, convexity") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	CHECK(s.model.free_energy(b0) == 0.0);
	CHECK(s.model.free_energy(0.5 * b0) == 0.0);
	CHECK_THROWS(s.model.free_energy(-1.0));

	std::vector<double> F;
	for (int i = 0; i < 40; ++i) {
		double beta = b0 * (1.05 + 0.05 * i);
		double f = s.model.free_energy(beta);
		CHECK(std::fabs(s.model.laplace_transform(f) - 1.0 / beta) <=
			  1e-8 / beta);
		F.push_back(f);
	}
	for (std::size_t i = 1; i < F.size(); ++i) CHECK(F[i] > F[i - 1]);
	for (std::size_t i = 1; i + 1 < F.size(); ++i)
		CHECK(F[i + 1] - F[i] >= F[i] - F[i - 1] - 1e-12);
	// memoized: identical value on repeat
	CHECK(s.model.free_energy(1.5 * b0) == s.model.free_energy(1.5 * b0));
}

TEST_CASE("critical exponent nu from the free-energy curve") {
	// windows sit close above beta0: the asymptotic exponent only emerges
	// for beta - beta0 well below beta0
	{
		auto& s = setup75();
		double b0 = s.model.beta0();
		std::vector<double> lx, ly;
		for (int i = 0; i <= 10; ++i) {
			double d = 0.002 * std::pow(5.0, i / 10.0);
			lx.push_back(std::log(d * b0));
			ly.push_back(std::log(s.model.free_energy(b0 * (1.0 + d))));
		}
		auto fit = linear_fit(lx, ly);
		CHECK(fit.slope == doctest::Approx(3.0).epsilon(0.1 / 3.0));
	}
	{
		auto& s = setup40();
		double b0 = s.model.beta0();
		std::vector<double> lx, ly;
		for (int i = 0; i <= 10; ++i) {
			double d = 0.002 * std::pow(5.0, i / 10.0);
			lx.push_back(std::log(d * b0));
			ly.push_back(std::log(s.model.free_energy(b0 * (1.0 + d))));
		}
		auto fit = linear_fit(lx, ly);
		CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.05));
	}
}

TEST_CASE("renewal density: positivity, residual, small-t and Doney limits") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	double h = 0.05;
	auto u = s.model.renewal_density(1000.0, h);
	CHECK_THROWS(s.model.renewal_density(10.0, 0.2));
	for (double v : u) CHECK(v > 0.0);

	// recompute the trapezoid residual independently
	const auto& curve = s.model.curve();
	auto K = s.model.volterra_kernel(1000.0, h);
	for (std::size_t i : {7ul, 100ul, 5000ul}) {
		double conv = 0.5 * K[i] * u[0] + 0.5 * K[0] * u[i];
		for (std::size_t j = 1; j < i; ++j) conv += K[i - j] * u[j];
		double res = u[i] - (K[i] + h * conv);
		CHECK(std::fabs(res) < 1e-8);
	}

	// u/K -> 1 as t -> 0
	CHECK(u[1] / curve.K_at(h) == doctest::Approx(1.0).epsilon(0.05));

	// Doney local limit at alpha = 1/3: u(t) ~ (alpha sin(pi alpha)/pi) / (t^2 K(t))
	double t = 1000.0;
	double want = (1.0 / 3.0) * std::sin(M_PI / 3.0) / M_PI;
	double got = u.back() * t * t * curve.K_at(t);
	CHECK(got == doctest::Approx(want).epsilon(0.10));
	CHECK(b0 > 0.0);
}

TEST_CASE("renewal theorem at alpha > 1: u approaches 1/mean") {
	auto& s = setup40();
	double h = 0.05;
	auto u = s.model.renewal_density(2500.0, h);
	double m = s.model.beta0() * s.model.integrate_weighted(0.0, 1, kInf);
	CHECK(u.back() == doctest::Approx(1.0 / m).epsilon(0.02));
}

TEST_CASE("annealed partition: identity at beta0, sandwich, empty expansion") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	double h = 0.05, T = 50.0;
	auto u = s.model.annealed_partition(b0, T, h);
	auto u2 = s.model.renewal_density(T, h);
	for (std::size_t i = 0; i < u.size(); ++i)
		CHECK(u[i] == doctest::Approx(u2[i]).epsilon(1e-6));

	for (double mult : {1.2, 1.5, 1.8}) {
		double beta = mult * b0;
		double F = s.model.free_energy(beta);
		double Tcap = std::min(2.0 / F, 200.0);
		auto z = s.model.annealed_partition(beta, Tcap, h);
		auto ub = s.model.renewal_density(Tcap, h);
		for (std::size_t i = z.size() / 2; i < z.size(); ++i) {
			double ratio = z[i] / ub[i];
			CHECK(ratio > 1.0 / 100.0);
			CHECK(ratio < 100.0);
		}
	}

	auto zero = s.model.annealed_partition(1e-14, 10.0, h);
	double ztot = 1.0;
	for (double v : zero) ztot += h * v;
	CHECK(ztot == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("K_beta sampler: normalization, mean, tilt identity") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	auto samp = s.model.kbeta_sampler(1.5 * b0);
	CHECK(std::fabs(samp.total - 1.0) < 1e-6);
	auto samp0 = s.model.kbeta_sampler(b0);
	CHECK(samp0.F == 0.0);
	CHECK(std::fabs(samp0.total - 1.0) < 1e-6);

	double m_beta = s.model.truncated_moments(1.5 * b0).m_beta;
	Rng rng(555, 2);
	RunningStat st;
	const int n = 1000000;
	for (int i = 0; i < n; ++i) st.push(samp.sample(rng));
	CHECK(std::fabs(st.mean() - m_beta) < 4.0 * st.stderror());
}

TEST_CASE("truncated moments and the Laplace bound") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	for (double mult : {1.1, 1.4, 1.7, 1.95}) {
		auto tm = s.model.truncated_moments(mult * b0);
		CHECK(tm.truncated_mean <= tm.m_beta);
		CHECK(tm.truncated_mean > 0.0);
		CHECK(tm.ratio_bound > 0.05);
		CHECK(tm.ratio_bound < 20.0);
		CHECK(tm.laplace_ok);
		CHECK(tm.laplace_margin >= 0.0);
	}
	CHECK_THROWS(s.model.truncated_moments(b0));
}

TEST_CASE("deconditioning: renewal counts under the bridge vs free process") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	double beta = 1.3 * b0;
	auto samp = s.model.kbeta_sampler(beta);
	Rng rng(777, 5);
	double prev_ratio = 0.0;
	for (double t : {10.0, 50.0, 100.0}) {
		double hb = 0.25;
		auto bridge = s.model.renewal_bridge(beta, 2.0 * t, hb);
		RunningStat cond, free;
		int npaths = 3000;
		for (int i = 0; i < npaths; ++i) {
			auto idx = bridge.sample(rng);
			int cnt = 0;
			for (auto j : idx)
				if (j * hb <= t) ++cnt;
			cond.push(cnt);
			int cf = 0;
			double pos = samp.sample(rng);
			while (pos <= t) {
				++cf;
				pos += samp.sample(rng);
			}
			free.push(cf);
		}
		double ratio = cond.mean() / std::max(free.mean(), 1e-12);
		CHECK(ratio > 0.2);
		CHECK(ratio < 5.0);
		if (prev_ratio > 0.0) {
			CHECK(ratio / prev_ratio > 0.5);
			CHECK(ratio / prev_ratio < 2.0);
		}
		prev_ratio = ratio;
	}
}

TEST_CASE("renewal bridge always terminates at T and stays ordered") {
	auto& s = setup75();
	double b0 = s.model.beta0();
	auto bridge = s.model.renewal_bridge(1.4 * b0, 30.0, 0.25);
	Rng rng(99, 0);
	for (int i = 0; i < 200; ++i) {
		auto idx = bridge.sample(rng);
		REQUIRE(!idx.empty());
		CHECK(idx.back() == 120);
		for (std::size_t j = 1; j < idx.size(); ++j) CHECK(idx[j] > idx[j - 1]);
	}
}
