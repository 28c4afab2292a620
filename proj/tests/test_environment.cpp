#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwpm/environment.hpp"
#include "rwpm/homogeneous.hpp"
#include "rwpm/kernel.hpp"
#include "rwpm/rng.hpp"
#include "rwpm/spectral.hpp"
#include "rwpm/stats.hpp"

using namespace rwpm;

namespace {

KernelTable& kernel75() {
	static KernelTable k({0.75, SlowVariation::Constant, 0.0, 1 << 14});
	return k;
}

KernelTable& kernel60() {
	static KernelTable k({0.6, SlowVariation::Constant, 0.0, 1 << 14});
	return k;
}

TransitionKernel& tk75() {
	static TransitionKernel tk(kernel75());
	return tk;
}

AnnealedModel& model75() {
	static AnnealedModel m(
		return_prob_curve(tk75(), hybrid_grid(10.0, 0.025, 1e4, 64)),
		kernel75().hhat_pi());
	return m;
}

// linear-scan occupation time of a single level
double local_time_at(const EnvPath& path, std::int64_t x) {
	double occ = 0.0, prev = 0.0;
	std::int64_t level = path.y0;
	for (const auto& jp : path.jumps) {
		if (level == x) occ += jp.theta - prev;
		prev = jp.theta;
		level += jp.V;
	}
	if (level == x) occ += path.T - prev;
	return occ;
}

}  // namespace

TEST_CASE("sample_env: jump counts, marks and ordering") {
	auto& k = kernel75();
	Rng rng(42, 0);
	const int n = 100000;
	RunningStat counts, v2_given_u5;
	for (int i = 0; i < n; ++i) {
		auto env = sample_env(k, 0.3, 50.0, rng);
		counts.push(static_cast<double>(env.jumps.size()));
		double prev = 0.0;
		for (const auto& jp : env.jumps) {
			CHECK(jp.theta > prev);
			CHECK(jp.theta <= 50.0);
			CHECK(jp.U >= 0);
			CHECK(std::llabs(jp.V) <= jp.U);
			prev = jp.theta;
			if (jp.U == 5) v2_given_u5.push(static_cast<double>(jp.V * jp.V));
		}
	}
	CHECK(std::fabs(counts.mean() - 15.0) < 4.0 * counts.stderror());
	REQUIRE(v2_given_u5.count() > 1000);
	// E[V^2 | U=5] = 5*6/3 = 10
	CHECK(std::fabs(v2_given_u5.mean() - 10.0) < 4.0 * v2_given_u5.stderror());

	CHECK_THROWS(sample_env(k, -0.1, 10.0, rng));
	CHECK_THROWS(sample_env(k, 1.0, 10.0, rng));
	CHECK_THROWS(sample_env(k, 0.3, -1.0, rng));
}

TEST_CASE("Y_T law matches the plain rate-rho walk") {
	auto& k = kernel60();
	Rng rng(43, 1);
	const double rho = 0.4, T = 50.0;
	const int n = 100000;
	const std::int64_t clip = 150;
	std::vector<double> ha(2 * clip + 1, 0.0), hb(2 * clip + 1, 0.0);
	for (int i = 0; i < n; ++i) {
		auto env = sample_env(k, rho, T, rng);
		std::int64_t y = env.y_at(T);
		++ha[static_cast<std::size_t>(std::clamp(y, -clip, clip) + clip)];

		// plain construction: Poisson(rho T) many J-steps
		std::int64_t m = rng.poisson(rho * T), w = 0;
		for (std::int64_t j = 0; j < m; ++j) w += k.sample_displacement(rng);
		++hb[static_cast<std::size_t>(std::clamp(w, -clip, clip) + clip)];
	}
	CHECK(chi2_two_sample_pvalue(ha, hb) > 0.001);
}

TEST_CASE("y_at: boundaries and linear-scan agreement") {
	auto& k = kernel75();
	Rng rng(44, 2);
	auto env = sample_env(k, 0.5, 40.0, rng);
	REQUIRE(!env.jumps.empty());
	CHECK(env.y_at(0.0) == 0);
	CHECK(env.y_at(0.5 * env.jumps.front().theta) == 0);
	std::int64_t total = 0;
	for (const auto& jp : env.jumps) total += jp.V;
	CHECK(env.y_at(40.0) == total);
	CHECK_THROWS(env.y_at(-0.1));
	CHECK_THROWS(env.y_at(40.1));

	for (int i = 0; i < 300; ++i) {
		double t = rng.uniform(0.0, 40.0);
		std::int64_t scan = 0;
		for (const auto& jp : env.jumps)
			if (jp.theta <= t) scan += jp.V;
		CHECK(env.y_at(t) == scan);
	}
}

TEST_CASE("local_time_max: exact accounting and exponential tail") {
	EnvPath flat;
	flat.rho = 0.2;
	flat.T = 7.0;
	flat.y0 = 3;
	flat.build_prefix();
	auto [lmax, arg] = local_time_max(flat);
	CHECK(lmax == 7.0);
	CHECK(arg == 3);

	// out at time 2, back at time 5: L(y0) = T - 3
	EnvPath two = flat;
	two.jumps = {{2.0, 4, 4}, {5.0, 4, -4}};
	two.build_prefix();
	auto [l2, a2] = local_time_max(two);
	CHECK(l2 == doctest::Approx(4.0).epsilon(1e-12));
	CHECK(a2 == 3);

	// tail of L(0): exponential with rate rho * p_inf (escape probability)
	auto& k = kernel60();
	Rng rng(45, 3);
	const double rho = 0.9, T = 100.0;
	const int n = 20000;
	std::vector<double> lt;
	lt.reserve(n);
	for (int i = 0; i < n; ++i)
		lt.push_back(local_time_at(sample_env(k, rho, T, rng), 0));

	// independent escape-probability estimate from the embedded jump chain
	int escaped = 0;
	for (int i = 0; i < n; ++i) {
		std::int64_t x = k.sample_displacement(rng);
		bool back = (x == 0);
		for (int s = 0; !back && s < 4000; ++s) {
			x += k.sample_displacement(rng);
			back = (x == 0);
		}
		if (!back) ++escaped;
	}
	double p_inf = static_cast<double>(escaped) / n;

	std::vector<double> xs, ys;
	for (int j = 1; j <= 12; ++j) {
		double s = 0.6 * j;
		double surv = 0.0;
		for (double v : lt)
			if (v >= s) surv += 1.0;
		if (surv < 200.0) break;
		xs.push_back(s);
		ys.push_back(std::log(surv / n));
	}
	REQUIRE(xs.size() >= 5);
	auto fit = linear_fit(xs, ys);
	CHECK(-fit.slope == doctest::Approx(rho * p_inf).epsilon(0.10));
}

TEST_CASE("sample_bridge: terminal constraint, acceptance rate, loud failure") {
	auto& k = kernel75();
	Rng rng(46, 4);
	double p0 = tk75().p0(10.0);
	const int trials = 10000;
	std::int64_t attempts = 0;
	for (int i = 0; i < trials; ++i) {
		auto b = sample_bridge(k, 10.0, rng, 1000000);
		attempts += b.attempts;
		std::int64_t sum = 0;
		double prev = 0.0;
		for (const auto& jp : b.path) {
			CHECK(jp.theta > prev);
			CHECK(jp.theta <= 10.0);
			CHECK(std::llabs(jp.V) <= jp.U);
			prev = jp.theta;
			sum += jp.V;
		}
		CHECK(sum == 0);
		CHECK(b.attempts >= 1);
	}
	double acc = static_cast<double>(trials) / static_cast<double>(attempts);
	double se = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(attempts));
	CHECK(std::fabs(acc - p0) < 4.0 * se);

	// near-zero duration: almost always the empty path on the first attempt
	auto tiny = sample_bridge(k, 0.01, rng, 100);
	CHECK(tiny.attempts <= 2);

	bool threw = false;
	try {
		sample_bridge(k, 200.0, rng, 3);
	} catch (const std::runtime_error& e) {
		threw = true;
		CHECK(std::string(e.what()).find("duration 200") != std::string::npos);
	}
	CHECK(threw);
}

TEST_CASE("size_biased_blocks: degenerate rho, block law, independence") {
	auto& tk = tk75();
	Rng rng(47, 5);
	auto none = size_biased_blocks(tk, {0.0, 10.0, 20.0}, 0.0, rng);
	CHECK(none.jumps.empty());
	CHECK(none.y_at(20.0) == 0);

	// law of Y_Delta on a single block vs the importance-weighting oracle
	const double rho = 0.3, d = 10.0;
	RunningStat sb, wmc;
	for (int i = 0; i < 4000; ++i) {
		auto env = size_biased_blocks(tk, {0.0, d}, rho, rng);
		double prev = 0.0;
		for (const auto& jp : env.jumps) {
			CHECK(jp.theta > prev);
			CHECK(jp.theta <= d);
			prev = jp.theta;
		}
		sb.push(std::llabs(env.y_at(d)) <= 3 ? 1.0 : 0.0);
	}
	for (int i = 0; i < 20000; ++i) {
		auto env = sample_env(tk.kernel(), rho, d, rng);
		double w = weight(tk, 0.0, d, env);
		wmc.push(w * (std::llabs(env.y_at(d)) <= 3 ? 1.0 : 0.0));
	}
	double se = std::sqrt(sb.stderror() * sb.stderror() +
						  wmc.stderror() * wmc.stderror());
	CHECK(std::fabs(sb.mean() - wmc.mean()) < 4.0 * se);

	// per-block jump counts are uncorrelated
	RunningStat c1, c2, c12;
	const int m = 4000;
	std::vector<double> n1(m), n2(m);
	for (int i = 0; i < m; ++i) {
		auto env = size_biased_blocks(tk, {0.0, 8.0, 16.0}, rho, rng);
		double a = 0, b = 0;
		for (const auto& jp : env.jumps) (jp.theta <= 8.0 ? a : b) += 1.0;
		n1[i] = a;
		n2[i] = b;
		c1.push(a);
		c2.push(b);
	}
	double cov = 0.0;
	for (int i = 0; i < m; ++i)
		cov += (n1[i] - c1.mean()) * (n2[i] - c2.mean());
	cov /= m - 1;
	double corr = cov / (c1.stddev() * c2.stddev());
	CHECK(std::fabs(corr) < 4.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("weight: unit case, unit mean, unimodality cap") {
	auto& tk = tk75();
	Rng rng(48, 6);
	const double rho = 0.3, t = 20.0;

	EnvPath frozen;
	frozen.rho = 0.0;
	frozen.T = t;
	frozen.build_prefix();
	CHECK(weight(tk, 0.0, t, frozen) == 1.0);

	double cap = tk.p0((1.0 - rho) * t) / tk.p0(t);
	RunningStat wstat;
	for (int i = 0; i < 10000; ++i) {
		auto env = sample_env(tk.kernel(), rho, t, rng);
		double w = weight(tk, 0.0, t, env);
		CHECK(w > 0.0);
		CHECK(w <= cap * (1.0 + 1e-9));
		wstat.push(w);
	}
	CHECK(std::fabs(wstat.mean() - 1.0) < 4.0 * wstat.stderror());

	auto env = sample_env(tk.kernel(), rho, t, rng);
	CHECK_THROWS(weight(tk, 5.0, 5.0, env));
	CHECK_THROWS(weight(tk, -1.0, 5.0, env));
	CHECK_THROWS(weight(tk, 0.0, t + 1.0, env));
}

TEST_CASE("stochastic domination for monotone amplitude functionals") {
	auto& tk = tk75();
	Rng rng(49, 7);
	const double rho = 0.3;
	for (double t : {5.0, 20.0, 50.0}) {
		RunningStat d_count, d_thresh, d_xi;
		for (int i = 0; i < 20000; ++i) {
			auto env = sample_env(tk.kernel(), rho, t, rng);
			double w = weight(tk, 0.0, t, env);
			double count = static_cast<double>(env.jumps.size());
			double thresh = 0.0, xi = 0.0;
			for (const auto& jp : env.jumps) {
				if (jp.U >= 8) thresh += 1.0;
				xi += std::cbrt(static_cast<double>(jp.U));
			}
			d_count.push(count * (1.0 - w));
			d_thresh.push(thresh * (1.0 - w));
			d_xi.push(xi * (1.0 - w));
		}
		// E[phi] - E_t[phi] >= 0 up to sampling error
		CHECK(d_count.mean() > -4.0 * d_count.stderror());
		CHECK(d_thresh.mean() > -4.0 * d_thresh.stderror());
		CHECK(d_xi.mean() > -4.0 * d_xi.stderror());
	}
}

TEST_CASE("size-biased marginal of Y_t equals the conditioned bridge") {
	auto& tk = tk75();
	Rng rng(50, 8);
	const double rho = 0.3, t = 20.0;
	const std::int64_t clip = 6;
	const std::size_t nbins = 2 * clip + 3;  // values plus two overflow bins

	std::vector<RunningStat> wbin(nbins);
	const int n_env = 100000;
	for (int i = 0; i < n_env; ++i) {
		auto env = sample_env(tk.kernel(), rho, t, rng);
		double w = weight(tk, 0.0, t, env);
		std::int64_t y = env.y_at(t);
		std::size_t bin = y < -clip	 ? 0
						  : y > clip ? nbins - 1
									 : static_cast<std::size_t>(y + clip + 1);
		for (std::size_t b = 0; b < nbins; ++b)
			wbin[b].push(b == bin ? w : 0.0);
	}

	const int n_br = 20000;
	std::vector<double> bcount(nbins, 0.0);
	for (int i = 0; i < n_br; ++i) {
		auto b = sample_bridge(tk.kernel(), t, rng, 1000000);
		std::int64_t y = 0;
		for (const auto& jp : b.path)
			if (jp.theta <= rho * t) y += jp.V;
		std::size_t bin = y < -clip	 ? 0
						  : y > clip ? nbins - 1
									 : static_cast<std::size_t>(y + clip + 1);
		bcount[bin] += 1.0;
	}

	for (std::size_t b = 0; b < nbins; ++b) {
		double pb = bcount[b] / n_br;
		double se_b = std::sqrt(std::max(pb * (1.0 - pb), 1e-12) / n_br);
		double se = std::sqrt(se_b * se_b +
							  wbin[b].stderror() * wbin[b].stderror());
		CHECK(std::fabs(wbin[b].mean() - pb) < 4.0 * se);
	}
}

TEST_CASE("Mecke mean: weighted MC matches the closed form") {
	auto& tk = tk75();
	auto& model = model75();
	Rng rng(51, 9);
	const double rho = 0.3;
	double beta = 1.5 * model.beta0();
	double F = model.free_energy(beta);
	double t = 1.0 / F;
	auto L = static_cast<std::int64_t>(std::ceil(1.0 / tk.p0(t)));

	double closed = mecke_mean(tk, rho, t, L);
	RunningStat wj;
	for (int i = 0; i < 20000; ++i) {
		auto env = sample_env(tk.kernel(), rho, t, rng);
		double w = weight(tk, 0.0, t, env);
		double cnt = 0.0;
		for (const auto& jp : env.jumps)
			if (jp.U >= L) cnt += 1.0;
		wj.push(w * cnt);
	}
	CHECK(std::fabs(wj.mean() - closed) < 4.0 * wj.stderror());
	CHECK(closed > 0.0);
}

TEST_CASE("expectation shift bound on a parameter grid") {
	auto& tk = tk75();
	auto& model = model75();
	const double rho = 0.3;
	for (double mult : {1.2, 1.5, 1.8}) {
		double F = model.free_energy(mult * model.beta0());
		auto L = static_cast<std::int64_t>(std::ceil(1.0 / tk.p0(1.0 / F)));
		double f = tk.kernel().tail_mu_bar(static_cast<double>(L));
		for (double frac : {0.3, 0.6, 1.0}) {
			double t = frac / F;
			double plain = rho * t * f;
			double shifted = mecke_mean(tk, rho, t, L);
			CHECK(plain - shifted >= 0.5 * rho * f * t);
		}
	}
}
