#include "rwpm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rwpm/stats.hpp"

namespace rwpm {

namespace {

// Simpson rule on n panels (n even)
template <class F>
double simpson(F f, double a, double b, int n) {
	if (b <= a) return 0.0;
	double h = (b - a) / n;
	double acc = f(a) + f(b);
	for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
	return acc * h / 3.0;
}

}  // namespace

double MarginalWeights::xi(double k) const {
	if (!kernel) throw std::logic_error("MarginalWeights: kernel not set");
	double ph = kernel->phi(k);
	return std::cbrt(k) / (ph * ph);
}

double s_of_t(const KernelTable& kernel, const ReturnProbabilityCurve& curve,
			  double t) {
	double x = 1.0 / curve.K_at(t);
	if (x <= 1.0) return 0.0;
	// substitute s = e^v so the integrand is 1/phi(e^v)^3 on [0, log x]
	double v_hi = std::log(x);
	int n = 2 * std::max(64, static_cast<int>(32.0 * v_hi));
	return simpson(
		[&](double v) {
			double ph = kernel.phi(std::exp(v));
			return 1.0 / (ph * ph * ph);
		},
		0.0, v_hi, n);
}

double psi_of_t(const KernelTable& kernel, const ReturnProbabilityCurve& curve,
				double t) {
	double ph = kernel.phi(1.0 / curve.K_at(t));
	return ph * ph * ph * s_of_t(kernel, curve, t);
}

double psi_inverse(const KernelTable& kernel,
				   const ReturnProbabilityCurve& curve, double target) {
	if (!(target > 0.0))
		throw std::invalid_argument("psi_inverse: target must be positive");
	double lo = 1e-2, hi = 2.0;
	if (psi_of_t(kernel, curve, lo) >= target) return lo;
	while (psi_of_t(kernel, curve, hi) < target) {
		lo = hi;
		hi *= 2.0;
		if (hi > 1e15)
			throw std::runtime_error("psi_inverse: target beyond psi range");
	}
	for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
		double mid = 0.5 * (lo + hi);
		(psi_of_t(kernel, curve, mid) < target ? lo : hi) = mid;
	}
	return 0.5 * (lo + hi);
}

MarginalWeights marginal_weights(const KernelTable& kernel,
								 const ReturnProbabilityCurve& curve,
								 double T) {
	if (!(T > 0.0))
		throw std::invalid_argument("marginal_weights: T must be positive");
	MarginalWeights w;
	w.T = T;
	w.kernel = &kernel;
	w.threshold = 2.0 * curve.beta0 / curve.K_at(T);
	w.S_of_T = s_of_t(kernel, curve, T);
	w.psi_of_T = psi_of_t(kernel, curve, T);
	return w;
}

CoarseGrainConfig coarse_grain_config(const AnnealedModel& model, double beta,
									  int n_blocks, double theta) {
	if (n_blocks < 1)
		throw std::invalid_argument("coarse_grain_config: need n_blocks >= 1");
	double F = model.free_energy(beta);
	if (!(F > 0.0))
		throw std::invalid_argument("coarse_grain_config: beta must exceed beta0");
	CoarseGrainConfig cfg;
	cfg.theta = theta > 0.0 ? theta : 1.0 / std::sqrt(1.0 + model.alpha());
	if (!(cfg.theta < 1.0 && (1.0 + model.alpha()) * cfg.theta > 1.0))
		throw std::invalid_argument(
			"coarse_grain_config: need theta < 1 with (1 + alpha) theta > 1");
	cfg.block_T = 1.0 / F;
	cfg.n_blocks = n_blocks;
	return cfg;
}

HolderMass holder_mass(double p_a, double theta) {
	if (!(p_a >= 0.0 && p_a <= 1.0))
		throw std::invalid_argument("holder_mass: p_a must lie in [0, 1]");
	if (!(theta > 0.0 && theta < 1.0))
		throw std::invalid_argument("holder_mass: theta must lie in (0, 1)");
	HolderMass h;
	h.eta = p_a > 0.0 ? std::pow(p_a, (1.0 - theta) / theta) : 0.0;
	double inner = 1.0 - p_a;
	// the A part contributes p_a * eta^{-theta/(1-theta)} = 1 for any p_a > 0
	inner += p_a > 0.0
				 ? p_a * std::pow(h.eta, -theta / (1.0 - theta))
				 : 1.0;
	h.mass = std::pow(inner, 1.0 - theta);
	return h;
}

double factorization_constant(const ReturnProbabilityCurve& curve) {
	double best = 1.0;
	double lo = std::log(1e-3), hi = std::log(1e7);
	int n = 4000;
	for (int i = 0; i <= n; ++i) {
		double r = std::exp(lo + (hi - lo) * i / n);
		best = std::max(best, curve.K_at(0.5 * r) / curve.K_at(r));
	}
	return best;
}

double beta1_power(const AnnealedModel& model, double rho, double nu,
				   double c1, double C0) {
	if (!(rho > 0.0 && rho < 1.0))
		throw std::invalid_argument("beta1_power: rho must lie in (0, 1)");
	if (!(nu < 2.0))
		throw std::invalid_argument("beta1_power: need nu < 2");
	return model.beta0() + c1 * std::pow(rho / C0, 1.0 / (2.0 - nu));
}

double beta1_marginal(const AnnealedModel& model, const KernelTable& kernel,
					  double rho, double c1, double C0) {
	if (!(rho > 0.0 && rho < 1.0))
		throw std::invalid_argument("beta1_marginal: rho must lie in (0, 1)");
	double t = psi_inverse(kernel, model.curve(), C0 / rho);
	return model.beta0() + c1 / t;
}

void StatReport::add(std::string name, double param, double value, double se,
					 double n) {
	lines.push_back({std::move(name), param, value, se, n});
}

const StatLine& StatReport::at(const std::string& name) const {
	for (const auto& l : lines)
		if (l.name == name) return l;
	throw std::out_of_range("StatReport: no line named " + name);
}

const StatLine& StatReport::at(const std::string& name, double param) const {
	for (const auto& l : lines)
		if (l.name == name &&
			std::fabs(l.param - param) <= 1e-9 * std::max(1.0, std::fabs(param)))
			return l;
	throw std::out_of_range("StatReport: no line named " + name +
							" at the requested parameter");
}

std::vector<const StatLine*> StatReport::all(const std::string& name) const {
	std::vector<const StatLine*> out;
	for (const auto& l : lines)
		if (l.name == name) out.push_back(&l);
	return out;
}

double f_beta(const KernelTable& kernel, const AnnealedModel& model,
			  double beta) {
	double F = model.free_energy(beta);
	if (!(F > 0.0))
		throw std::invalid_argument("f_beta: beta must exceed beta0");
	double threshold = model.beta0() / model.curve().K_at(1.0 / F);
	return kernel.tail_mu_bar(threshold);
}

std::int64_t jump_count(const EnvPath& path, double a, double b,
						double threshold) {
	if (!(a >= 0.0 && a < b && b <= path.T))
		throw std::invalid_argument("jump_count: need 0 <= a < b <= T");
	std::int64_t n = 0;
	for (const auto& jp : path.jumps) {
		if (jp.theta > b) break;
		if (jp.theta > a && static_cast<double>(jp.U) >= threshold) ++n;
	}
	return n;
}

std::int64_t criticality_stat(const EnvPath& path, double a, double b,
							  const ReturnProbabilityCurve& curve) {
	if (!(a >= 0.0 && a < b && b <= path.T))
		throw std::invalid_argument("criticality_stat: need 0 <= a < b <= T");
	std::int64_t n = 0;
	for (const auto& jp : path.jumps) {
		if (jp.theta > b) break;
		if (jp.theta > a &&
			static_cast<double>(jp.U) * curve.K_at(jp.theta) >= curve.beta0)
			++n;
	}
	return n;
}

double criticality_mean(const KernelTable& kernel,
						const ReturnProbabilityCurve& curve, double rho,
						double T) {
	if (!(T > 0.0))
		throw std::invalid_argument("criticality_mean: T must be positive");
	auto f = [&](double t) {
		return kernel.tail_mu_bar(curve.beta0 / curve.K_at(t));
	};
	double head = simpson(f, 0.0, std::min(1.0, T), 64);
	double tail = 0.0;
	if (T > 1.0) {
		// log substitution for the slowly decaying part
		double v_hi = std::log(T);
		int n = 2 * std::max(32, static_cast<int>(32.0 * v_hi));
		tail = simpson([&](double v) { return f(std::exp(v)) * std::exp(v); },
					   0.0, v_hi, n);
	}
	return rho * (head + tail);
}

double marginal_stat(const EnvPath& path, double T,
					 const MarginalWeights& weights) {
	if (!(T > 0.0 && T <= path.T))
		throw std::invalid_argument("marginal_stat: need 0 < T <= path.T");
	double acc = 0.0;
	for (const auto& jp : path.jumps) {
		if (jp.theta > T) break;
		double u = static_cast<double>(jp.U);
		if (u <= weights.threshold) acc += weights.xi(u);
	}
	return acc;
}

MarginalMoments marginal_moments(const KernelTable& kernel,
								 const MarginalWeights& weights, double rho) {
	MarginalMoments m;
	auto top = static_cast<std::int64_t>(std::floor(weights.threshold));
	for (std::int64_t k = 1; k <= top; ++k) {
		double x = weights.xi(static_cast<double>(k));
		double mu = kernel.mu_bar(k);
		m.mean += mu * x;
		m.variance += mu * x * x;
	}
	m.mean *= rho * weights.T;
	m.variance *= rho * weights.T;
	return m;
}

EventThresholds event_thresholds(const EventSpec& spec,
								 const AnnealedModel& model,
								 const TransitionKernel& tk, double rho) {
	if (!(spec.T > 0.0))
		throw std::invalid_argument("event_thresholds: spec.T must be positive");
	const auto& kernel = tk.kernel();
	const auto& curve = model.curve();
	EventThresholds th;
	double alpha = model.alpha();
	switch (spec.regime) {
	case Regime::TruncatedFenergy: {
		double f = f_beta(kernel, model, spec.beta);
		th.a_mean = rho * f * spec.T;
		th.a_cut = th.a_mean - spec.eta * rho * f * spec.T;
		th.b_cut = spec.delta * spec.T;
		break;
	}
	case Regime::Criticality: {
		th.a_mean = criticality_mean(kernel, curve, rho, spec.T);
		th.a_cut = th.a_mean - spec.eta * rho * std::log(spec.T);
		th.b_cut = spec.delta * std::log(spec.T);
		break;
	}
	case Regime::LargeRho: {
		double lg = std::log(spec.T);
		th.a_cut = lg * lg;
		if (!(spec.R > 0.0))
			throw std::invalid_argument("event_thresholds: R must be positive");
		th.b_cut = std::pow(spec.T, std::min(alpha, 1.0)) / spec.R;
		break;
	}
	case Regime::SubTwoThirds: {
		th.a_mean = rho * spec.T;
		th.a_cut = th.a_mean - spec.R * std::sqrt(rho * spec.T);
		if (!(spec.R > 0.0))
			throw std::invalid_argument("event_thresholds: R must be positive");
		th.b_cut = std::pow(spec.T, std::min(alpha, 1.0)) / spec.R;
		break;
	}
	case Regime::Marginal: {
		auto w = marginal_weights(kernel, curve, spec.T);
		auto mm = marginal_moments(kernel, w, rho);
		th.a_mean = mm.mean;
		th.a_sd = std::sqrt(mm.variance);
		// the A cutoff needs a deviation scale; B alone does not
		th.a_cut = spec.epsilon > 0.0 ? th.a_mean - th.a_sd / spec.epsilon
									  : -HUGE_VAL;
		th.b_cut = spec.delta * w.S_of_T / (spec.T * curve.K_at(spec.T));
		break;
	}
	}
	return th;
}

bool a_event(const EnvPath& path, const EventSpec& spec,
			 const AnnealedModel& model, const TransitionKernel& tk) {
	auto th = event_thresholds(spec, model, tk, path.rho);
	const auto& curve = model.curve();
	switch (spec.regime) {
	case Regime::TruncatedFenergy: {
		double F = model.free_energy(spec.beta);
		double L = model.beta0() / curve.K_at(1.0 / F);
		auto stat = jump_count(path, 0.0, spec.T, L);
		return static_cast<double>(stat) <= th.a_cut;
	}
	case Regime::Criticality:
		return static_cast<double>(criticality_stat(path, 0.0, spec.T, curve)) <=
			   th.a_cut;
	case Regime::LargeRho:
		return local_time_max(path).first >= th.a_cut;
	case Regime::SubTwoThirds:
		return static_cast<double>(jump_count(path, 0.0, spec.T, 0.0)) <
			   th.a_cut;
	case Regime::Marginal: {
		auto w = marginal_weights(tk.kernel(), curve, spec.T);
		return marginal_stat(path, spec.T, w) <= th.a_cut;
	}
	}
	throw std::invalid_argument("a_event: unknown regime");
}

bool b_event(const RenewalTrajectory& tau, const EventSpec& spec,
			 const AnnealedModel& model, const TransitionKernel& tk) {
	auto th = event_thresholds(spec, model, tk, 0.0);
	const auto& pts = tau.points;
	double sum = 0.0;
	switch (spec.regime) {
	case Regime::TruncatedFenergy: {
		double F = model.free_energy(spec.beta);
		for (std::size_t i = 1; i < pts.size(); ++i) {
			double d = pts[i] - pts[i - 1];
			if (d * F <= 1.0) sum += d;
		}
		return sum >= th.b_cut;
	}
	case Regime::Criticality:
		for (std::size_t i = 1; i < pts.size(); ++i) {
			double d = pts[i] - pts[i - 1];
			sum += d / std::max(1.0, pts[i]);
		}
		return sum >= th.b_cut;
	case Regime::LargeRho:
	case Regime::SubTwoThirds:
		for (std::size_t i = 1; i < pts.size(); ++i) {
			double d = pts[i] - pts[i - 1];
			if (d >= 1.0 && d <= 2.0) sum += 1.0;
		}
		return sum >= th.b_cut;
	case Regime::Marginal: {
		auto w = marginal_weights(tk.kernel(), model.curve(), spec.T);
		const auto& curve = model.curve();
		for (std::size_t i = 1; i < pts.size(); ++i) {
			double d = pts[i] - pts[i - 1];
			sum += w.xi(1.0 / curve.K_at(d));
		}
		return sum >= th.b_cut;
	}
	}
	throw std::invalid_argument("b_event: unknown regime");
}

StatReport epsilon_good_probe(const EventSpec& spec, const AnnealedModel& model,
							  const TransitionKernel& tk, double rho,
							  std::size_t n_outer, std::size_t n_inner,
							  Rng& rng) {
	if (!(spec.r >= 0.0 && spec.r < spec.s && spec.s <= spec.T))
		throw std::invalid_argument("epsilon_good_probe: bad window");
	if (spec.epsilon > 0.0 &&
		spec.s - spec.r < spec.epsilon * spec.T * (1.0 - 1e-9))
		throw std::invalid_argument(
			"epsilon_good_probe: window shorter than epsilon T");
	if (n_outer == 0 || n_inner == 0)
		throw std::invalid_argument("epsilon_good_probe: empty sample plan");

	const auto& kernel = tk.kernel();
	double len = spec.s - spec.r;
	double beta_q = spec.beta > 0.0 ? spec.beta : model.beta0();
	int n_cells = 240;
	double step = len / n_cells;

	RunningStat pa, q_ac, q_bc, q_pin, ess_stat;
	double min_ess = static_cast<double>(n_inner);
	for (std::size_t outer = 0; outer < n_outer; ++outer) {
		auto traj = renewal_bridge_sampler(model, beta_q, len, step, rng);
		for (auto& p : traj.points) p += spec.r;
		q_bc.push(b_event(traj, spec, model, tk) ? 0.0 : 1.0);

		double sumw = 0.0, sumw2 = 0.0, sumw_ac = 0.0;
		for (std::size_t k = 0; k < n_inner; ++k) {
			auto path = sample_env(kernel, rho, spec.T, rng);
			bool in_a = a_event(path, spec, model, tk);
			pa.push(in_a ? 1.0 : 0.0);
			double w = 1.0;
			for (std::size_t j = 1; j < traj.points.size(); ++j)
				w *= weight(tk, traj.points[j - 1], traj.points[j], path);
			sumw += w;
			sumw2 += w * w;
			if (!in_a) sumw_ac += w;
		}
		q_ac.push(sumw > 0.0 ? sumw_ac / sumw : 0.0);
		double ess = sumw2 > 0.0 ? sumw * sumw / sumw2 : 0.0;
		ess_stat.push(ess);
		min_ess = std::min(min_ess, ess);

		if (spec.regime == Regime::LargeRho) {
			// exact pinning probability under P_tau: each block returns with
			// P(W_{rho d} = 0) P(W_{(1-rho) d} = 0) / P(W_d = 0)
			double prod = 1.0;
			if (rho > 0.0) {
				for (std::size_t j = 1; j < traj.points.size(); ++j) {
					double d = traj.points[j] - traj.points[j - 1];
					prod *= tk.p0(rho * d) * tk.p0((1.0 - rho) * d) /
							tk.p0(d);
				}
			}
			q_pin.push(prod);
		}
	}

	StatReport rep;
	rep.add("P_A", 0.0, pa.mean(), pa.stderror(),
			static_cast<double>(pa.count()));
	rep.add("Q_Ptau_Ac", 0.0, q_ac.mean(), q_ac.stderror(),
			static_cast<double>(n_outer));
	rep.add("Q_B_comp", 0.0, q_bc.mean(), q_bc.stderror(),
			static_cast<double>(n_outer));
	rep.add("min_inner_ess", 0.0, min_ess, 0.0, static_cast<double>(n_inner));
	rep.add("mean_inner_ess", 0.0, ess_stat.mean(), ess_stat.stderror(),
			static_cast<double>(n_outer));
	if (spec.regime == Regime::LargeRho)
		rep.add("Q_Ptau_pinned", 0.0, q_pin.mean(), q_pin.stderror(),
				static_cast<double>(n_outer));
	if (min_ess < 0.01 * static_cast<double>(n_inner)) {
		std::ostringstream msg;
		msg << "inner importance weights collapsed (min ESS " << min_ess
			<< " of " << n_inner << ")";
		rep.notes.push_back(msg.str());
	}
	return rep;
}

namespace {

// E_tau-style mean of sum xi_hat(U) over a single pinned block of length t,
// restricted to amplitudes in [L1, L2]; xi_hat == 1 when weights is null
double mecke_band(const TransitionKernel& tk, double rho, double t,
				  std::int64_t L1, std::int64_t L2,
				  const MarginalWeights* weights) {
	if (L2 < L1) return 0.0;
	const auto& kernel = tk.kernel();
	auto lag = tk.lag(t);
	double inv_p0 = 1.0 / lag->p0;
	double mass = lag->prob(0);
	for (std::int64_t x = 1; x <= L1; ++x) mass += 2.0 * lag->prob(x);
	double total = 0.0;
	for (std::int64_t l = L1; l <= L2; ++l) {
		double w = weights ? weights->xi(static_cast<double>(l)) : 1.0;
		total += w * kernel.mu_bar(l) * mass / (2.0 * l + 1.0);
		mass += 2.0 * lag->prob(l + 1);
	}
	return rho * t * total * inv_p0;
}

double band_rate(const KernelTable& kernel, std::int64_t L1, std::int64_t L2,
				 const MarginalWeights* weights) {
	double total = 0.0;
	for (std::int64_t l = L1; l <= L2; ++l) {
		double w = weights ? weights->xi(static_cast<double>(l)) : 1.0;
		total += w * kernel.mu_bar(l);
	}
	return total;
}

}  // namespace

StatReport expectation_shift_report(const AnnealedModel& model,
									const TransitionKernel& tk, double rho,
									Regime regime,
									const std::vector<double>& grid,
									double beta) {
	const auto& kernel = tk.kernel();
	const auto& curve = model.curve();
	StatReport rep;
	switch (regime) {
	case Regime::SubTwoThirds:
		for (double t : grid) {
			double plain = rho * t;
			double pinned = mecke_mean(tk, rho, t, 0);
			double shift = plain - pinned;
			double lower =
				rho > 0.0
					? std::exp(-rho * t) *
						  (tk.p0((1.0 - rho) * t) / tk.p0(t) - 1.0)
					: 0.0;
			rep.add("plain_mean", t, plain);
			rep.add("pinned_mean", t, pinned);
			rep.add("shift", t, shift);
			rep.add("shift_lower", t, lower);
			rep.add("shift_ratio", t, rho > 0.0 ? shift / (rho * t) : 0.0);
		}
		break;
	case Regime::Criticality: {
		double F = model.free_energy(beta);
		if (!(F > 0.0))
			throw std::invalid_argument(
				"expectation_shift_report: beta must exceed beta0");
		double L = model.beta0() / curve.K_at(1.0 / F);
		auto Li = static_cast<std::int64_t>(std::ceil(L));
		double rate = kernel.tail_mu_bar(L);
		for (double t : grid) {
			double plain = rho * t * rate;
			double pinned = mecke_mean(tk, rho, t, Li);
			rep.add("plain_mean", t, plain);
			rep.add("pinned_mean", t, pinned);
			rep.add("shift", t, plain - pinned);
			rep.add("pinned_over_plain", t,
					plain > 0.0 ? pinned / plain : 0.0);
		}
		break;
	}
	case Regime::Marginal:
		for (double t : grid) {
			MarginalWeights w;
			w.T = t;
			w.kernel = &kernel;
			double K = curve.K_at(t);
			auto L1 = static_cast<std::int64_t>(std::ceil(curve.beta0 / K));
			auto L2 =
				static_cast<std::int64_t>(std::floor(2.0 * curve.beta0 / K));
			double plain = rho * t * band_rate(kernel, L1, L2, &w);
			double pinned = mecke_band(tk, rho, t, L1, L2, &w);
			double scale = w.xi(curve.beta0 / K);
			rep.add("plain_mean", t, plain);
			rep.add("pinned_mean", t, pinned);
			rep.add("shift", t, plain - pinned);
			rep.add("shift_ratio", t,
					rho > 0.0 ? (plain - pinned) / (rho * scale) : 0.0);
		}
		break;
	default:
		throw std::invalid_argument(
			"expectation_shift_report: regime must be sub_two_thirds, "
			"marginal, or criticality");
	}
	return rep;
}

StatReport fractional_moment(const AnnealedModel& model,
							 const TransitionKernel& tk, double rho,
							 double beta, double theta, int n_blocks,
							 std::size_t mc_budget, Rng& rng) {
	if (theta == 0.0) theta = 1.0 / std::sqrt(1.0 + model.alpha());
	if (!(theta > 0.0 && theta <= 1.0 &&
		  (1.0 + model.alpha()) * theta > 1.0))
		throw std::invalid_argument(
			"fractional_moment: need theta in (0, 1] with (1 + alpha) theta > 1");
	if (n_blocks < 1 || n_blocks > 8)
		throw std::invalid_argument(
			"fractional_moment: n_blocks must lie in [1, 8]");
	double F = model.free_energy(beta);
	if (!(F > 0.0))
		throw std::invalid_argument("fractional_moment: beta must exceed beta0");
	double T = 1.0 / F;
	if (T > 500.0)
		throw std::invalid_argument(
			"fractional_moment: correlation length 1/F exceeds the 500 cap");

	auto N1 = static_cast<std::size_t>(std::max(24, 720 / n_blocks));
	N1 = std::min(N1, static_cast<std::size_t>(
						  std::max<long long>(24, std::llround(T / 0.05))));
	if (N1 % 2) ++N1;
	double step = T / static_cast<double>(N1);

	auto reps = std::max<std::size_t>(
		8, mc_budget / static_cast<std::size_t>(n_blocks));
	std::size_t budget = mc_budget;

	StatReport rep;
	rep.add("theta", 0.0, theta);
	rep.add("block_T", 0.0, T);
	rep.add("step", 0.0, step);
	double lo = 0.0, hi = 0.0;
	for (int n = 1; n <= n_blocks; ++n) {
		if (budget < 8) {
			std::ostringstream msg;
			msg << "budget exhausted before n = " << n << " (" << mc_budget
				<< " solves allowed)";
			rep.notes.push_back(msg.str());
			break;
		}
		std::size_t r_n = std::min(reps, budget);
		budget -= r_n;
		RunningStat st;
		double horizon = n * T;
		for (std::size_t k = 0; k < r_n; ++k) {
			auto path = sample_env(tk.kernel(), rho, horizon, rng);
			auto q = volterra_quenched(tk, model, path, beta, horizon, step);
			st.push(std::pow(q.free_value, theta));
		}
		rep.add("frac_moment", static_cast<double>(n), st.mean(),
				st.stderror(), static_cast<double>(r_n));
		if (n == 1) lo = hi = st.mean();
		lo = std::min(lo, st.mean());
		hi = std::max(hi, st.mean());
	}
	if (lo > 0.0) rep.add("growth_ratio", 0.0, hi / lo);
	return rep;
}

namespace {

std::size_t volterra_cells(double T, double target_h, std::size_t n_min,
						   std::size_t n_max) {
	auto N = static_cast<std::size_t>(std::llround(T / target_h));
	N = std::max(n_min, std::min(n_max, N));
	if (N % 2) ++N;
	return N;
}

struct InterceptFit {
	double value = 0.0;
	double std_error = 0.0;
};

InterceptFit intercept_fit(const std::vector<double>& x,
						   const std::vector<double>& y) {
	auto f = linear_fit(x, y);
	std::size_t n = x.size();
	double mx = 0.0, sxx = 0.0;
	for (double v : x) mx += v;
	mx /= static_cast<double>(n);
	for (double v : x) sxx += (v - mx) * (v - mx);
	double ssr = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		double e = y[i] - (f.intercept + f.slope * x[i]);
		ssr += e * e;
	}
	InterceptFit out;
	out.value = f.intercept;
	if (n > 2) {
		double s2 = ssr / static_cast<double>(n - 2);
		out.std_error =
			std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
	}
	return out;
}

}  // namespace

StatReport quenched_free_energy(const AnnealedModel& model,
								const TransitionKernel& tk, double rho,
								double beta, const std::vector<double>& T_grid,
								std::size_t reps, Rng& rng) {
	if (!(beta > 0.0))
		throw std::invalid_argument("quenched_free_energy: beta must be positive");
	if (T_grid.size() < 2)
		throw std::invalid_argument("quenched_free_energy: need >= 2 horizons");
	StatReport rep;
	std::vector<double> inv_T, means;
	double mc_se2 = 0.0;
	for (double T : T_grid) {
		double step = T / static_cast<double>(volterra_cells(T, 0.125, 64, 800));
		RunningStat st;
		for (std::size_t k = 0; k < reps; ++k) {
			auto path = sample_env(tk.kernel(), rho, T, rng);
			auto q = volterra_quenched(tk, model, path, beta, T, step);
			st.push(std::log(q.free_value) / T);
		}
		rep.add("fhat", T, st.mean(), st.stderror(),
				static_cast<double>(reps));
		inv_T.push_back(1.0 / T);
		means.push_back(st.mean());
		mc_se2 += st.stderror() * st.stderror();
	}
	auto fit = intercept_fit(inv_T, means);
	double ci = std::sqrt(fit.std_error * fit.std_error +
						  mc_se2 / static_cast<double>(inv_T.size() *
													   inv_T.size()));
	rep.add("F_extrapolated", 0.0, fit.value, ci,
			static_cast<double>(T_grid.size()));
	rep.add("F_annealed", 0.0, model.free_energy(beta));
	return rep;
}

StatReport criticality_experiment(const AnnealedModel& model,
								  const TransitionKernel& tk, double rho,
								  const std::vector<double>& T_grid,
								  std::size_t reps, Rng& rng) {
	if (T_grid.size() < 2)
		throw std::invalid_argument("criticality_experiment: need >= 2 horizons");
	double beta = model.beta0();
	StatReport rep;
	std::vector<double> log_T, log_med;
	for (double T : T_grid) {
		double step = T / static_cast<double>(volterra_cells(T, 0.25, 64, 960));
		double zT = model.annealed_partition(beta, T, step).back();
		std::vector<double> ws;
		ws.reserve(reps);
		RunningStat st;
		for (std::size_t k = 0; k < reps; ++k) {
			auto path = sample_env(tk.kernel(), rho, T, rng);
			auto q = volterra_quenched(tk, model, path, beta, T, step);
			double w = q.zeta.back() / zT;
			ws.push_back(w);
			st.push(w);
		}
		rep.add("median", T, median(ws), 0.0, static_cast<double>(reps));
		rep.add("q25", T, quantile(ws, 0.25));
		rep.add("q75", T, quantile(ws, 0.75));
		rep.add("mean_W", T, st.mean(), st.stderror(),
				static_cast<double>(reps));
		log_T.push_back(std::log(T));
		log_med.push_back(std::log(median(ws)));
	}
	auto fit = linear_fit(log_T, log_med);
	rep.add("slope", 0.0, fit.slope, fit.slope_stderr,
			static_cast<double>(T_grid.size()));
	return rep;
}

StatReport irrelevance_gap(const AnnealedModel& model,
						   const TransitionKernel& tk, double rho,
						   const std::vector<double>& beta_grid, double T,
						   std::size_t reps, Rng& rng) {
	if (!(T > 0.0))
		throw std::invalid_argument("irrelevance_gap: T must be positive");
	StatReport rep;
	for (double beta : beta_grid) {
		double F = model.free_energy(beta);
		if (!(F > 0.0))
			throw std::invalid_argument(
				"irrelevance_gap: every beta must exceed beta0");
		double step = T / static_cast<double>(volterra_cells(T, 0.1, 64, 800));
		double zT = model.annealed_partition(beta, T, step).back();
		RunningStat mn, mx;
		for (std::size_t k = 0; k < reps; ++k) {
			auto path = sample_env(tk.kernel(), rho, T, rng);
			auto q = volterra_quenched(tk, model, path, beta, T, step);
			double w = q.zeta.back() / zT;
			mn.push(std::min(1.0, w));
			mx.push(std::max(1.0, w));
		}
		double gap = std::log(mn.mean()) / T;
		double gap_se = mn.stderror() / (T * mn.mean());
		rep.add("gap", beta, gap, gap_se, static_cast<double>(reps));
		rep.add("gap_ratio", beta, gap / F, gap_se / F);
		rep.add("mean_min", beta, mn.mean(), mn.stderror(),
				static_cast<double>(reps));
		rep.add("mean_max", beta, mx.mean(), mx.stderror(),
				static_cast<double>(reps));
	}
	return rep;
}

}  // namespace rwpm
