#include "rwpm/partition.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "rwpm/stats.hpp"

namespace rwpm {

double kw(const TransitionKernel& tk, const ReturnProbabilityCurve& curve,
		  double s, double t, const EnvPath& path) {
	if (!(s >= 0.0 && s < t && t <= path.T))
		throw std::invalid_argument("kw: need 0 <= s < t <= T");
	std::int64_t d = path.y_at(t) - path.y_at(s);
	return curve.beta0 * tk.lag((1.0 - path.rho) * (t - s))->prob(d);
}

namespace {

// one Volterra pass on a grid of N steps of size h; kernel values are
// c_norm * beta0 * P(X = dY) so the annealed mean of the discrete kernel
// integrates to one (same normalization as the homogeneous machinery)
std::vector<double> quenched_pass(const TransitionKernel& tk,
								  const EnvPath& path, double b, double c0,
								  std::size_t N, double h) {
	double rho = path.rho;
	std::vector<std::shared_ptr<const LagEvaluator>> lags(N + 1);
	for (std::size_t d = 1; d <= N; ++d)
		lags[d] = tk.lag((1.0 - rho) * static_cast<double>(d) * h);
	std::vector<std::int64_t> ys(N + 1);
	for (std::size_t i = 0; i <= N; ++i)
		// N h can overshoot the horizon by an ulp when h = T/N is inexact
		ys[i] = path.y_at(std::min(static_cast<double>(i) * h, path.T));

	auto Kw = [&](std::size_t j, std::size_t i) {
		if (i == j) return c0;
		return c0 * lags[i - j]->prob(ys[i] - ys[j]);
	};

	double diag = 1.0 - 0.5 * b * h * c0;
	if (diag <= 0.0)
		throw std::invalid_argument("volterra_quenched: step too large");
	std::vector<double> z(N + 1);
	z[0] = b * c0;
	for (std::size_t i = 1; i <= N; ++i) {
		double conv = 0.5 * Kw(0, i) * z[0];
		for (std::size_t j = 1; j < i; ++j) conv += Kw(j, i) * z[j];
		z[i] = b * (Kw(0, i) + h * conv) / diag;
	}
	return z;
}

double trapezoid_integral(const std::vector<double>& z, double h) {
	double s = 0.5 * (z.front() + z.back());
	for (std::size_t i = 1; i + 1 < z.size(); ++i) s += z[i];
	return s * h;
}

}  // namespace

QuenchedVolterra volterra_quenched(const TransitionKernel& tk,
								   const AnnealedModel& model,
								   const EnvPath& path, double beta, double T,
								   double step) {
	if (!(step > 0.0 && T > 0.0 && T <= path.T))
		throw std::invalid_argument("volterra_quenched: bad grid or horizon");
	if (!(beta >= 0.0))
		throw std::invalid_argument("volterra_quenched: beta must be >= 0");
	auto N = static_cast<std::size_t>(std::llround(T / step));
	if (N < 2 || std::fabs(static_cast<double>(N) * step - T) > 1e-9 * T)
		throw std::invalid_argument("volterra_quenched: step must divide T");

	QuenchedVolterra out;
	out.step = step;
	out.min_gap = T;
	double prev = 0.0;
	for (const auto& jp : path.jumps) {
		if (jp.theta > T) break;
		out.min_gap = std::min(out.min_gap, jp.theta - prev);
		prev = jp.theta;
	}
	out.step_warning = step > 0.5 * out.min_gap;

	double b = beta / model.beta0();
	const auto& curve = model.curve();
	double c0 = model.volterra_kernel(T, step)[0] / curve.K_at(0.0) *
				curve.beta0;  // = beta0 / discrete mass

	out.zeta = quenched_pass(tk, path, b, c0, N, step);
	out.free_value = 1.0 + trapezoid_integral(out.zeta, step);

	// coarse pass at twice the step for a Richardson error estimate
	if (N % 2 == 0 && N >= 4) {
		double c2 = model.volterra_kernel(T, 2.0 * step)[0] / curve.K_at(0.0) *
					curve.beta0;
		auto coarse = quenched_pass(tk, path, b, c2, N / 2, 2.0 * step);
		out.disc_error = std::fabs(out.zeta.back() - coarse.back()) / 3.0;
	}
	return out;
}

PartitionResult mc_normalized(const TransitionKernel& tk,
							  const AnnealedModel& model, const EnvPath& path,
							  double beta, double T, std::size_t n_samples,
							  double step, Rng& rng) {
	if (n_samples == 0)
		throw std::invalid_argument("mc_normalized: need n_samples > 0");
	auto bridge = model.renewal_bridge(beta, T, step);
	double sum = 0.0, sum2 = 0.0;
	RunningStat st;
	for (std::size_t s = 0; s < n_samples; ++s) {
		auto idx = bridge.sample(rng);
		double prod = 1.0;
		std::int32_t prev = 0;
		for (auto i : idx) {
			prod *= weight(tk, prev * step, std::min(i * step, path.T), path);
			prev = i;
		}
		st.push(prod);
		sum += prod;
		sum2 += prod * prod;
	}
	PartitionResult res;
	res.kind = PartitionKind::Normalized;
	res.method = PartitionMethod::Mc;
	res.grid_step = step;
	res.value = st.mean();
	res.log_value = std::log(res.value);
	res.std_error = st.stderror();
	res.ess = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
	res.variance_warning = res.ess < 0.01 * static_cast<double>(n_samples);
	return res;
}

RenewalTrajectory renewal_bridge_sampler(const AnnealedModel& model,
										 double beta, double T, double step,
										 Rng& rng) {
	auto bridge = model.renewal_bridge(beta, T, step);
	auto idx = bridge.sample(rng);
	RenewalTrajectory traj;
	traj.beta = beta;
	traj.bridge = true;
	traj.points.reserve(idx.size() + 1);
	traj.points.push_back(0.0);
	for (auto i : idx) traj.points.push_back(i * step);
	traj.points.back() = T;  // exact endpoint, no rounding residue
	return traj;
}

}  // namespace rwpm
