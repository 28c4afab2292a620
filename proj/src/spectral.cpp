#include "rwpm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwpm {

namespace {

// Filon moments for one panel [c-d, c+d] with E sampled at the ends and the
// midpoint: int_{-1}^{1} {1, u, u^2} * {cos, sin}(w u) du.  Odd/even vanishing
// moments are dropped.  Taylor forms below w = 0.1 avoid cancellation.
struct FilonMoments {
	double C0, C2, S1;
};

FilonMoments filon_moments(double w) {
	FilonMoments m;
	if (std::fabs(w) < 0.1) {
		double w2 = w * w;
		m.C0 = 2.0 - w2 / 3.0 + w2 * w2 / 60.0;
		m.C2 = 2.0 / 3.0 - w2 / 5.0 + w2 * w2 / 84.0;
		m.S1 = w * (2.0 / 3.0 - w2 / 15.0 + w2 * w2 / 315.0);
	} else {
		double sw = std::sin(w), cw = std::cos(w);
		m.C0 = 2.0 * sw / w;
		m.C2 = 2.0 * ((w * w - 2.0) * sw + 2.0 * w * cw) / (w * w * w);
		m.S1 = 2.0 * (sw - w * cw) / (w * w);
	}
	return m;
}

}  // namespace

double TransitionTable::accounted_mass() const {
	double m = probs.empty() ? 0.0 : probs[0];
	for (std::size_t i = 1; i < probs.size(); ++i) m += 2.0 * probs[i];
	return m;
}

TransitionKernel::TransitionKernel(const KernelTable& kernel) : kern_(&kernel) {
	// right-minimum envelope of hhat on a log grid, used to pick the
	// quadrature cutoff where exp(-t hhat) is negligible for good
	const int per_decade = 64;
	double lo = 1e-8, hi = M_PI;
	int n = static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade));
	env_theta_.resize(static_cast<std::size_t>(n) + 1);
	env_min_.resize(env_theta_.size());
	for (int i = 0; i <= n; ++i)
		env_theta_[static_cast<std::size_t>(i)] =
			lo * std::pow(hi / lo, static_cast<double>(i) / n);
	env_theta_.back() = M_PI;
	double run = kern_->hhat_pi();
	for (int i = n; i >= 0; --i) {
		run = std::min(run, kern_->hhat(env_theta_[static_cast<std::size_t>(i)]));
		env_min_[static_cast<std::size_t>(i)] = run;
	}
}

double TransitionKernel::solve_level(double t, double target) const {
	if (t <= 0.0) throw std::domain_error("solve_level: t must be positive");
	if (t * env_min_.back() < target) return M_PI;
	if (t * kern_->hhat(env_theta_.front()) >= target) {
		// below the envelope grid hhat is an increasing power law: bisect
		double a = 1e-300, b = env_theta_.front();
		for (int it = 0; it < 200; ++it) {
			double mid = std::sqrt(a * b);
			(t * kern_->hhat(mid) >= target ? b : a) = mid;
		}
		return b;
	}
	std::size_t lo = 0, hi = env_min_.size() - 1;
	while (hi - lo > 1) {
		std::size_t mid = (lo + hi) / 2;
		(t * env_min_[mid] >= target ? hi : lo) = mid;
	}
	double a = env_theta_[lo], b = env_theta_[hi];
	for (int it = 0; it < 60; ++it) {
		double mid = 0.5 * (a + b);
		(t * kern_->hhat(mid) >= target ? b : a) = mid;
	}
	return b;
}

TransitionKernel::Nodes TransitionKernel::build_nodes(double t) const {
	Nodes n;
	n.theta_c = solve_level(t, 40.0);
	n.theta_tilde = solve_level(t, 1.0);
	double g = kern_->gamma();
	int q = std::clamp(static_cast<int>(std::ceil(4.0 / g)), 4, 16);

	auto assemble = [&](int panels) {
		std::size_t np = 2 * static_cast<std::size_t>(panels) + 1;
		n.theta.assign(np, 0.0);
		n.E.assign(np, 0.0);
		for (int p = 0; p <= panels; ++p) {
			double s = static_cast<double>(p) / panels;
			n.theta[2 * static_cast<std::size_t>(p)] = n.theta_c * std::pow(s, q);
		}
		for (int p = 0; p < panels; ++p) {
			std::size_t i = 2 * static_cast<std::size_t>(p);
			n.theta[i + 1] = 0.5 * (n.theta[i] + n.theta[i + 2]);
		}
		for (std::size_t i = 0; i < np; ++i)
			n.E[i] = std::exp(-t * kern_->hhat(n.theta[i]));
	};

	double x_probe = std::min(1.0 / std::max(n.theta_tilde, 1e-300), 1e9);
	int panels = 192;
	assemble(panels);
	double p0_prev = filon(n, 0.0), px_prev = filon(n, x_probe);
	for (;;) {
		panels *= 2;
		assemble(panels);
		double p0_cur = filon(n, 0.0), px_cur = filon(n, x_probe);
		n.err = std::max(std::fabs(p0_cur - p0_prev), std::fabs(px_cur - px_prev));
		double tol = std::clamp(1e-5 * std::fabs(p0_cur), 1e-16, 2e-11);
		if (n.err <= tol || panels >= 3072) break;
		p0_prev = p0_cur;
		px_prev = px_cur;
	}
	if (n.err > 1e-6)
		throw std::runtime_error("transition quadrature did not converge");
	return n;
}

double TransitionKernel::filon(const Nodes& n, double x) {
	double acc = 0.0;
	std::size_t panels = (n.theta.size() - 1) / 2;
	for (std::size_t p = 0; p < panels; ++p) {
		std::size_t i = 2 * p;
		double e0 = n.E[i], e1 = n.E[i + 1], e2 = n.E[i + 2];
		double d = 0.5 * (n.theta[i + 2] - n.theta[i]);
		if (d <= 0.0) continue;
		double cth = n.theta[i + 1];
		FilonMoments m = filon_moments(d * x);
		double even = e1 * m.C0 + 0.5 * (e0 - 2.0 * e1 + e2) * m.C2;
		double odd = 0.5 * (e2 - e0) * m.S1;
		acc += d * (std::cos(cth * x) * even - std::sin(cth * x) * odd);
	}
	return acc / M_PI;
}

double TransitionKernel::p0(double t) const {
	if (t < 0.0) throw std::domain_error("p0: negative time");
	if (t == 0.0) return 1.0;
	Nodes n = build_nodes(t);
	return filon(n, 0.0);
}

double TransitionKernel::prob(double t, std::int64_t x) const {
	if (t < 0.0) throw std::domain_error("prob: negative time");
	if (t == 0.0) return x == 0 ? 1.0 : 0.0;
	// quadrature is exact in the oscillation, so it is preferred whenever the
	// value sits above the quadrature noise floor; the single-jump asymptotic
	// only takes over in the extreme tail
	if (t * kern_->j(x) < 1e-10) return lag(t)->prob(x);
	Nodes n = build_nodes(t);
	return filon(n, static_cast<double>(std::llabs(x)));
}

TransitionTable TransitionKernel::table(double t, std::int64_t x_range) const {
	if (t < 0.0) throw std::domain_error("table: negative time");
	TransitionTable tab;
	tab.t = t;
	if (t == 0.0) {
		tab.x_range = std::max<std::int64_t>(x_range, 0);
		tab.probs.assign(static_cast<std::size_t>(tab.x_range) + 1, 0.0);
		tab.probs[0] = 1.0;
		return tab;
	}
	Nodes n = build_nodes(t);
	if (x_range < 0) {
		double scale = 1.0 / std::max(n.theta_tilde, 1e-12);
		double X = std::max(64.0, 30.0 * scale);
		x_range = static_cast<std::int64_t>(std::ceil(std::min(X, 2097152.0)));
	}
	tab.x_range = x_range;
	tab.quad_error = n.err;
	// each of ~Pois(t) jumps independently clears the range with prob 2 J-bar
	tab.tail_mass = 1.0 - std::exp(-2.0 * t * kern_->tail_j(
		static_cast<double>(x_range)));
	tab.probs.resize(static_cast<std::size_t>(x_range) + 1);
	for (std::int64_t x = 0; x <= x_range; ++x)
		tab.probs[static_cast<std::size_t>(x)] =
			std::max(filon(n, static_cast<double>(x)), 0.0);
	return tab;
}

std::shared_ptr<const LagEvaluator> TransitionKernel::lag(double t) const {
	if (t < 0.0) throw std::domain_error("lag: negative time");
	std::int64_t key = std::llround(t * 65536.0);
	{
		std::lock_guard<std::mutex> g(mu_);
		auto it = cache_.find(key);
		if (it != cache_.end()) return it->second;
	}
	auto ev = build_lag(t);
	std::lock_guard<std::mutex> g(mu_);
	if (cache_.size() > 65536) cache_.clear();
	cache_.emplace(key, ev);
	return cache_[key];
}

std::shared_ptr<const LagEvaluator> TransitionKernel::build_lag(double t) const {
	auto ev = std::make_shared<LagEvaluator>();
	ev->t = t;
	ev->kern_ = kern_;
	double g = kern_->gamma();
	// stable-tail correction coefficients from the asymptotic series of the
	// one-sided stable density: relative terms c_k z^{-(k-1)g}, k = 2, 3
	double base = std::tgamma(1.0 + g) * std::sin(0.5 * M_PI * g);
	ev->c2_ = -std::tgamma(1.0 + 2.0 * g) * std::sin(M_PI * g) / (2.0 * base);
	ev->c3_ = std::tgamma(1.0 + 3.0 * g) * std::sin(1.5 * M_PI * g) / (6.0 * base);
	if (t == 0.0) {
		ev->theta_tilde = M_PI;
		ev->x_far_ = 0.0;
		ev->dense_ = {1.0};
		ev->p0 = 1.0;
		return ev;
	}
	Nodes n = build_nodes(t);
	ev->theta_tilde = n.theta_tilde;
	ev->quad_error = n.err;
	ev->x_far_ = std::min(60.0 / std::max(n.theta_tilde, 1e-300), 1e15);

	std::int64_t dense_max = 64;
	ev->dense_.resize(static_cast<std::size_t>(dense_max) + 1);
	for (std::int64_t x = 0; x <= dense_max; ++x)
		ev->dense_[static_cast<std::size_t>(x)] =
			std::max(filon(n, static_cast<double>(x)), 0.0);
	ev->p0 = ev->dense_[0];

	ev->log_x0_ = std::log(static_cast<double>(dense_max));
	ev->log_ratio_ = std::log(1.03);
	if (ev->x_far_ > static_cast<double>(dense_max)) {
		std::size_t cnt = static_cast<std::size_t>(
			std::ceil((std::log(ev->x_far_) - ev->log_x0_) / ev->log_ratio_)) + 2;
		ev->log_vals_.resize(cnt);
		for (std::size_t k = 0; k < cnt; ++k) {
			double x = std::exp(ev->log_x0_ + ev->log_ratio_ * static_cast<double>(k));
			double z = n.theta_tilde * x;
			double v;
			if (z > 10.0 && t * kern_->j(static_cast<std::int64_t>(x)) < 1e-10) {
				v = ev->region3(x);  // below the quadrature noise floor
			} else {
				v = filon(n, x);
				if (v <= 0.0 && z > 5.0) v = ev->region3(x);
			}
			v = std::max(v, 1e-300);
			ev->log_vals_[k] = static_cast<float>(std::log(v));
		}
	}
	return ev;
}

double LagEvaluator::region3(double x) const {
	// single-jump asymptotics; the stable-series refinement only applies in
	// the large-t scaling regime where theta_tilde << 1
	double corr = 1.0;
	if (theta_tilde < 0.3) {
		double g = kern_->gamma();
		double z = theta_tilde * x;
		corr = 1.0 + c2_ * std::pow(z, -g) + c3_ * std::pow(z, -2.0 * g);
	}
	return t * kern_->j(static_cast<std::int64_t>(std::llround(x))) *
		   std::max(corr, 0.0);
}

double LagEvaluator::prob(std::int64_t x) const {
	std::int64_t a = std::llabs(x);
	if (a < static_cast<std::int64_t>(dense_.size()))
		return dense_[static_cast<std::size_t>(a)];
	double xd = static_cast<double>(a);
	if (xd < x_far_ && !log_vals_.empty()) {
		double pos = (std::log(xd) - log_x0_) / log_ratio_;
		std::size_t k = static_cast<std::size_t>(pos);
		if (k + 1 < log_vals_.size()) {
			double f = pos - static_cast<double>(k);
			double lv = (1.0 - f) * static_cast<double>(log_vals_[k]) +
						f * static_cast<double>(log_vals_[k + 1]);
			return std::exp(lv);
		}
	}
	return region3(xd);
}

std::vector<double> hybrid_grid(double lin_max, double lin_step, double t_max,
								int per_decade) {
	std::vector<double> g;
	std::int64_t nlin = std::llround(lin_max / lin_step);
	if (nlin % 2 == 1) ++nlin;  // even interval count for Simpson
	for (std::int64_t i = 0; i <= nlin; ++i)
		g.push_back(static_cast<double>(i) * lin_step);
	double ratio = std::pow(10.0, 1.0 / per_decade);
	for (double t = g.back() * ratio; t < t_max * (1.0 + 1e-12); t *= ratio)
		g.push_back(t);
	if (g.back() < t_max) g.push_back(t_max);
	return g;
}

ReturnProbabilityCurve return_prob_curve(const TransitionKernel& tk,
										 const std::vector<double>& grid) {
	if (grid.size() < 4 || grid.front() != 0.0)
		throw std::invalid_argument("return_prob_curve: grid must start at 0");
	ReturnProbabilityCurve c;
	c.grid = grid;
	c.p0.resize(grid.size());
	c.p0[0] = 1.0;
	for (std::size_t i = 1; i < grid.size(); ++i) {
		c.p0[i] = tk.p0(grid[i]);
		if (c.p0[i] > c.p0[i - 1] + 1e-13 + 3e-5 * c.p0[i])
			throw std::runtime_error("return probability not monotone");
		c.p0[i] = std::min(c.p0[i], c.p0[i - 1]);
	}
	// locate the end of the linear section
	c.lin_count = 1;
	for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
		double step0 = grid[1] - grid[0];
		if (std::fabs((grid[i] - grid[i - 1]) - step0) < 1e-9 * step0)
			c.lin_count = i + 1;
		else
			break;
	}
	c.lin_max = grid[c.lin_count - 1];

	// tail fit over the last decade
	double t_max = grid.back();
	std::vector<double> lx, ly;
	for (std::size_t i = 0; i < grid.size(); ++i)
		if (grid[i] >= t_max / 10.0) {
			lx.push_back(std::log(grid[i]));
			ly.push_back(std::log(std::max(c.p0[i], 1e-300)));
		}
	double sx = 0, sy = 0, sxx = 0, sxy = 0;
	for (std::size_t i = 0; i < lx.size(); ++i) {
		sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
	}
	double nn = static_cast<double>(lx.size());
	double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
	double icpt = (sy - slope * sx) / nn;
	c.tail_p = -slope;
	c.tail_A = std::exp(icpt);
	c.fitted_exponent = c.tail_p;
	c.build_suffix();
	return c;
}

double ReturnProbabilityCurve::p0_at(double t) const {
	if (t < 0.0) throw std::domain_error("p0_at: negative time");
	if (t >= grid.back()) return tail_A * std::pow(t, -tail_p);
	if (t <= lin_max) {
		double step = grid[1] - grid[0];
		std::size_t i = std::min(static_cast<std::size_t>(t / step),
								 lin_count - 2);
		double f = (t - grid[i]) / step;
		return (1.0 - f) * p0[i] + f * p0[i + 1];
	}
	std::size_t i = static_cast<std::size_t>(
		std::upper_bound(grid.begin(), grid.end(), t) - grid.begin()) - 1;
	if (i + 1 >= grid.size()) i = grid.size() - 2;
	double f = std::log(t / grid[i]) / std::log(grid[i + 1] / grid[i]);
	double lv = (1.0 - f) * std::log(p0[i]) + f * std::log(p0[i + 1]);
	return std::exp(lv);
}

double ReturnProbabilityCurve::integral_p0() const {
	if (suffix_.empty())
		throw std::logic_error("integral_p0: suffix integrals not built");
	return suffix_[0];
}

void ReturnProbabilityCurve::build_suffix() {
	if (tail_p <= 1.0)
		throw std::runtime_error("p0 tail exponent <= 1: integral diverges");
	suffix_.assign(grid.size(), 0.0);
	suffix_.back() = tail_A * std::pow(grid.back(), 1.0 - tail_p) / (tail_p - 1.0);
	double step = grid[1] - grid[0];
	for (std::size_t i = grid.size() - 1; i > 0; --i) {
		double t0 = grid[i - 1], t1 = grid[i], seg;
		if (i < lin_count) {
			// integral of the local interpolating parabola over one step
			if (i + 1 < lin_count)
				seg = (step / 12.0) * (5.0 * p0[i - 1] + 8.0 * p0[i] - p0[i + 1]);
			else
				seg = (step / 12.0) * (-p0[i - 2] + 8.0 * p0[i - 1] + 5.0 * p0[i]);
		} else {
			double q = std::log(p0[i - 1] / p0[i]) / std::log(t1 / t0);
			if (std::fabs(q - 1.0) < 1e-9)
				seg = p0[i - 1] * t0 * std::log(t1 / t0);
			else
				seg = p0[i - 1] * t0 * (std::pow(t1 / t0, 1.0 - q) - 1.0) / (1.0 - q);
		}
		suffix_[i - 1] = suffix_[i] + seg;
	}
}

void ReturnProbabilityCurve::set_beta0(double b0) {
	beta0 = b0;
	K.resize(p0.size());
	for (std::size_t i = 0; i < p0.size(); ++i) K[i] = b0 * p0[i];
}

double ReturnProbabilityCurve::K_at(double t) const {
	if (beta0 <= 0.0) throw std::logic_error("K_at: beta0 not set");
	return beta0 * p0_at(t);
}

double ReturnProbabilityCurve::Kbar(double t) const {
	if (beta0 <= 0.0) throw std::logic_error("Kbar: beta0 not set");
	if (t <= 0.0) return beta0 * suffix_[0];
	if (t >= grid.back())
		return beta0 * tail_A * std::pow(t, 1.0 - tail_p) / (tail_p - 1.0);
	std::size_t i = static_cast<std::size_t>(
		std::upper_bound(grid.begin(), grid.end(), t) - grid.begin()) - 1;
	double t0 = grid[i], t1 = grid[i + 1], part;
	if (i + 1 < lin_count || t0 == 0.0) {
		double pm = p0_at(t);
		part = 0.5 * (p0[i] + pm) * (t - t0);
	} else {
		double q = std::log(p0[i] / p0[i + 1]) / std::log(t1 / t0);
		if (std::fabs(q - 1.0) < 1e-9)
			part = p0[i] * t0 * std::log(t / t0);
		else
			part = p0[i] * t0 * (std::pow(t / t0, 1.0 - q) - 1.0) / (1.0 - q);
	}
	return beta0 * (suffix_[i] - part);
}

}  // namespace rwpm
