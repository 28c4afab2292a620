#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rwpm {

// Welford accumulator with exact merge, so pooled results do not depend on
// the order in which partial accumulators are combined pairwise.
class RunningStat {
public:
	void push(double x) {
		++n_;
		double d = x - mean_;
		mean_ += d / static_cast<double>(n_);
		m2_ += d * (x - mean_);
	}
	void merge(const RunningStat& o) {
		if (o.n_ == 0) return;
		if (n_ == 0) { *this = o; return; }
		double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
		double d = o.mean_ - mean_;
		double n = na + nb;
		mean_ += d * nb / n;
		m2_ += o.m2_ + d * d * na * nb / n;
		n_ += o.n_;
	}
	std::size_t count() const { return n_; }
	double mean() const { return mean_; }
	double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
	double stddev() const { return std::sqrt(variance()); }
	double stderror() const {
		return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
	}

private:
	std::size_t n_ = 0;
	double mean_ = 0.0, m2_ = 0.0;
};

struct FitResult {
	double slope = 0.0;
	double intercept = 0.0;
	double slope_stderr = 0.0;
	double r2 = 0.0;
};

inline FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
	if (x.size() != y.size() || x.size() < 2)
		throw std::invalid_argument("linear_fit: need >= 2 matching points");
	std::size_t n = x.size();
	double sx = 0, sy = 0;
	for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
	double mx = sx / n, my = sy / n;
	double sxx = 0, sxy = 0, syy = 0;
	for (std::size_t i = 0; i < n; ++i) {
		sxx += (x[i] - mx) * (x[i] - mx);
		sxy += (x[i] - mx) * (y[i] - my);
		syy += (y[i] - my) * (y[i] - my);
	}
	if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
	FitResult f;
	f.slope = sxy / sxx;
	f.intercept = my - f.slope * mx;
	double ssr = 0;
	for (std::size_t i = 0; i < n; ++i) {
		double e = y[i] - (f.intercept + f.slope * x[i]);
		ssr += e * e;
	}
	f.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
	if (n > 2) f.slope_stderr = std::sqrt(ssr / ((n - 2) * sxx));
	return f;
}

inline double median(std::vector<double> v) {
	if (v.empty()) throw std::invalid_argument("median: empty");
	std::sort(v.begin(), v.end());
	std::size_t n = v.size();
	return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile(std::vector<double> v, double q) {
	if (v.empty()) throw std::invalid_argument("quantile: empty");
	std::sort(v.begin(), v.end());
	double pos = q * (v.size() - 1);
	std::size_t lo = static_cast<std::size_t>(pos);
	if (lo + 1 >= v.size()) return v.back();
	double frac = pos - lo;
	return v[lo] * (1 - frac) + v[lo + 1] * frac;
}

// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
	if (lambda <= 0.0) return 1.0;
	double sum = 0.0;
	for (int k = 1; k <= 200; ++k) {
		double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
		sum += term;
		if (std::fabs(term) < 1e-16) break;
	}
	return std::min(1.0, std::max(0.0, sum));
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic, with Stephens' small-sample
// correction).  Conservative for discrete data.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
	if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
	std::sort(a.begin(), a.end());
	std::sort(b.begin(), b.end());
	double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
	double d = 0.0;
	std::size_t i = 0, j = 0;
	while (i < a.size() && j < b.size()) {
		double xa = a[i], xb = b[j];
		double x = std::min(xa, xb);
		while (i < a.size() && a[i] <= x) ++i;
		while (j < b.size() && b[j] <= x) ++j;
		d = std::max(d, std::fabs(i / na - j / nb));
	}
	double ne = std::sqrt(na * nb / (na + nb));
	return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

// Regularized lower incomplete gamma P(a, x); series + continued fraction.
inline double gamma_p(double a, double x) {
	if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad args");
	if (x == 0.0) return 0.0;
	if (x < a + 1.0) {
		double ap = a, sum = 1.0 / a, del = sum;
		for (int n = 0; n < 500; ++n) {
			ap += 1.0;
			del *= x / ap;
			sum += del;
			if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
		}
		return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
	}
	// Lentz continued fraction for Q
	double b = x + 1.0 - a, c = 1e300, dd = 1.0 / b, h = dd;
	for (int i = 1; i < 500; ++i) {
		double an = -i * (i - a);
		b += 2.0;
		dd = an * dd + b;
		if (std::fabs(dd) < 1e-300) dd = 1e-300;
		c = b + an / c;
		if (std::fabs(c) < 1e-300) c = 1e-300;
		dd = 1.0 / dd;
		double del = dd * c;
		h *= del;
		if (std::fabs(del - 1.0) < 1e-15) break;
	}
	double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
	return 1.0 - q;
}

inline double chi2_sf(double x, double dof) { return 1.0 - gamma_p(0.5 * dof, 0.5 * x); }

// Chi-square homogeneity p-value for two histograms over shared bins.
inline double chi2_two_sample_pvalue(const std::vector<double>& obs_a,
									 const std::vector<double>& obs_b) {
	if (obs_a.size() != obs_b.size())
		throw std::invalid_argument("chi2: bin mismatch");
	double na = 0, nb = 0;
	for (std::size_t i = 0; i < obs_a.size(); ++i) { na += obs_a[i]; nb += obs_b[i]; }
	double stat = 0;
	int dof = -1;
	double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
	for (std::size_t i = 0; i < obs_a.size(); ++i) {
		double tot = obs_a[i] + obs_b[i];
		if (tot < 5.0) continue;  // sparse bins are pooled out
		double d = ka * obs_a[i] - kb * obs_b[i];
		stat += d * d / tot;
		++dof;
	}
	if (dof < 1) return 1.0;
	return chi2_sf(stat, static_cast<double>(dof));
}

}  // namespace rwpm
