#include "cosetcox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

namespace cosetcox::stats {

double chi2_sf(double x, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("chi2_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

double normal_two_sided(double z) {
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z)));
}

double poisson_pmf(std::size_t k, double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson_pmf: negative mean");
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return boost::math::pdf(boost::math::poisson(mean), static_cast<double>(k));
}

double poisson_sf(std::size_t k, double mean) {
    if (k == 0) return 1.0;
    if (mean == 0.0) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::poisson(mean), static_cast<double>(k - 1)));
}

double poisson_tv(double a, double b) {
    if (a < 0.0 || b < 0.0) throw std::invalid_argument("poisson_tv: negative mean");
    // Sum |pmf difference| until both tails are negligible.
    const double top = std::max(a, b);
    const auto kmax = static_cast<std::size_t>(top + 20.0 * std::sqrt(top + 1.0) + 20.0);
    double s = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) s += std::abs(poisson_pmf(k, a) - poisson_pmf(k, b));
    return std::min(1.0, 0.5 * s);
}

KsResult ks_uniform(std::span<const double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_uniform: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = std::clamp(x[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    // Kolmogorov limit law with Stephens' finite-n correction.
    const double rn = std::sqrt(n);
    const double lambda = (rn + 0.12 + 0.11 / rn) * d;
    double p = 0.0;
    if (lambda < 0.2) {
        p = 1.0;
    } else {
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            p += (k % 2 ? 2.0 : -2.0) * term;
            if (term < 1e-16) break;
        }
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

MeanSe mean_se(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean_se: empty sample");
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double v : x) m += v;
    m /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {m, sd / std::sqrt(n), sd};
}

}  // namespace cosetcox::stats
