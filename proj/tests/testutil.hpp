#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dislab/linalg.hpp"
#include "dislab/mixture.hpp"
#include "dislab/rng.hpp"

namespace dislab::testutil {

inline constexpr std::uint64_t kTestSeed = 20240901;

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-5) {
    const Vec f0 = f(x);
    Mat j(f0.size(), x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        Vec xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vec fp = f(xp);
        const Vec fm = f(xm);
        for (std::size_t r = 0; r < f0.size(); ++r) j(r, c) = (fp[r] - fm[r]) / (2.0 * h);
    }
    return j;
}

// 2-d trapezoid quadrature of f over [lo0,hi0] x [lo1,hi1]
inline double quadrature_2d(const std::function<double(double, double)>& f, double lo0,
                            double hi0, double lo1, double hi1, std::size_t n) {
    const double h0 = (hi0 - lo0) / static_cast<double>(n - 1);
    const double h1 = (hi1 - lo1) / static_cast<double>(n - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            row += wj * f(lo0 + h0 * static_cast<double>(i), lo1 + h1 * static_cast<double>(j));
        }
        total += wi * row;
    }
    return total * h0 * h1;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// marginal draw of the smoothed prior at level sigma_t
inline Vec marginal_draw(const GaussianMixture& gmm, double sigma_t, RngStream& rng) {
    Vec x = sample_prior(gmm, rng);
    for (double& v : x) v += sigma_t * rng.normal();
    return x;
}

// seeded high-dimensional mixtures used by the generic-dimension checks
inline GaussianMixture random_mixture(std::size_t dim, std::uint64_t seed = kTestSeed) {
    RngStream rng = make_stream(seed, dim, "random-means");
    std::vector<Vec> means;
    for (std::size_t i = 0; i < 5; ++i) {
        Vec m(dim);
        for (double& v : m) v = rng.uniform(-1.0, 1.0);
        means.push_back(std::move(m));
    }
    return GaussianMixture(dim, std::move(means), 0.1);
}

inline GaussianMixture random_mixture_d8(std::uint64_t seed = kTestSeed) {
    return random_mixture(8, seed);
}

}  // namespace dislab::testutil
