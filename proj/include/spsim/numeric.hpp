#pragma once

// Numeric building blocks for simulated maximum likelihood: Halton draws,
// the standard normal quantile, a dense quasi-Newton minimizer, and the
// small linear-algebra pieces needed for covariance estimation.

#include "spsim/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace spsim {

// ---- deterministic seed derivation ----

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// ---- Halton sequences ----

inline constexpr std::array<int, 10> kHaltonPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

// Radical inverse of index (1-based) in the given base; always in (0,1).
inline double radical_inverse(int base, uint64_t index) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % static_cast<uint64_t>(base));
        index /= static_cast<uint64_t>(base);
    }
    return r;
}

struct HaltonDraws {
    int n_persons = 0;
    int n_dims = 0;
    int n_draws = 0;
    std::vector<double> values;  // [person][dim][draw]

    double at(int person, int dim, int draw) const {
        return values[(static_cast<size_t>(person) * static_cast<size_t>(n_dims) +
                       static_cast<size_t>(dim)) *
                          static_cast<size_t>(n_draws) +
                      static_cast<size_t>(draw)];
    }
};

// One Halton stream per dimension (prime bases, first `skip` points dropped),
// sliced consecutively across persons. The seed shifts each dimension's start
// index by a pseudo-random offset; seed 0 means the plain sequence.
inline HaltonDraws halton_draws(int n_persons, int n_dims, int n_draws, uint64_t seed = 0,
                                int skip = 10) {
    if (n_dims < 1 || n_dims > static_cast<int>(kHaltonPrimes.size()))
        fail(ErrorKind::config,
             "halton_draws supports 1.." + std::to_string(kHaltonPrimes.size()) +
                 " dimensions, got " + std::to_string(n_dims));
    if (n_persons < 1 || n_draws < 1) fail(ErrorKind::config, "halton_draws: empty request");

    HaltonDraws out;
    out.n_persons = n_persons;
    out.n_dims = n_dims;
    out.n_draws = n_draws;
    out.values.resize(static_cast<size_t>(n_persons) * n_dims * n_draws);

    for (int d = 0; d < n_dims; ++d) {
        const int base = kHaltonPrimes[static_cast<size_t>(d)];
        uint64_t offset = 0;
        if (seed != 0) offset = mix_seed(seed, static_cast<uint64_t>(d)) % 16384;
        for (int p = 0; p < n_persons; ++p) {
            for (int r = 0; r < n_draws; ++r) {
                const uint64_t index = static_cast<uint64_t>(skip) + 1 + offset +
                                       static_cast<uint64_t>(p) * n_draws +
                                       static_cast<uint64_t>(r);
                out.values[(static_cast<size_t>(p) * n_dims + static_cast<size_t>(d)) * n_draws +
                           static_cast<size_t>(r)] = radical_inverse(base, index);
            }
        }
    }
    return out;
}

// ---- standard normal quantile (Wichura's PPND16) ----

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::numeric, "normal_quantile requires p in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

// Two-sided normal critical value at level alpha (1.95996... for 0.05).
inline double normal_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::config, "alpha must be in (0,1)");
    return normal_quantile(1.0 - alpha / 2.0);
}

// Standard Gumbel via inverse transform, u in (0,1).
inline double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

inline double uniform_open01(std::mt19937_64& rng) {
    // avoids exact 0/1 so log transforms stay finite
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// ---- small dense linear algebra ----

// In-place Gauss-Jordan inverse with partial pivoting. Returns false if a
// pivot falls below the threshold; `a` is n*n row-major and is replaced by
// its inverse on success.
inline bool invert_matrix(std::vector<double>& a, int n, double pivot_tol = 1e-12) {
    std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(a[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(a[static_cast<size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < pivot_tol) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a[static_cast<size_t>(pivot) * n + c], a[static_cast<size_t>(col) * n + c]);
                std::swap(inv[static_cast<size_t>(pivot) * n + c],
                          inv[static_cast<size_t>(col) * n + c]);
            }
        }
        const double d = a[static_cast<size_t>(col) * n + col];
        for (int c = 0; c < n; ++c) {
            a[static_cast<size_t>(col) * n + c] /= d;
            inv[static_cast<size_t>(col) * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<size_t>(r) * n + c] -= f * a[static_cast<size_t>(col) * n + c];
                inv[static_cast<size_t>(r) * n + c] -= f * inv[static_cast<size_t>(col) * n + c];
            }
        }
    }
    a = std::move(inv);
    return true;
}

// ---- quasi-Newton minimization ----

struct OptimResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> gradient;
    bool converged = false;
    int iterations = 0;
};

struct OptimOptions {
    int max_iterations = 500;
    double gradient_tol = 1e-6;     // max-norm of the gradient
    double value_rel_tol = 1e-9;    // relative change of the objective
    double max_param_norm = 1e4;    // safeguard against divergence (separation)
};

// BFGS with backtracking Armijo line search. `fn` returns the objective and
// writes its gradient; we minimize, so callers hand in the negative
// log-likelihood.
inline OptimResult minimize_bfgs(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fn,
    std::vector<double> x0, const OptimOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    OptimResult res;
    res.x = std::move(x0);
    res.gradient.assign(static_cast<size_t>(n), 0.0);

    std::vector<double> h(static_cast<size_t>(n) * n, 0.0);  // inverse-Hessian approx
    for (int i = 0; i < n; ++i) h[static_cast<size_t>(i) * n + i] = 1.0;

    double f = fn(res.x, res.gradient);
    std::vector<double> dir(static_cast<size_t>(n)), x_new(static_cast<size_t>(n)),
        g_new(static_cast<size_t>(n)), s(static_cast<size_t>(n)), y(static_cast<size_t>(n)),
        hy(static_cast<size_t>(n));

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        res.iterations = iter + 1;

        double gmax = 0.0;
        for (double g : res.gradient) gmax = std::max(gmax, std::fabs(g));
        if (gmax < opt.gradient_tol) {
            res.converged = true;
            break;
        }

        // dir = -H * g
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                acc += h[static_cast<size_t>(i) * n + j] * res.gradient[static_cast<size_t>(j)];
            dir[static_cast<size_t>(i)] = -acc;
        }
        double descent = 0.0;
        for (int i = 0; i < n; ++i)
            descent += dir[static_cast<size_t>(i)] * res.gradient[static_cast<size_t>(i)];
        if (!(descent < 0.0)) {
            // reset to steepest descent if curvature information went bad
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j)
                    h[static_cast<size_t>(i) * n + j] = (i == j) ? 1.0 : 0.0;
                dir[static_cast<size_t>(i)] = -res.gradient[static_cast<size_t>(i)];
            }
            descent = 0.0;
            for (double g : res.gradient) descent -= g * g;
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < n; ++i)
                x_new[static_cast<size_t>(i)] =
                    res.x[static_cast<size_t>(i)] + step * dir[static_cast<size_t>(i)];
            f_new = fn(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * descent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search failed; report non-convergence

        bool diverged = false;
        double xnorm = 0.0;
        for (double v : x_new) xnorm = std::max(xnorm, std::fabs(v));
        if (xnorm > opt.max_param_norm) diverged = true;

        // BFGS update
        double sy = 0.0;
        for (int i = 0; i < n; ++i) {
            s[static_cast<size_t>(i)] = x_new[static_cast<size_t>(i)] - res.x[static_cast<size_t>(i)];
            y[static_cast<size_t>(i)] = g_new[static_cast<size_t>(i)] - res.gradient[static_cast<size_t>(i)];
            sy += s[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
        }
        if (sy > 1e-12) {
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j)
                    acc += h[static_cast<size_t>(i) * n + j] * y[static_cast<size_t>(j)];
                hy[static_cast<size_t>(i)] = acc;
            }
            double yhy = 0.0;
            for (int i = 0; i < n; ++i) yhy += y[static_cast<size_t>(i)] * hy[static_cast<size_t>(i)];
            const double c1 = (sy + yhy) / (sy * sy);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    h[static_cast<size_t>(i) * n + j] +=
                        c1 * s[static_cast<size_t>(i)] * s[static_cast<size_t>(j)] -
                        (hy[static_cast<size_t>(i)] * s[static_cast<size_t>(j)] +
                         s[static_cast<size_t>(i)] * hy[static_cast<size_t>(j)]) /
                            sy;
                }
            }
        }

        const double f_prev = f;
        res.x = x_new;
        res.gradient = g_new;
        f = f_new;

        if (diverged) break;

        if (std::fabs(f_prev - f) <= opt.value_rel_tol * (std::fabs(f_prev) + 1e-30)) {
            res.converged = true;
            break;
        }
    }

    res.value = f;
    return res;
}

// Hessian of `fn` by central differences of its gradient, symmetrized.
inline std::vector<double> central_difference_hessian(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fn,
    const std::vector<double>& x, double h_scale = 1e-5) {
    const int n = static_cast<int>(x.size());
    std::vector<double> hess(static_cast<size_t>(n) * n, 0.0);
    std::vector<double> xp = x, gp(static_cast<size_t>(n)), gm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double h = h_scale * std::max(1.0, std::fabs(x[static_cast<size_t>(i)]));
        xp[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + h;
        fn(xp, gp);
        xp[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] - h;
        fn(xp, gm);
        xp[static_cast<size_t>(i)] = x[static_cast<size_t>(i)];
        for (int j = 0; j < n; ++j)
            hess[static_cast<size_t>(i) * n + j] =
                (gp[static_cast<size_t>(j)] - gm[static_cast<size_t>(j)]) / (2.0 * h);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (hess[static_cast<size_t>(i) * n + j] +
                                    hess[static_cast<size_t>(j) * n + i]);
            hess[static_cast<size_t>(i) * n + j] = v;
            hess[static_cast<size_t>(j) * n + i] = v;
        }
    return hess;
}

}  // namespace spsim
