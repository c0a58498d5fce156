#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace rppa {

// Standard normal cdf via the C library erfc. erfc is accurate to a few ulp,
// which keeps the absolute error of the cdf well below 1e-14 everywhere,
// including the far tails needed by lognormal reserve solving.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_sf(double x) {
    return 0.5 * std::erfc(x * 0.7071067811865475244);
}

// Inverse standard normal cdf: Acklam's rational approximation (relative
// error < 1.15e-9) polished with one Halley step against normal_cdf, which
// brings the result to full double precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("normal_quantile: p must be in [0, 1]");
    }

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};

    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement.
    const double e = normal_cdf(x) - p;
    const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

// Gauss-Kronrod 15(7) pair on [-1, 1] (QUADPACK dqk15 constants).
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk_kronrod_w[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk_gauss_w[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);

    double fc = f(mid);
    double result_k = gk_kronrod_w[7] * fc;
    double result_g = gk_gauss_w[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * gk_nodes[i];
        const double f1 = f(mid - dx);
        const double f2 = f(mid + dx);
        result_k += gk_kronrod_w[i] * (f1 + f2);
        if (i % 2 == 1) result_g += gk_gauss_w[i / 2] * (f1 + f2);
    }
    kronrod = result_k * half;
    err = std::abs((result_k - result_g) * half);
}

template <typename F>
inline double integrate_rec(const F& f, double a, double b, double tol, int depth) {
    double value, err;
    gk15(f, a, b, value, err);
    if (err <= tol || depth >= 48) return value;
    const double mid = 0.5 * (a + b);
    return integrate_rec(f, a, mid, 0.5 * tol, depth + 1) +
           integrate_rec(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod quadrature with an absolute error target. Finite
// limits only; improper integrals are truncated by the caller at a quantile.
template <typename F>
inline double integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-10) {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("integrate_adaptive: abs_tol must be > 0");
    if (a == b) return 0.0;
    if (a > b) return -integrate_adaptive(f, b, a, abs_tol);
    return detail::integrate_rec(f, a, b, abs_tol, 0);
}

}  // namespace rppa
