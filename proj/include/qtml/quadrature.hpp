// Adaptive Gauss-Kronrod (G7,K15) quadrature for real- and complex-valued
// integrands on finite intervals.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qtml::quad {

using cplx = std::complex<double>;

namespace detail {

// G7K15 nodes/weights on [-1,1].
inline constexpr double kx[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898,  0.0,
     0.207784955007898,  0.405845151377397,  0.586087235467691,
     0.741531185599394,  0.864864423359769,  0.949107912342759,
     0.991455371120813};
inline constexpr double kw[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529};
inline constexpr double gw[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

template <class T, class F>
void gk15(const F& f, double a, double b, T& result, double& err,
          double& resabs) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T resk{}, resg{};
    resabs = 0.0;
    for (int i = 0; i < 15; ++i) {
        T fv = f(c + h * kx[i]);
        resk += kw[i] * fv;
        resabs += kw[i] * std::abs(fv);
        if (i % 2 == 1) resg += gw[i / 2] * fv;
    }
    result = resk * h;
    err = std::abs(resk - resg) * std::abs(h);
    resabs *= std::abs(h);
}

template <class T, class F>
void adapt(const F& f, double a, double b, double tol, T& acc, double& errs,
           int depth, long& budget) {
    T r;
    double e, resabs;
    gk15<T>(f, a, b, r, e, resabs);
    --budget;
    // acceptance: tolerance met, or the estimate has hit the roundoff floor
    // of the local L1 mass, or the work budget is exhausted (integrands built
    // on Euler-Maclaurin zeta carry ~1e-14 relative noise that can make the
    // Kronrod error estimate refine forever near integrand zeros)
    if (e <= tol || e <= 2e-13 * resabs || depth >= 28 || budget <= 0) {
        acc += r;
        errs += e;
        return;
    }
    double m = 0.5 * (a + b);
    adapt<T>(f, a, m, tol * 0.5, acc, errs, depth + 1, budget);
    adapt<T>(f, m, b, tol * 0.5, acc, errs, depth + 1, budget);
}

}  // namespace detail

struct result_info {
    double error = 0.0;
};

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton on P_n and
// cached per order. Used for fixed-node line integrals where the integrand
// envelope is known analytically.
struct gl_rule {
    std::vector<double> x, w;
};

inline const gl_rule& gauss_legendre(int n) {
    static std::map<int, gl_rule> cache;
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    gl_rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Adaptive integration of f over [a,b] to absolute tolerance tol.
template <class T, class F>
T integrate(const F& f, double a, double b, double tol = 1e-12,
            result_info* info = nullptr, long max_panels = 20000) {
    T acc{};
    double errs = 0.0;
    long budget = max_panels;
    detail::adapt<T>(f, a, b, tol, acc, errs, 0, budget);
    if (info) info->error = errs;
    return acc;
}

inline double integrate_real(const std::function<double(double)>& f, double a,
                             double b, double tol = 1e-12,
                             result_info* info = nullptr) {
    return integrate<double>(f, a, b, tol, info);
}

inline cplx integrate_complex(const std::function<cplx(double)>& f, double a,
                              double b, double tol = 1e-12,
                              result_info* info = nullptr) {
    return integrate<cplx>(f, a, b, tol, info);
}

}  // namespace qtml::quad
