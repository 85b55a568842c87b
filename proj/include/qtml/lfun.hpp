// Shifted central values L(1/2 + alpha, f x chi_{8d}) and their derivative
// at the center, from the smoothed approximate functional equation
//   L(1/2+alpha) = S(alpha) + i^kappa eps(d) X_{alpha,d} S(-alpha),
//   S(alpha) = sum_n lambda(n) chi_{8d}(n) n^{-1/2-alpha} omega_alpha(n/8d).
//
// Two evaluation strategies:
//  * term route: direct n-sum with a kernel cache (fast kernels only);
//  * contour route: S(alpha) = (1/2 pi i) int G g_alpha / s (8d)^s
//    L(1/2+alpha+s, f x chi_{8d}) ds on a fixed vertical line, with the inner
//    L evaluated by its Euler product. This is the only double-precision
//    route for the zeta-damped G, whose kernel decays too slowly for
//    term-wise summation.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "qtml/arith.hpp"
#include "qtml/eigenform.hpp"
#include "qtml/kernel.hpp"
#include "qtml/special.hpp"

namespace qtml::lfun {

using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr double pi = 3.14159265358979323846;

struct TwistPoint {
    u64 d = 1;          // odd squarefree positive; discriminant is 8d
    cplx alpha = 0.0;   // |Re alpha| <= 1/4
    int kappa = 12;
};

inline void validate_point(const TwistPoint& pt) {
    if (pt.d == 0 || pt.d % 2 == 0 || !arith::is_squarefree(pt.d))
        throw std::invalid_argument("TwistPoint: d must be odd squarefree positive");
    if (std::abs(pt.alpha.real()) > 0.25)
        throw std::invalid_argument("TwistPoint: |Re alpha| <= 1/4 required");
    if (pt.kappa % 2 != 0)
        throw std::invalid_argument("TwistPoint: even weight required");
}

struct ShiftedLValue {
    TwistPoint point;
    cplx value{};
    u64 terms_used = 0;
    double tail_bound = 0.0;
};

struct TableTooShort : std::runtime_error {
    u64 required;
    explicit TableTooShort(u64 need)
        : std::runtime_error("eigenform table too short: requires N_max >= " +
                             std::to_string(need)),
          required(need) {}
};

// i^kappa for even kappa
inline double i_pow(int kappa) { return (kappa / 2) % 2 ? -1.0 : 1.0; }

// i^kappa eps(d) X_{alpha,d} with |d| -> 8d (the chi_{8d} family)
inline cplx root_factor(int kappa, cplx alpha, u64 d) {
    if (d == 0) throw std::invalid_argument("root_factor: d != 0 required");
    cplx lg = special::log_gamma(0.5 * kappa - alpha) -
              special::log_gamma(0.5 * kappa + alpha);
    return i_pow(kappa) *
           std::exp(-2.0 * alpha * std::log(8.0 * (double)d / (2.0 * pi)) + lg);
}

namespace detail {

// Truncation for the n-sum: smallest n with
//   env(n/q) tau(n) n^{-1/2+|Re alpha|} < tol,   tau(n) <= sqrt(3n),
// where env is the pointwise kernel envelope (sharper than any single
// fixed-exponent bound for the Gaussian-damped G's). The tail beyond n_stop
// is bounded by an integral comparison using the local decay exponent.
struct Truncation {
    u64 n_stop = 0;
    double tail = 0.0;
};

inline Truncation afe_truncation(int kappa, cplx alpha, kernel::GTag tag,
                                 double q, double tol) {
    const double r = std::abs(alpha.real());
    auto env = [&](double xi) {
        return std::max(kernel::kernel_envelope(kappa, alpha, tag, xi),
                        kernel::kernel_envelope(kappa, -alpha, tag, xi));
    };
    auto term_bound = [&](double n) {
        return std::sqrt(3.0) * std::pow(n, r) * env(n / q);
    };
    double lo = std::max(1.0, 0.5 * q), hi = lo;
    while (term_bound(hi) >= tol) {
        hi *= 1.3;
        if (hi > 1e12)
            throw std::runtime_error("afe_truncation: kernel decays too slowly");
    }
    while (hi / lo > 1.02) {
        double m = std::sqrt(lo * hi);
        (term_bound(m) >= tol ? lo : hi) = m;
    }
    // local decay exponent of the envelope at the cut, and the integral
    // comparison bound sum_{n>n*} b(n) <= b(n*) n* / (A_eff - 1 - r)
    auto tail_at = [&](double n) {
        double e1 = env(n / q), e2 = env(1.4 * n / q);
        double A_eff = std::log(e1 / std::max(e2, 1e-300)) / std::log(1.4);
        if (A_eff < 2.5 + r) A_eff = 2.5 + r;  // conservative floor
        return std::make_pair(term_bound(n) * n / (A_eff - 1.0 - r), A_eff);
    };
    std::pair<double, double> ta = tail_at(hi);
    double tail = ta.first, A_eff = ta.second;
    // push further until the tail bound itself meets tol — worthwhile only
    // for superpolynomially decaying kernels, where a few extra terms buy
    // orders of magnitude; for slowly decaying G's the loose bound stands
    // and the caller sees it in tail_bound
    for (int it = 0; it < 80 && tail > 0.5 * tol && A_eff > 12.0; ++it) {
        hi *= 1.2;
        ta = tail_at(hi);
        tail = ta.first;
        A_eff = ta.second;
    }
    Truncation t;
    t.n_stop = (u64)std::ceil(hi);
    t.tail = tail;
    return t;
}

}  // namespace detail

// --- term route -------------------------------------------------------------

// Central value by direct summation with kernel caches for +alpha / -alpha.
// cache_p must hold omega_{+alpha}, cache_m omega_{-alpha}, same tag/kappa.
inline ShiftedLValue central_value(const eigenform::EigenformTable& table,
                                   const kernel::KernelCache& cache_p,
                                   const kernel::KernelCache& cache_m,
                                   const TwistPoint& pt, double tol = 1e-9) {
    validate_point(pt);
    if (cache_p.kappa != pt.kappa || cache_m.kappa != pt.kappa)
        throw std::invalid_argument("central_value: cache weight mismatch");
    if (std::abs(cache_p.alpha - pt.alpha) > 1e-15 ||
        std::abs(cache_m.alpha + pt.alpha) > 1e-15)
        throw std::invalid_argument("central_value: cache shift mismatch");

    const double q = 8.0 * (double)pt.d;
    auto tr = detail::afe_truncation(pt.kappa, pt.alpha, cache_p.tag, q,
                                     0.5 * tol);
    if (tr.n_stop > table.n_max) throw TableTooShort(tr.n_stop);
    if ((double)tr.n_stop / q > cache_p.xi_max ||
        (double)tr.n_stop / q > cache_m.xi_max)
        throw std::invalid_argument(
            "central_value: kernel cache xi_max below truncation point");

    const i64 eightd = (i64)(8 * pt.d);
    cplx s1 = 0.0, s2 = 0.0;
    for (u64 n = 1; n <= tr.n_stop; ++n) {
        int chi = arith::kronecker(eightd, (i64)n);
        if (chi == 0) continue;
        double lam = table.lam[n - 1];
        if (lam == 0.0) continue;
        double ln_n = std::log((double)n);
        cplx base = (double)chi * lam * std::exp(-0.5 * ln_n);
        double xi = (double)n / q;
        s1 += base * std::exp(-pt.alpha * ln_n) * cache_p.eval(xi);
        s2 += base * std::exp(pt.alpha * ln_n) * cache_m.eval(xi);
    }
    cplx rf = root_factor(pt.kappa, pt.alpha, pt.d);
    ShiftedLValue out;
    out.point = pt;
    out.value = s1 + rf * s2;
    out.terms_used = tr.n_stop;
    out.tail_bound = tr.tail * (1.0 + std::abs(rf));
    return out;
}

// --- contour route ----------------------------------------------------------

namespace detail {

// precomputed local data for the Euler product of L(w, f x chi_{8d})
struct EulerLocal {
    double chi_lam;  // chi(p) lambda(p)
    double ln_p;
};

inline std::vector<EulerLocal> euler_locals(const eigenform::EigenformTable& table,
                                            u64 d, u64 P) {
    if (P > table.n_max) throw TableTooShort(P);
    const i64 eightd = (i64)(8 * d);
    std::vector<EulerLocal> v;
    for (u64 p = 3; p <= P; p += 2) {
        bool prime = true;
        for (u64 t = 3; t * t <= p; t += 2)
            if (p % t == 0) {
                prime = false;
                break;
            }
        if (!prime) continue;
        int chi = arith::kronecker(eightd, (i64)p);
        if (chi == 0) continue;
        v.push_back({(double)chi * table.lam[p - 1], std::log((double)p)});
    }
    return v;
}

// L(w, f x chi_{8d}) from precomputed local data (Re w > 1)
inline cplx twisted_L_euler(const std::vector<EulerLocal>& locals, cplx w) {
    cplx acc = 0.0;  // log of the product
    for (const auto& l : locals) {
        cplx x = std::exp(-w * l.ln_p);
        acc -= std::log(1.0 - l.chi_lam * x + x * x);
    }
    return std::exp(acc);
}

}  // namespace detail

// Central value via the vertical-line integral with Euler-product inner L.
// Valid for all G tags; mandatory for zeta_damped.
inline ShiftedLValue central_value_contour(const eigenform::EigenformTable& table,
                                           const TwistPoint& pt, kernel::GTag tag,
                                           u64 P = 10000) {
    validate_point(pt);
    const double q = 8.0 * (double)pt.d;
    const double c = 2.5;  // inside the usable strip for every G tag
    const double a = kernel::gauss_width(tag);
    // t-range: Gaussian decay for a=1, Stirling decay of g_alpha for narrow
    const double T = tag == kernel::GTag::narrow ? 26.0 : 7.5;
    const auto locals = detail::euler_locals(table, pt.d, P);

    auto S = [&](cplx alpha) -> cplx {
        const cplx lg0 = special::log_gamma(0.5 * pt.kappa + alpha);
        const cplx znorm = tag == kernel::GTag::zeta_damped
                               ? kernel::detail::zdamp_norm(alpha)
                               : cplx(1.0);
        cplx acc = 0.0;
        const auto& gl = quad::gauss_legendre(120);
        const int panels = 6;
        for (int pnl = 0; pnl < panels; ++pnl) {
            double lo = -T + 2.0 * T * pnl / panels;
            double hi = -T + 2.0 * T * (pnl + 1) / panels;
            double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
            for (std::size_t j = 0; j < gl.x.size(); ++j) {
                double t = mid + hw * gl.x[j];
                cplx s(c, t);
                // G(s) g_alpha(s) / s * q^s, in log space
                cplx w = a * s * s + special::log_gamma(0.5 * pt.kappa + alpha + s) -
                         lg0 - s * std::log(2.0 * pi) + s * std::log(q);
                cplx f = std::exp(w) / s;
                if (tag == kernel::GTag::zeta_damped)
                    f *= kernel::detail::zdamp_ratio(alpha, s, znorm);
                cplx Lw = detail::twisted_L_euler(locals, 0.5 + alpha + s);
                acc += gl.w[j] * hw * f * Lw;
            }
        }
        return acc / (2.0 * pi);
    };

    cplx rf = root_factor(pt.kappa, pt.alpha, pt.d);
    ShiftedLValue out;
    out.point = pt;
    out.value = S(pt.alpha) + rf * S(-pt.alpha);
    out.terms_used = P;
    // Dominant truncation error: coefficients with a prime factor > P are
    // missing, and each such n still carries kernel weight omega(n/q).
    // Leading part: sum over primes p > P of 2 p^{-1/2+|r|} env(p/q),
    // estimated on a geometric grid with dpi(t) ~ dt/ln t.
    {
        double r = std::abs(pt.alpha.real());
        double tail = 0.0, t0 = (double)P;
        for (int i = 0; i < 60; ++i) {
            double t1 = t0 * 1.3;
            double envv =
                std::max(kernel::kernel_envelope(pt.kappa, pt.alpha, tag, t0 / q),
                         kernel::kernel_envelope(pt.kappa, -pt.alpha, tag, t0 / q));
            double seg = 2.0 * std::pow(t0, -0.5 + r) * envv * (t1 - t0) /
                         std::log(t0);
            tail += seg;
            t0 = t1;
            if (seg < 1e-16 * std::max(tail, 1e-300) && i > 10) break;
        }
        out.tail_bound = (1.0 + std::abs(rf)) * tail;
    }
    return out;
}

// --- direct (cache-free) narrow-kernel evaluation ---------------------------

// S(alpha) summed with per-term omega evaluations (narrow G). Slow but
// dependency-free; used by the derivative routes and as a reference.
inline ShiftedLValue central_value_direct(const eigenform::EigenformTable& table,
                                          const TwistPoint& pt,
                                          double tol = 1e-9) {
    validate_point(pt);
    const double q = 8.0 * (double)pt.d;
    auto tr = detail::afe_truncation(pt.kappa, pt.alpha, kernel::GTag::narrow,
                                     q, 0.5 * tol);
    if (tr.n_stop > table.n_max) throw TableTooShort(tr.n_stop);

    const i64 eightd = (i64)(8 * pt.d);
    cplx s1 = 0.0, s2 = 0.0;
    for (u64 n = 1; n <= tr.n_stop; ++n) {
        int chi = arith::kronecker(eightd, (i64)n);
        if (chi == 0) continue;
        double lam = table.lam[n - 1];
        if (lam == 0.0) continue;
        double ln_n = std::log((double)n);
        cplx base = (double)chi * lam * std::exp(-0.5 * ln_n);
        double xi = (double)n / q;
        s1 += base * std::exp(-pt.alpha * ln_n) *
              kernel::omega_narrow_fast(pt.kappa, pt.alpha, xi);
        s2 += base * std::exp(pt.alpha * ln_n) *
              kernel::omega_narrow_fast(pt.kappa, -pt.alpha, xi);
    }
    cplx rf = root_factor(pt.kappa, pt.alpha, pt.d);
    ShiftedLValue out;
    out.point = pt;
    out.value = s1 + rf * s2;
    out.terms_used = tr.n_stop;
    out.tail_bound = tr.tail * (1.0 + std::abs(rf));
    return out;
}

// --- derivative at the center ----------------------------------------------

// Kernel caches serving Richardson differentiation with steps h and h/2.
struct DerivCaches {
    int kappa = 12;
    double h = 1e-3;
    kernel::KernelCache p_h, m_h, p_h2, m_h2;  // shifts +h, -h, +h/2, -h/2
};

inline DerivCaches make_deriv_caches(int kappa, double h, double xi_min,
                                     double xi_max, double target_err) {
    using kernel::GTag;
    DerivCaches dc;
    dc.kappa = kappa;
    dc.h = h;
    dc.p_h = kernel::build_kernel_cache(kappa, h, GTag::narrow, xi_min, xi_max,
                                        target_err);
    dc.m_h = kernel::build_kernel_cache(kappa, -h, GTag::narrow, xi_min, xi_max,
                                        target_err);
    dc.p_h2 = kernel::build_kernel_cache(kappa, 0.5 * h, GTag::narrow, xi_min,
                                         xi_max, target_err);
    dc.m_h2 = kernel::build_kernel_cache(kappa, -0.5 * h, GTag::narrow, xi_min,
                                         xi_max, target_err);
    return dc;
}

// d/dalpha L(1/2+alpha)|_0 by Richardson-extrapolated central differences.
inline double central_derivative(const eigenform::EigenformTable& table,
                                 const DerivCaches& dc, u64 d,
                                 double tol = 1e-9) {
    auto f = [&](const kernel::KernelCache& cp, const kernel::KernelCache& cm,
                 double al) {
        TwistPoint pt{d, cplx(al, 0.0), dc.kappa};
        return central_value(table, cp, cm, pt, tol).value.real();
    };
    double h = dc.h;
    double D1 = (f(dc.p_h, dc.m_h, h) - f(dc.m_h, dc.p_h, -h)) / (2.0 * h);
    double D2 =
        (f(dc.p_h2, dc.m_h2, 0.5 * h) - f(dc.m_h2, dc.p_h2, -0.5 * h)) / h;
    return (4.0 * D2 - D1) / 3.0;
}

// cache-free variant (per-term kernel evaluation; small d only)
inline double central_derivative_direct(const eigenform::EigenformTable& table,
                                        int kappa, u64 d, double h = 1e-3,
                                        double tol = 1e-9) {
    auto f = [&](double al) {
        return central_value_direct(table, TwistPoint{d, cplx(al, 0.0), kappa},
                                    tol)
            .value.real();
    };
    double D1 = (f(h) - f(-h)) / (2.0 * h);
    double D2 = (f(0.5 * h) - f(-0.5 * h)) / h;
    return (4.0 * D2 - D1) / 3.0;
}

// Analytic route:
//   L'(0) = (1 - i^kappa) S'(0) - 2 i^kappa [ln(q/2pi) + psi(kappa/2)] S(0),
//   S'(0) = sum lambda chi n^{-1/2} ( -ln n omega_0(n/q) + omega'(n/q) ),
// with omega' the alpha-differentiated kernel.
inline double central_derivative_analytic(const eigenform::EigenformTable& table,
                                          int kappa, u64 d, double tol = 1e-9) {
    const double q = 8.0 * (double)d;
    auto tr = detail::afe_truncation(kappa, 0.0, kernel::GTag::narrow, q,
                                     0.5 * tol);
    if (tr.n_stop > table.n_max) throw TableTooShort(tr.n_stop);
    const i64 eightd = (i64)(8 * d);
    double S0 = 0.0, S1 = 0.0;
    for (u64 n = 1; n <= tr.n_stop; ++n) {
        int chi = arith::kronecker(eightd, (i64)n);
        if (chi == 0) continue;
        double lam = table.lam[n - 1];
        if (lam == 0.0) continue;
        double ln_n = std::log((double)n);
        double base = chi * lam / std::sqrt((double)n);
        double xi = (double)n / q;
        double om0 = kernel::omega_narrow_fast(kappa, 0.0, xi).real();
        double omd =
            kernel::omega_kernel(kappa, 0.0, kernel::GTag::narrow, xi, true)
                .real();
        S0 += base * om0;
        S1 += base * (-ln_n * om0 + omd);
    }
    double ik = i_pow(kappa);
    double psih = special::digamma(cplx(0.5 * kappa, 0.0)).real();
    return (1.0 - ik) * S1 -
           2.0 * ik * (std::log(q / (2.0 * pi)) + psih) * S0;
}

// Both derivative routes, cross-checked; throws on disagreement (stale
// kernel caches or truncation defects).
inline double central_derivative_checked(const eigenform::EigenformTable& table,
                                         int kappa, u64 d, double h = 1e-3) {
    double dr = central_derivative_direct(table, kappa, d, h);
    double an = central_derivative_analytic(table, kappa, d);
    if (std::abs(dr - an) > 1e-6 * std::max(1.0, std::abs(an)))
        throw std::runtime_error(
            "central_derivative_checked: route disagreement " +
            std::to_string(std::abs(dr - an)));
    return dr;
}

}  // namespace qtml::lfun
