// Quadratic Gauss-type sums
//   G_k(n) = ((1-i)/2 + (-1|n)(1+i)/2) * sum_{a mod n} (a|n) e(ak/n)
// for odd n: a direct O(n) oracle and the multiplicative closed form built
// from the per-prime-power case table. With this normalization every value
// is real.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "qtml/arith.hpp"
#include "qtml/window.hpp"

namespace qtml::gauss {

using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr double pi = 3.14159265358979323846;

struct GaussSumValue {
    i64 k = 0;
    u64 n = 1;
    cplx value{};
    enum class Route { closed_form, brute_force } route = Route::closed_form;
};

// direct summation oracle
inline cplx gauss_sum_brute(i64 k, u64 n) {
    if (n == 0 || n % 2 == 0)
        throw std::invalid_argument("gauss_sum_brute: n must be odd positive");
    if (n > 100000)
        throw std::invalid_argument("gauss_sum_brute: oracle scale is n <= 1e5");
    cplx s = 0.0;
    for (u64 a = 0; a < n; ++a) {
        int chi = arith::kronecker((i64)a, (i64)n);
        if (chi == 0) continue;
        double th = 2.0 * pi * (double)((i64)a * (k % (i64)n)) / (double)n;
        s += (double)chi * cplx(std::cos(th), std::sin(th));
    }
    int m1 = arith::kronecker(-1, (i64)n);
    cplx pref = 0.5 * (cplx(1.0, -1.0) + (double)m1 * cplx(1.0, 1.0));
    return pref * s;
}

namespace detail {

// G_k(p^beta) for odd prime p, via the five-case table with a = v_p(k)
// (a = infinity when k = 0, so only the parity-of-beta branches fire).
inline double prime_power_value(i64 k, u64 p, unsigned beta) {
    unsigned a = 0;
    i64 kp = k;
    bool inf = (k == 0);
    if (!inf)
        while (kp % (i64)p == 0) {
            kp /= (i64)p;
            ++a;
        }
    auto phi_pb = [&](unsigned b) {
        if (b == 0) return 1.0;
        double v = 1.0;
        for (unsigned i = 1; i < b; ++i) v *= (double)p;
        return v * ((double)p - 1.0);
    };
    auto pow_pa = [&](unsigned e) {
        double v = 1.0;
        for (unsigned i = 0; i < e; ++i) v *= (double)p;
        return v;
    };
    if (inf || beta <= a) return beta % 2 ? 0.0 : phi_pb(beta);
    if (beta == a + 1) {
        if (beta % 2 == 0) return -pow_pa(a);
        return (double)arith::kronecker(kp, (i64)p) * pow_pa(a) * std::sqrt((double)p);
    }
    return 0.0;  // beta >= a+2
}

}  // namespace detail

// closed form via multiplicativity over the prime factorization of n
inline GaussSumValue gauss_sum(i64 k, u64 n) {
    if (n == 0 || n % 2 == 0)
        throw std::invalid_argument("gauss_sum: n must be odd positive");
    double v = 1.0;
    for (const auto& [p, e] : arith::factorize(n).factors)
        v *= detail::prime_power_value(k, p, (unsigned)e);
    return {k, n, cplx(v, 0.0), GaussSumValue::Route::closed_form};
}

struct PoissonCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double defect = 0.0;
    double tail_bound = 0.0;
    long terms_lhs = 0;
    long terms_rhs = 0;
};

// Verifies the Poisson-summation identity
//   sum_{d odd} (d|n) Phi(d/Z)
//     = (Z/2n) (2|n) sum_{k in Z} (-1)^k G_k(n) Fhat(kZ/2n)
// with Fhat the cosine+sine transform of Phi. Both sides are computed
// independently; the k-sum is truncated at |k| <= K with an explicit tail
// estimate (|G_k(n)| <= n, transform sampled beyond the cutoff).
inline PoissonCheck poisson_check(const window::WindowSpec& w, u64 n, double Z,
                                  int K) {
    if (n % 2 == 0) throw std::invalid_argument("poisson_check: n must be odd");
    if (Z <= 0.0) throw std::invalid_argument("poisson_check: Z > 0 required");
    PoissonCheck r;
    // left side: d runs over odd integers with d/Z inside the window support
    i64 d_lo = (i64)std::floor(w.x_lo * Z), d_hi = (i64)std::ceil(w.x_hi * Z);
    for (i64 d = d_lo | 1; d <= d_hi; d += 2) {
        double ph = w((double)d / Z);
        if (ph != 0.0) {
            r.lhs += arith::kronecker(d, (i64)n) * ph;
            ++r.terms_lhs;
        }
    }
    // right side
    double pref = Z / (2.0 * (double)n) * arith::kronecker(2, (i64)n);
    double s = gauss_sum(0, n).value.real() * window::fourier_type(w, 0.0);
    ++r.terms_rhs;
    for (int k = 1; k <= K; ++k) {
        double ft_p = window::fourier_type(w, k * Z / (2.0 * (double)n));
        double ft_m = window::fourier_type(w, -k * Z / (2.0 * (double)n));
        double sgn = k % 2 ? -1.0 : 1.0;
        s += sgn * (gauss_sum(k, n).value.real() * ft_p +
                    gauss_sum(-k, n).value.real() * ft_m);
        r.terms_rhs += 2;
    }
    r.rhs = pref * s;
    // tail estimate: |G_k(n)| <= n and the transform decays superpolynomially
    double tail = 0.0;
    for (int k = K + 1; k <= K + 10; ++k) {
        double y = k * Z / (2.0 * (double)n);
        tail += 2.0 * (double)n *
                std::abs(window::fourier_type(w, y, 1e-13));
    }
    r.tail_bound = std::abs(pref) * tail;
    if (r.tail_bound >= 1e-8)
        throw std::runtime_error(
            "poisson_check: truncation K insufficient (tail estimate " +
            std::to_string(r.tail_bound) + ")");
    r.defect = std::abs(r.lhs - r.rhs);
    return r;
}

}  // namespace qtml::gauss
