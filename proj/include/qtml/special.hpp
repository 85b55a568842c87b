// Gamma, digamma and zeta evaluators used by the kernel and Euler-product
// machinery. Gamma is Lanczos with reflection; zeta is Euler-Maclaurin with
// the functional equation on the far left half-plane (|Im s| <= 200, s != 1).
#pragma once

#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>
#include <vector>

namespace qtml::special {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

namespace detail {

// Lanczos g = 7, 9 terms.
inline constexpr double lanczos_g = 7.0;
inline constexpr double lanczos_c[9] = {
    0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
    771.32342877765313,     -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};

inline cplx log_gamma_positive(cplx s) {
    // valid for Re(s) > 0.5
    s -= 1.0;
    cplx x = lanczos_c[0];
    for (int i = 1; i < 9; ++i) x += lanczos_c[i] / (s + (double)i);
    cplx t = s + lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * pi) + (s + 0.5) * std::log(t) - t + std::log(x);
}

inline constexpr double bern2k[13] = {
    0.0,                    // unused
    1.0 / 6.0,              -1.0 / 30.0,          1.0 / 42.0,
    -1.0 / 30.0,            5.0 / 66.0,           -691.0 / 2730.0,
    7.0 / 6.0,              -3617.0 / 510.0,      43867.0 / 798.0,
    -174611.0 / 330.0,      854513.0 / 138.0,     -236364091.0 / 2730.0};

}  // namespace detail

inline cplx log_gamma(cplx s) {
    if (s.real() >= 0.5) return detail::log_gamma_positive(s);
    // reflection: Gamma(s)Gamma(1-s) = pi / sin(pi s)
    cplx lg = std::log(pi / std::sin(pi * s)) - detail::log_gamma_positive(1.0 - s);
    return lg;
}

inline cplx gamma(cplx s) {
    if (s.imag() == 0.0 && s.real() <= 0.0 && s.real() == std::floor(s.real()))
        throw std::domain_error("gamma: pole at non-positive integer");
    if (s.real() < 0.5) {
        double dist = std::abs(s - std::round(s.real()));
        if (s.imag() == 0.0 && dist < 1e-8)
            throw std::domain_error("gamma: argument too close to pole");
        return pi / (std::sin(pi * s) * std::exp(detail::log_gamma_positive(1.0 - s)));
    }
    return std::exp(detail::log_gamma_positive(s));
}

inline cplx digamma(cplx s) {
    if (s.imag() == 0.0 && s.real() <= 0.0 && std::abs(s - std::round(s.real())) < 1e-8)
        throw std::domain_error("digamma: pole");
    cplx acc = 0.0;
    // reflection for far-left arguments
    if (s.real() < 0.0) {
        acc -= pi / std::tan(pi * s);
        s = 1.0 - s;
    }
    while (s.real() < 10.0) {
        acc -= 1.0 / s;
        s += 1.0;
    }
    cplx inv = 1.0 / s, inv2 = inv * inv;
    cplx r = std::log(s) - 0.5 * inv;
    cplx p = inv2;
    for (int k = 1; k <= 8; ++k) {
        r -= detail::bern2k[k] / (2.0 * k) * p;
        p *= inv2;
    }
    return acc + r;
}

namespace detail {

// log(sin z) stable for large |Im z| (avoids overflow of sin itself).
inline cplx log_sin(cplx z) {
    const cplx i(0.0, 1.0);
    if (z.imag() > 20.0) return -i * z - std::log(cplx(0.0, -2.0));
    if (z.imag() < -20.0) return i * z - std::log(cplx(0.0, 2.0));
    return std::log(std::sin(z));
}

}  // namespace detail

// Euler-Maclaurin zeta for Re(s) > -5; functional equation to the left.
// Validated for |Im(s)| <= 200, s != 1.
inline cplx zeta(cplx s) {
    if (std::abs(s - 1.0) < 1e-10) throw std::domain_error("zeta: pole at s=1");
    if (std::abs(s.imag()) > 200.0)
        throw std::domain_error("zeta: outside validated region");
    if (s.real() < -5.0) {
        // zeta(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s) zeta(1-s), in log space
        cplx lg = s * std::log(2.0) + (s - 1.0) * std::log(pi) +
                  detail::log_sin(0.5 * pi * s) + log_gamma(1.0 - s);
        return std::exp(lg) * zeta(1.0 - s);
    }
    const int M = 30 + (int)std::abs(s.imag());
    const int K = 12;
    // compensated summation: downstream contour integrals amplify the
    // roundoff of this partial sum by large cancellation factors
    cplx sum = 0.0, comp = 0.0;
    for (int n = 1; n < M; ++n) {
        cplx y = std::exp(-s * std::log((double)n)) - comp;
        cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    cplx mPow = std::exp((1.0 - s) * std::log((double)M));
    sum += mPow / (s - 1.0);
    sum += 0.5 * std::exp(-s * std::log((double)M));
    // correction terms B_{2k}/(2k)! * s(s+1)...(s+2k-2) * M^{-s-2k+1}
    cplx rising = s;  // s(s+1)...(s+2k-2), built incrementally
    cplx mfac = std::exp((-s - 1.0) * std::log((double)M));
    double fact = 2.0;  // (2k)!
    for (int k = 1; k <= K; ++k) {
        sum += detail::bern2k[k] / fact * rising * mfac;
        rising *= (s + (double)(2 * k - 1)) * (s + (double)(2 * k));
        mfac /= (double)M * (double)M;
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
}

inline double zeta_real(double s) {
    if (s <= 1.0) throw std::domain_error("zeta_real: requires s > 1");
    return zeta(cplx(s, 0.0)).real();
}

// zeta with Euler factors at the given primes removed.
inline double zeta_restricted(double s, const std::vector<std::uint64_t>& excluded) {
    double z = zeta_real(s);
    std::set<std::uint64_t> seen;
    for (auto p : excluded) {
        if (!seen.insert(p).second) continue;
        z *= 1.0 - std::pow((double)p, -s);
    }
    return z;
}

}  // namespace qtml::special
