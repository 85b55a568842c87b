// Euler products and local factors of the moment main terms:
//   - the symmetric-square L-function L(s, sym^2 f) (Euler product and a
//     smoothed functional-equation series),
//   - the local factors E1/E2/E3 and the product Z(1/2+gamma, ell),
//   - the zeta-ratio acceleration Z^N,
//   - the arithmetic factor A(gamma, a, ell),
//   - identity checkers for the local-factor inversion, the Z1 diagonal
//     series, the Z2 Gauss-sum factorization, and the per-prime H-sum
//     identity.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtml/arith.hpp"
#include "qtml/eigenform.hpp"
#include "qtml/gauss.hpp"
#include "qtml/quadrature.hpp"
#include "qtml/special.hpp"

namespace qtml::euler {

using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr double pi = 3.14159265358979323846;

// ------------------------------------------------------------------
// Context: twist index ell = ell1 * ell2^2 with ell1 squarefree, prime
// cutoff for the absolutely convergent ratio products, acceleration depth.
// ------------------------------------------------------------------
struct EulerContext {
    const eigenform::EigenformTable* table = nullptr;
    u64 ell = 1, ell1 = 1, ell2 = 1;
    u64 prime_cutoff = 100000;
    unsigned accel_depth = 0;

    EulerContext(const eigenform::EigenformTable& t, u64 l,
                 u64 cutoff = 100000, unsigned depth = 0)
        : table(&t), ell(l), prime_cutoff(cutoff), accel_depth(depth) {
        if (l == 0 || l % 2 == 0)
            throw std::invalid_argument("EulerContext: ell must be odd positive");
        auto [l1, l2] = arith::split_squarefree(l);
        ell1 = l1;
        ell2 = l2;
        if (cutoff < 3)
            throw std::invalid_argument("EulerContext: prime cutoff too small");
        for (const auto& [p, e] : arith::factorize(l).factors)
            if (p > cutoff)
                throw std::invalid_argument(
                    "EulerContext: prime cutoff below largest prime of ell");
        if (cutoff > arith::prime_sieve::limit)
            throw std::invalid_argument(
                "EulerContext: prime cutoff beyond sieve range");
        if (t.n_max < cutoff)
            throw std::invalid_argument(
                "EulerContext: eigenform table shorter than prime cutoff");
    }
};

// ------------------------------------------------------------------
// Local factors E1/E2/E3 of the Z_p case table.
// With x = lambda(p) p^{-1/2-gamma}, y = p^{-1-2gamma} and the bracket
// inverses A∓ = (1 ∓ x + y)^{-1}:
//   E1 = p^{1/2+gamma} (p/(p+1)) (A- - A+)/2        [p | ell1]
//   E2 = (p/(p+1)) (A- + A+)/2                      [p ∤ ell1, p | ell2]
//   E3 = 1 + (p/(p+1)) ((A- + A+)/2 - 1)            [(p, 2 ell) = 1]
// ------------------------------------------------------------------
struct LocalFactorTriple {
    u64 p = 3;
    cplx gamma{};
    cplx e1{}, e2{}, e3{};
};

inline LocalFactorTriple local_triple(const eigenform::EigenformTable& t,
                                      u64 p, cplx gamma) {
    if (p < 3 || !arith::prime_sieve::instance().is_prime(p))
        throw std::invalid_argument("local_triple: p must be an odd prime");
    double lam = t.lambda(p);
    double lp = std::log((double)p);
    cplx x = lam * std::exp(-(0.5 + gamma) * lp);
    cplx y = std::exp(-(1.0 + 2.0 * gamma) * lp);
    cplx am = 1.0 / (1.0 - x + y), ap = 1.0 / (1.0 + x + y);
    double pref = (double)p / ((double)p + 1.0);
    LocalFactorTriple r;
    r.p = p;
    r.gamma = gamma;
    r.e1 = std::exp((0.5 + gamma) * lp) * pref * 0.5 * (am - ap);
    r.e2 = pref * 0.5 * (am + ap);
    r.e3 = 1.0 + pref * (0.5 * (am + ap) - 1.0);
    return r;
}

// Z_p(1/2+gamma, ell): case routing of the three displayed factors.
inline cplx local_Z_factor(const EulerContext& ctx, u64 p, cplx gamma) {
    if (p == 2) throw std::invalid_argument("local_Z_factor: p = 2 rejected");
    LocalFactorTriple tr = local_triple(*ctx.table, p, gamma);
    if (ctx.ell1 % p == 0) return tr.e1;
    if (ctx.ell2 % p == 0) return tr.e2;
    return tr.e3;
}

namespace detail {

// Local factor of L(s, sym^2 f) at p: with Satake pair a+b = lambda(p),
// ab = 1, the factor is [(1-a^2 p^{-s})(1-b^2 p^{-s})(1-p^{-s})]^{-1}
// = [(1 - (lambda^2-2) p^{-s} + p^{-2s})(1 - p^{-s})]^{-1}.
inline cplx sym2_local_L(double lam, u64 p, cplx s) {
    cplx u = std::exp(-s * std::log((double)p));
    return 1.0 / ((1.0 - (lam * lam - 2.0) * u + u * u) * (1.0 - u));
}

// Prime zeta function P(s) = sum_p p^{-s} for Re s > 1 + margin,
// via P(s) = sum_{k>=1} mu(k)/k * log zeta(ks).
inline cplx prime_zeta(cplx s) {
    if (s.real() < 1.2)
        throw std::invalid_argument("prime_zeta: Re s >= 1.2 required");
    cplx acc = 0.0;
    for (int k = 1; k <= 64; ++k) {
        int mu = arith::mobius((u64)k);
        if (mu == 0) continue;
        cplx term = ((double)mu / (double)k) * std::log(special::zeta(s * (double)k));
        acc += term;
        if (std::abs(term) < 1e-19 && k > 2) break;
    }
    return acc;
}

// sum_{p > P} log(1 - p^{-s}), given the partial power sums
// S_j = sum_{p <= P} p^{-js} for j = 1..3.  Orders j >= 4 are below
// 1e-19 for Re s >= 2 and P >= 50.
inline cplx tail_log_one_minus(cplx s, const cplx partial[3]) {
    cplx acc = 0.0;
    for (int j = 1; j <= 3; ++j) {
        cplx full = prime_zeta(s * (double)j);
        acc -= (full - partial[j - 1]) / (double)j;
    }
    return acc;
}

// Per-prime ratio Z_p / L_p(1+2gamma, sym^2 f); equals 1 + O(p^{-2})
// for (p, 2 ell) = 1.
inline cplx zp_over_lp(const EulerContext& ctx, u64 p, cplx gamma) {
    cplx zp = local_Z_factor(ctx, p, gamma);
    return zp / sym2_local_L(ctx.table->lambda(p), p, 1.0 + 2.0 * gamma);
}

struct ZPartial {
    cplx value{};        // truncated (optionally compensated) product
    double tail_estimate = 0.0;
};

// Core product for Z and its accelerated variants.  Computes
//   [1/L_2(1+2gamma, sym^2)] * prod_{odd p <= P} Z_p/L_p
// times, for depth N > 0, the zeta-ratio factors (1-p^{-sN})/(1-p^{-s0})
// (including p = 2), i.e. the Z^N Euler product of the acceleration lemma.
// When `compensate` is set, the deterministic tail model
// prod_{p > P} (1 - p^{-sN}) is appended via the prime zeta function; the
// remaining error is the lambda-fluctuation part, estimated empirically
// from the signed sum over the last octave of primes.
inline ZPartial zn_partial(const EulerContext& ctx, cplx gamma, unsigned N,
                           u64 P, bool compensate) {
    if (gamma.real() < -0.2)
        throw std::invalid_argument(
            "zn_partial: Re gamma >= -0.2 required (continuation further "
            "left is out of scope)");
    if (N > 8) throw std::invalid_argument("zn_partial: depth too large");
    cplx s0 = 2.0 + 4.0 * gamma;
    cplx sN = (double)(1ull << (N + 1)) + (double)(1ull << (N + 2)) * gamma;

    const auto& primes = arith::prime_sieve::instance().primes();
    cplx prod = 1.0 / sym2_local_L(ctx.table->lambda(2), 2, 1.0 + 2.0 * gamma);
    cplx partial[3] = {0.0, 0.0, 0.0};
    {
        cplx t2 = std::exp(-sN * std::log(2.0));
        if (N > 0)
            prod *= (1.0 - t2) / (1.0 - std::exp(-s0 * std::log(2.0)));
        partial[0] += t2;
        partial[1] += t2 * t2;
        partial[2] += t2 * t2 * t2;
    }
    cplx fluct_octave = 0.0;
    for (u64 p : primes) {
        if (p == 2) continue;
        if (p > P) break;
        cplx r = zp_over_lp(ctx, p, gamma);
        cplx tN = std::exp(-sN * std::log((double)p));
        if (N > 0) r *= (1.0 - tN) / (1.0 - std::exp(-s0 * std::log((double)p)));
        prod *= r;
        partial[0] += tN;
        partial[1] += tN * tN;
        partial[2] += tN * tN * tN;
        if (2 * p > P && ctx.ell % p != 0)
            fluct_octave += r / (1.0 - tN) - 1.0;
    }
    ZPartial out;
    out.value = prod;
    if (compensate) out.value *= std::exp(tail_log_one_minus(sN, partial));
    // Error model: the deterministic tail is either compensated (above) or
    // of size ~ sum_{p>P} p^{-Re sN}; the fluctuating remainder behaves like
    // the last-octave signed sum continued as a random walk.  Both pieces
    // are estimates, not certified bounds.
    double lp = std::log((double)P);
    double det_tail =
        compensate ? 0.0
                   : std::pow((double)P, 1.0 - sN.real()) /
                         ((sN.real() - 1.0) * lp);
    out.tail_estimate = det_tail + 10.0 * std::abs(fluct_octave);
    return out;
}

}  // namespace detail

struct ZProductInfo {
    cplx value{};
    double tail_estimate = 0.0;
};

// Z(1/2+gamma, ell): the product prod_{(p,2)=1} Z_p divided by
// L(1+2gamma, sym^2 f), computed as the absolutely convergent per-prime
// ratio product with deterministic tail compensation.
inline ZProductInfo Z_product_info(const EulerContext& ctx, cplx gamma) {
    auto z = detail::zn_partial(ctx, gamma, 0, ctx.prime_cutoff, true);
    ZProductInfo r{z.value, z.tail_estimate};
    if (!(r.tail_estimate < 1e-6 * std::max(1.0, std::abs(r.value)))) {
        throw std::runtime_error(
            "Z_product: prime cutoff " + std::to_string(ctx.prime_cutoff) +
            " insufficient (tail estimate " + std::to_string(r.tail_estimate) +
            "); suggest P >= " + std::to_string(4 * ctx.prime_cutoff));
    }
    return r;
}

inline cplx Z_product(const EulerContext& ctx, cplx gamma) {
    return Z_product_info(ctx, gamma).value;
}

// Raw truncated product without tail compensation (used to measure
// convergence rates of the acceleration).
inline cplx Z_product_raw(const EulerContext& ctx, cplx gamma, unsigned N,
                          u64 P) {
    cplx s0 = 2.0 + 4.0 * gamma;
    cplx sN = (double)(1ull << (N + 1)) + (double)(1ull << (N + 2)) * gamma;
    cplx zn = detail::zn_partial(ctx, gamma, N, P, false).value;
    return std::exp(std::log(special::zeta(sN)) - std::log(special::zeta(s0))) * zn;
}

// Z via the acceleration lemma: Z = [zeta(sN)/zeta(s0)] Z^N with
// sN = 2^{N+1} + 2^{N+2} gamma, s0 = 2 + 4 gamma; N = 0 reduces to
// Z_product exactly.
inline cplx ZN_accelerated(const EulerContext& ctx, cplx gamma, unsigned N) {
    cplx s0 = 2.0 + 4.0 * gamma;
    cplx sN = (double)(1ull << (N + 1)) + (double)(1ull << (N + 2)) * gamma;
    if (sN.real() < 1.5)
        throw std::invalid_argument("ZN_accelerated: outside analytic region");
    auto zn = detail::zn_partial(ctx, gamma, N, ctx.prime_cutoff, true);
    return special::zeta(sN) / special::zeta(s0) * zn.value;
}

// ------------------------------------------------------------------
// Arithmetic factor
//   A(gamma, a, ell) = prod_{p|ell1} E1 * prod_{p∤ell1, p|ell2} E2
//                      * prod_{(p,2a ell)=1} (E3 + 1/(p^2-1)).
// The generic factor is 1 + O(p^{-1-2 Re gamma}) + O(p^{-2}); requires
// Re gamma >= 0.4 for the stated tail estimate to be meaningful.
// ------------------------------------------------------------------
struct AProductInfo {
    cplx value{};
    double tail_estimate = 0.0;
};

inline AProductInfo A_product(const EulerContext& ctx, u64 a, cplx gamma) {
    if (a == 0 || std::gcd(a, 2 * ctx.ell) != 1)
        throw std::invalid_argument("A_product: need gcd(a, 2 ell) = 1");
    if (gamma.real() < 0.4)
        throw std::invalid_argument("A_product: Re gamma >= 0.4 required");
    const auto& primes = arith::prime_sieve::instance().primes();
    cplx prod = 1.0;
    double last_c = 0.0;
    for (u64 p : primes) {
        if (p == 2) continue;
        if (p > ctx.prime_cutoff) break;
        LocalFactorTriple tr = local_triple(*ctx.table, p, gamma);
        cplx f;
        if (ctx.ell1 % p == 0)
            f = tr.e1;
        else if (ctx.ell2 % p == 0)
            f = tr.e2;
        else if (a % p == 0)
            continue;
        else
            f = tr.e3 + 1.0 / ((double)p * (double)p - 1.0);
        prod *= f;
        if (2 * p > ctx.prime_cutoff && ctx.ell % p != 0)
            last_c = std::max(last_c,
                              std::abs(f - 1.0) * (double)p * (double)p);
    }
    double P = (double)ctx.prime_cutoff;
    return {prod, 10.0 * last_c / (P * std::log(P))};
}

// ------------------------------------------------------------------
// Symmetric-square L-function.
// Gamma factor (conductor 1, root number +1):
//   gamma(s) = Gamma_R(s+1) Gamma_C(s+kappa-1),  Lambda(s) = gamma(s) L(s),
//   Lambda(s) = Lambda(1-s).
// ------------------------------------------------------------------
enum class SymSquareMethod { euler_product, smoothed_series };

struct SymSquareValue {
    double value = 0.0;
    double err_estimate = 0.0;
};

namespace detail {

inline cplx sym2_log_gamma_factor(int kappa, cplx z) {
    return special::log_gamma(0.5 * (z + 1.0)) -
           0.5 * (z + 1.0) * std::log(pi) +
           special::log_gamma(z + (double)kappa - 1.0) -
           (z + (double)kappa - 1.0) * std::log(2.0 * pi);
}

// Dirichlet coefficients of L(s, sym^2 f) = zeta(2s) sum lambda(n^2) n^{-s}:
// multiplicative with c(p^e) = sum_{2i <= e} lambda(p^{2(e-2i)}).
inline std::vector<double> sym2_coeffs(const eigenform::EigenformTable& t,
                                       u64 N) {
    if (N > arith::prime_sieve::limit)
        throw std::invalid_argument("sym2_coeffs: N beyond sieve range");
    const auto& sieve = arith::prime_sieve::instance();
    std::vector<double> c(N + 1, 0.0);
    if (N >= 1) c[1] = 1.0;
    for (u64 n = 2; n <= N; ++n) {
        u64 p = sieve.smallest_factor(n);
        u64 m = n;
        int e = 0;
        while (m % p == 0) {
            m /= p;
            ++e;
        }
        double cp = 0.0;
        for (int i = 0; 2 * i <= e; ++i)
            cp += eigenform::hecke_extend(t, p, 2 * (e - 2 * i));
        c[n] = cp * c[m];
    }
    return c;
}

// Smoothing kernel
//   V_z(n) = (1/2 pi i) int G(w) [gamma(z+w)/gamma(z)] n^{-w} dw/w,
// with G(w) = exp(w^2/16), on the line Re w = c, reduced to t in [0, T]
// by conjugate symmetry.  The mild Gaussian lets the contour rise to
// c ~ 16 before exp(c^2/16) overwhelms the n^{-c} decay, so the series
// localizes after O(100) terms; the vertical decay combines
// exp(-t^2/16) with the exponential falloff of the Gamma factors.
// Nodes and w-dependent coefficients are precomputed so each V_z(n) is
// a short sum of complex exponentials.
inline constexpr double sym2_g_width = 16.0;

struct VKernel {
    std::vector<cplx> w, coef;

    cplx eval(double ln_n) const {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            acc += coef[i] * std::exp(-w[i] * ln_n);
        return acc;
    }
};

// full-line quadrature (t in [-T, T]) so complex z works; for real z the
// imaginary part cancels to quadrature noise
inline VKernel make_vkernel(int kappa, cplx z, double c, cplx lg0) {
    const double T = 12.0;
    const int panels = 20, order = 16;
    const auto& rule = quad::gauss_legendre(order);
    VKernel k;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double a = -T + 2.0 * T * pnl / panels;
        double b = -T + 2.0 * T * (pnl + 1) / panels;
        for (int j = 0; j < order; ++j) {
            double t = 0.5 * (a + b) + 0.5 * (b - a) * rule.x[j];
            double wt = 0.5 * (b - a) * rule.w[j];
            cplx w(c, t);
            cplx val = std::exp(w * w / sym2_g_width +
                                sym2_log_gamma_factor(kappa, z + w) - lg0) /
                       w;
            k.w.push_back(w);
            k.coef.push_back(wt / (2.0 * pi) * val);
        }
    }
    return k;
}

struct Sym2AFE {
    static constexpr double ladder[5] = {1.5, 4.0, 7.0, 11.0, 16.0};

    int kappa;
    cplx s;
    cplx lg_s;  // log gamma factor at s; both kernels are normalized by it,
                // so the dual-term prefactor gamma(1-s)/gamma(s) (singular
                // at poles of gamma(1-s)) never appears on its own.
    double env_s[5], env_1s[5];  // log-envelope constants per contour
    std::map<int, VKernel> ks, k1s;  // keyed by contour index

    Sym2AFE(int kap, cplx s_) : kappa(kap), s(s_) {
        lg_s = sym2_log_gamma_factor(kappa, s);
        for (int i = 0; i < 5; ++i) {
            double c = ladder[i];
            env_s[i] = c * c / sym2_g_width +
                       (sym2_log_gamma_factor(kappa, s + c) - lg_s).real() -
                       std::log(c);
            env_1s[i] =
                c * c / sym2_g_width +
                (sym2_log_gamma_factor(kappa, 1.0 - s + c) - lg_s).real() -
                std::log(c);
            if (!std::isfinite(env_s[i])) env_s[i] = 1e18;
            if (!std::isfinite(env_1s[i])) env_1s[i] = 1e18;
        }
    }

    // index minimizing the contour envelope exp(env_i - c_i ln n)
    static int best(const double env[5], double ln_n) {
        int arg = 0;
        double b = env[0] - ladder[0] * ln_n;
        for (int i = 1; i < 5; ++i) {
            double v = env[i] - ladder[i] * ln_n;
            if (v < b) { b = v; arg = i; }
        }
        return arg;
    }

    static double envelope(const double env[5], double ln_n) {
        int i = best(env, ln_n);
        return std::exp(env[i] - ladder[i] * ln_n);
    }

    cplx v(std::map<int, VKernel>& cache, cplx z, const double env[5],
           double n) {
        int idx = best(env, std::log(n));
        auto it = cache.find(idx);
        if (it == cache.end())
            it = cache.emplace(idx,
                               make_vkernel(kappa, z, ladder[idx], lg_s))
                     .first;
        return it->second.eval(std::log(n));
    }

    cplx v_s(double n) { return v(ks, s, env_s, n); }
    // dual-term kernel X(s) V_{1-s}(n), already folded together
    cplx v_dual(double n) { return v(k1s, 1.0 - s, env_1s, n); }
};

struct SymSquareCplx {
    cplx value{};
    double err_estimate = 0.0;
};

inline SymSquareCplx sym2_afe_c(const eigenform::EigenformTable& t, cplx s,
                                double tol) {
    if (s.real() <= 0.0 || s.real() >= (double)t.kappa - 1.0)
        throw std::invalid_argument("sym2_afe: Re s out of range");
    Sym2AFE afe(t.kappa, s);
    const double sr = s.real();
    u64 have = 512;
    std::vector<double> c = sym2_coeffs(t, have);
    cplx acc = 0.0;
    const u64 n_cap = 100000;
    for (u64 n = 1;; ++n) {
        if (n > n_cap)
            throw std::runtime_error("sym2_afe: series did not localize");
        if (n > have) {
            have = std::min(n_cap, 2 * have);
            c = sym2_coeffs(t, have);
        }
        double ln_n = std::log((double)n);
        cplx a1 = std::exp(-s * ln_n) * afe.v_s((double)n);
        cplx a2 = std::exp((s - 1.0) * ln_n) * afe.v_dual((double)n);
        acc += c[n] * (a1 + a2);
        // monotone stop rule on the contour envelopes (the summand itself
        // oscillates): the n^{1.35} margin covers the 3-dimensional divisor
        // bound |c(n)| <= d_3(n) and the tail-vs-term ratio at this decay.
        double env_term =
            Sym2AFE::envelope(afe.env_s, ln_n) * std::pow((double)n, -sr) +
            Sym2AFE::envelope(afe.env_1s, ln_n) *
                std::pow((double)n, sr - 1.0);
        if (n >= 16 && env_term * std::pow((double)n, 1.35) < 0.2 * tol)
            return {acc, 10.0 * env_term * (double)n};
    }
}

inline SymSquareValue sym2_afe(const eigenform::EigenformTable& t, double s,
                               double tol) {
    auto r = sym2_afe_c(t, cplx(s, 0.0), tol);
    return {r.value.real(), r.err_estimate};
}

inline SymSquareValue sym2_euler(const eigenform::EigenformTable& t, double s,
                                 u64 P) {
    // For s > 1 the product converges absolutely; at s near 1 convergence is
    // conditional (sign cancellation in lambda(p)^2 - 1) and the returned
    // error is an empirical stabilization estimate, not a bound.
    if (s <= 0.55)
        throw std::invalid_argument("sym2_euler: s > 0.55 required");
    if (P > arith::prime_sieve::limit || t.n_max < P)
        throw std::invalid_argument("sym2_euler: cutoff out of range");
    const auto& primes = arith::prime_sieve::instance().primes();
    double prod = 1.0, half = 1.0;
    for (u64 p : primes) {
        if (p > P) break;
        prod *= sym2_local_L(t.lambda(p), p, s).real();
        if (2 * p <= P) half = prod;
    }
    return {prod, 10.0 * std::abs(prod - half)};
}

}  // namespace detail

inline SymSquareValue sym_square_L_full(const eigenform::EigenformTable& t,
                                        double s, SymSquareMethod method,
                                        u64 P = 100000, double tol = 1e-9) {
    if (method == SymSquareMethod::euler_product)
        return detail::sym2_euler(t, s, P);
    return detail::sym2_afe(t, s, tol);
}

inline double sym_square_L(const eigenform::EigenformTable& t, double s,
                           SymSquareMethod method =
                               SymSquareMethod::smoothed_series) {
    return sym_square_L_full(t, s, method).value;
}

// complex-argument evaluation (smoothed-series route only)
inline cplx sym_square_L_c(const eigenform::EigenformTable& t, cplx s,
                           double tol = 1e-9) {
    return detail::sym2_afe_c(t, s, tol).value;
}

// d/ds L(s, sym^2 f) by order-2 Richardson central differences.
inline double sym_square_L_derivative(const eigenform::EigenformTable& t,
                                      double s, double h = 1e-3) {
    auto d = [&](double hh) {
        return (sym_square_L(t, s + hh) - sym_square_L(t, s - hh)) /
               (2.0 * hh);
    };
    double dh = d(h), dh2 = d(0.5 * h);
    if (std::abs(dh - dh2) > 1e-3 * std::max(1.0, std::abs(dh2)))
        throw std::runtime_error("sym_square_L_derivative: step-halving "
                                 "inconsistency");
    return (4.0 * dh2 - dh) / 3.0;
}

// ------------------------------------------------------------------
// Z*'(0)/... : logarithmic derivative of Z(1/2+gamma, 1) at gamma = 0.
// ------------------------------------------------------------------
inline double Z_star_derivative(const eigenform::EigenformTable& t,
                                u64 P = 100000, double h = 1e-3) {
    EulerContext ctx(t, 1, P);
    auto f = [&](double g) {
        return std::log(Z_product(ctx, cplx(g, 0.0)).real());
    };
    auto d = [&](double hh) { return (f(hh) - f(-hh)) / (2.0 * hh); };
    double dh = d(h), dh2 = d(0.5 * h);
    if (std::abs(dh - dh2) > 1e-3 * std::max(1.0, std::abs(dh2)))
        throw std::runtime_error("Z_star_derivative: step-halving "
                                 "inconsistency");
    return (4.0 * dh2 - dh) / 3.0;
}

// Independent route: complex-step differentiation of log Z at gamma = 0.
inline double Z_star_derivative_complex_step(const eigenform::EigenformTable& t,
                                             u64 P = 10000, double h = 1e-8) {
    EulerContext ctx(t, 1, P);
    cplx z = detail::zn_partial(ctx, cplx(0.0, h), 0, P, true).value;
    return std::log(z).imag() / h;
}

// ------------------------------------------------------------------
// Identity checkers.
// ------------------------------------------------------------------

// Local-factor inversion (Moebius double divisor sum):
//   prod_{p|c} (1 - lambda(p) chi_d(p) p^{-s} + chi_d(p^2) p^{-2s})
//     = sum_{m|c} sum_{n|c} mu(m) mu(mn)^2 lambda(m) chi_d(m) chi_d(n^2)
//       m^{-s} n^{-2s}.
inline double local_inversion_check(const eigenform::EigenformTable& t, u64 c,
                                    i64 d_fund, cplx s) {
    if (c == 0 || c > 10000)
        throw std::invalid_argument("local_inversion_check: c in [1, 1e4]");
    auto fac = arith::factorize(c);
    cplx lhs = 1.0;
    for (const auto& [p, e] : fac.factors) {
        double chi = (double)arith::kronecker(d_fund, (i64)p);
        cplx u = std::exp(-s * std::log((double)p));
        lhs *= 1.0 - t.lambda(p) * chi * u + chi * chi * u * u;
    }
    std::vector<u64> divs{1};
    for (const auto& [p, e] : fac.factors) {
        std::size_t sz = divs.size();
        u64 pe = 1;
        for (int i = 0; i < e; ++i) {
            pe *= p;
            for (std::size_t j = 0; j < sz; ++j) divs.push_back(divs[j] * pe);
        }
    }
    cplx rhs = 0.0;
    for (u64 m : divs) {
        int mu_m = arith::mobius(m);
        if (mu_m == 0) continue;
        for (u64 n : divs) {
            if (arith::mobius(m * n) == 0) continue;  // mu(mn)^2 weight
            double chi_m = (double)arith::kronecker(d_fund, (i64)m);
            double chi_n = (double)arith::kronecker(d_fund, (i64)n);
            rhs += (double)mu_m * t.lambda(m) * chi_m * chi_n * chi_n *
                   std::exp(-s * std::log((double)m)) *
                   std::exp(-2.0 * s * std::log((double)n));
        }
    }
    return std::abs(lhs - rhs);
}

// Z1 diagonal series vs its Euler-product closed form:
//   Z1(1/2+gamma, a, ell) = sum_{(n,2a)=1, ell n = square}
//       lambda(n) n^{-1/2-gamma} phi(ell n)/(ell n)
//     = A(gamma, a, ell) / (ell1^{1/2+gamma} zeta_{2a}(2)).
struct Z1Check {
    cplx series{}, product{};
    double defect = 0.0;
    double series_tail = 0.0, product_tail = 0.0;
};

inline Z1Check Z1_series_vs_product(const EulerContext& ctx, u64 a, cplx gamma,
                                    u64 n_trunc) {
    if (a == 0 || std::gcd(a, 2 * ctx.ell) != 1)
        throw std::invalid_argument(
            "Z1_series_vs_product: need gcd(a, 2 ell) = 1");
    if (gamma.real() < 0.5)
        throw std::invalid_argument(
            "Z1_series_vs_product: Re gamma >= 0.5 required for the series");
    const auto& sieve = arith::prime_sieve::instance();
    // series side: n = ell1 m^2, m odd, gcd(m, a) = 1
    u64 m_max = (u64)std::sqrt((double)n_trunc / (double)ctx.ell1);
    cplx series = 0.0;
    for (u64 m = 1; m <= m_max; m += 2) {
        if (std::gcd(m, a) != 1) continue;
        u64 n = ctx.ell1 * m * m;
        if (n > ctx.table->n_max)
            throw std::invalid_argument(
                "Z1_series_vs_product: eigenform table shorter than n_trunc");
        double lam = ctx.table->lambda(n);
        // phi(ell n)/(ell n) with ell n = (ell1 ell2 m)^2
        double phi_ratio = 1.0;
        u64 k = ctx.ell1 * ctx.ell2 * m;
        while (k > 1) {
            u64 p = k <= arith::prime_sieve::limit
                        ? sieve.smallest_factor(k)
                        : arith::factorize(k).factors.front().first;
            phi_ratio *= 1.0 - 1.0 / (double)p;
            while (k % p == 0) k /= p;
        }
        series += lam * std::exp(-(0.5 + gamma) * std::log((double)n)) *
                  phi_ratio;
    }
    // tail estimate: |lambda(n)| <= d(n), extend the m-sum with the divisor
    // bound over the next decades
    double tail = 0.0;
    for (u64 m = m_max + 1; m <= 64 * m_max; m += 2) {
        double n = (double)ctx.ell1 * (double)m * (double)m;
        double dm = (double)arith::divisor_count(m);
        double dn = (double)arith::divisor_count(ctx.ell1) * dm * dm;
        tail += dn * std::pow(n, -0.5 - gamma.real());
    }
    // product side
    auto A = A_product(ctx, a, gamma);
    std::vector<u64> excl{2};
    for (const auto& [p, e] : arith::factorize(a).factors) excl.push_back(p);
    double zeta_2a = special::zeta_restricted(2.0, excl);
    cplx product = A.value /
                   (std::exp((0.5 + gamma) * std::log((double)ctx.ell1)) *
                    zeta_2a);
    Z1Check r;
    r.series = series;
    r.product = product;
    r.defect = std::abs(series - product);
    r.series_tail = tail;
    r.product_tail = A.tail_estimate;
    return r;
}

// Z2 Gauss-sum factorization:
//   Z2(gamma, a, k, ell) = sum_{(n,2a)=1} lambda(n) n^{-gamma} G_k(ell n)/n
//     = L(1/2+gamma, f (x) chi_{k1}) Z3(gamma, a, k, ell),
// with 4k = k1 k2^2, k1 a fundamental discriminant.
struct Z2Check {
    double lhs = 0.0, rhs = 0.0, defect = 0.0;
    i64 k1 = 1;
    u64 k2 = 1;
};

namespace detail {

// fundamental-discriminant decomposition 4k = k1 k2^2
inline std::pair<i64, u64> fundamental_part(i64 k) {
    if (k == 0) throw std::invalid_argument("fundamental_part: k != 0");
    u64 ak = (u64)std::llabs(k);
    i64 k0 = k < 0 ? -1 : 1;
    for (const auto& [p, e] : arith::factorize(ak).factors)
        if (e % 2) k0 *= (i64)p;
    i64 k1 = (((k0 % 4) + 4) % 4 == 1) ? k0 : 4 * k0;
    u64 k2 = (u64)std::llround(std::sqrt((double)(4 * k / k1)));
    while ((i64)(k2 * k2) * k1 != 4 * k) {
        if ((i64)(k2 * k2) * k1 < 4 * k) ++k2; else --k2;
    }
    return {k1, k2};
}

// G_k(p^beta) with the multiplicative closed form, for odd p.
inline double gk_prime_power(i64 k, u64 p, unsigned beta) {
    return gauss::detail::prime_power_value(k, p, beta);
}

}  // namespace detail

inline Z2Check Z2_factorization_check(const eigenform::EigenformTable& t,
                                      u64 a, i64 k, u64 ell, cplx gamma,
                                      u64 n_trunc, u64 n_L, u64 P = 10000) {
    if (k == 0)
        throw std::invalid_argument("Z2_factorization_check: k = 0 rejected");
    if (ell == 0 || ell % 2 == 0)
        throw std::invalid_argument("Z2_factorization_check: ell odd positive");
    if (gamma.real() <= 0.5)
        throw std::invalid_argument(
            "Z2_factorization_check: Re gamma > 1/2 required");
    const auto& sieve = arith::prime_sieve::instance();
    auto ell_fac = arith::factorize(ell);
    // left side: direct summation, G_k multiplicative over primes of ell*n
    double lhs = 0.0;
    for (u64 n = 1; n <= n_trunc; n += 2) {
        if (std::gcd(n, 2 * a) != 1) continue;
        double g = 1.0;
        u64 m = n;
        bool zero = false;
        for (const auto& [p, e] : ell_fac.factors) {
            unsigned beta = (unsigned)e;
            while (m % p == 0) {
                m /= p;
                ++beta;
            }
            g *= detail::gk_prime_power(k, p, beta);
            if (g == 0.0) { zero = true; break; }
        }
        if (!zero) {
            while (m > 1) {
                u64 p = sieve.smallest_factor(m);
                unsigned beta = 0;
                while (m % p == 0) {
                    m /= p;
                    ++beta;
                }
                g *= detail::gk_prime_power(k, p, beta);
                if (g == 0.0) { zero = true; break; }
            }
        }
        if (zero || g == 0.0) continue;
        lhs += t.lambda(n) *
               std::exp(-gamma.real() * std::log((double)n)) * g / (double)n;
    }
    // right side
    auto [k1, k2] = detail::fundamental_part(k);
    double L = 0.0;
    for (u64 n = 1; n <= n_L; ++n) {
        int chi = arith::kronecker(k1, (i64)n);
        if (chi == 0) continue;
        L += t.lambda(n) * (double)chi *
             std::exp(-(0.5 + gamma.real()) * std::log((double)n));
    }
    auto poly = [&](u64 p) {
        double chi = (double)arith::kronecker(k1, (i64)p);
        double u = std::exp(-(0.5 + gamma.real()) * std::log((double)p));
        return 1.0 - t.lambda(p) * chi * u + chi * chi * u * u;
    };
    double z3 = poly(2);
    for (const auto& [p, e] : arith::factorize(a).factors)
        if (p != 2) z3 *= poly(p);
    const auto& primes = sieve.primes();
    u64 abs_k = (u64)std::llabs(k);
    for (u64 p : primes) {
        if (p == 2 || a % p == 0) continue;
        if (p > P) break;
        unsigned b2 = 0;
        u64 lq = ell;
        while (lq % p == 0) {
            lq /= p;
            ++b2;
        }
        unsigned ordk = 0;
        u64 kk = abs_k;
        while (kk % p == 0) {
            kk /= p;
            ++ordk;
        }
        double rsum = 0.0;
        for (unsigned r = 0; r + b2 <= ordk + 1; ++r)
            rsum += eigenform::hecke_extend(t, p, (int)r) *
                    detail::gk_prime_power(k, p, r + b2) *
                    std::exp(-(double)r * (1.0 + gamma.real()) *
                             std::log((double)p));
        z3 *= poly(p) * rsum;
    }
    Z2Check r;
    r.lhs = lhs;
    r.rhs = L * z3;
    r.defect = std::abs(r.lhs - r.rhs);
    r.k1 = k1;
    r.k2 = k2;
    return r;
}

// Per-prime identity of the H-sum lemma: with w = p^{-1-2 gamma} (p,a)^2/p^2,
//   E3 - lambda(p) w E1 + w E2  equals
//     (1 - p^{-2})(E3 + 1/(p^2-1))   when p does not divide a,
//     1                              when p divides a.
inline double complic_local_check(const eigenform::EigenformTable& t, u64 p,
                                  bool a_divisible, cplx gamma) {
    LocalFactorTriple tr = local_triple(t, p, gamma);
    double lam = t.lambda(p);
    cplx w = std::exp(-(1.0 + 2.0 * gamma) * std::log((double)p));
    if (!a_divisible) w /= (double)p * (double)p;
    cplx s = tr.e3 - lam * w * tr.e1 + w * tr.e2;
    cplx ref = a_divisible
                   ? cplx(1.0, 0.0)
                   : (1.0 - 1.0 / ((double)p * (double)p)) *
                         (tr.e3 + 1.0 / ((double)p * (double)p - 1.0));
    return std::abs(s - ref);
}

}  // namespace qtml::euler
