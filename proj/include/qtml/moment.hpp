// Smoothed first moments of quadratic twists: the brute-force measured
// moment M(alpha, ell) = sum*_{(d,2)=1} chi_{8d}(ell) L(1/2+alpha) Phi(d/X),
// its derivative analogue, the predicted two-term main term, and residual
// decay diagnostics.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qtml/arith.hpp"
#include "qtml/eigenform.hpp"
#include "qtml/euler.hpp"
#include "qtml/kernel.hpp"
#include "qtml/lfun.hpp"
#include "qtml/special.hpp"
#include "qtml/window.hpp"

namespace qtml::moment {

using cplx = std::complex<double>;
using u64 = std::uint64_t;
using i64 = std::int64_t;

inline constexpr double pi = 3.14159265358979323846;

struct MomentRequest {
    int kappa = 12;
    u64 ell = 1;
    cplx alpha = 0.0;
    std::vector<double> x_grid;
    window::WindowSpec window = window::default_window();
    bool derivative = false;
    kernel::GTag g_tag = kernel::GTag::narrow;
    u64 prime_cutoff = 100000;
    unsigned accel_depth = 0;  // 0 = plain compensated product
    unsigned workers = 1;
    double tol = 1e-9;
};

inline void validate_request(const MomentRequest& rq) {
    if (rq.ell == 0 || rq.ell % 2 == 0)
        throw std::invalid_argument("MomentRequest: ell must be odd positive");
    if (rq.x_grid.empty())
        throw std::invalid_argument("MomentRequest: empty X grid");
    for (std::size_t i = 0; i < rq.x_grid.size(); ++i) {
        double X = rq.x_grid[i];
        if (X <= 0.0)
            throw std::invalid_argument("MomentRequest: X must be positive");
        if (i && rq.x_grid[i - 1] >= X)
            throw std::invalid_argument(
                "MomentRequest: X grid must be strictly increasing");
        double lx = std::max(std::log(X), 1.0);
        // shift-range condition with generous implied constants
        if (std::abs(rq.alpha.real()) * lx > 1.5 ||
            std::abs(rq.alpha.real()) > 0.2)
            throw std::invalid_argument(
                "MomentRequest: |Re alpha| must be O(1/log X)");
        if (std::abs(rq.alpha.imag()) > 8.0 * lx * lx)
            throw std::invalid_argument(
                "MomentRequest: |Im alpha| must be O((log X)^2)");
    }
    if (rq.derivative) {
        if (rq.kappa % 4 != 2)
            throw std::invalid_argument(
                "MomentRequest: derivative flag requires weight 2 mod 4");
        if (rq.alpha != cplx(0.0))
            throw std::invalid_argument(
                "MomentRequest: derivative moments are central (alpha = 0)");
    }
    if (rq.workers == 0)
        throw std::invalid_argument("MomentRequest: workers >= 1");
}

struct MomentRow {
    double X = 0.0;
    cplx M{};       // measured moment
    cplx MT{};      // predicted main term
    cplx R{};       // residual M - MT
    cplx R_norm{};  // R / sqrt(X)
    double tail_bound = 0.0;
    u64 d_count = 0;
};

struct DecayFit {
    bool slope_defined = false;
    double slope = 0.0;        // least-squares slope of log|R| vs log X
    double slope_lo = 0.0;     // 95% bootstrap band (row resampling)
    double slope_hi = 0.0;
    double rnorm_ratio = 1.0;  // max/min of |R|/sqrt(X) across usable rows
    std::vector<std::string> flags;
};

struct MomentReport {
    int kappa = 12;
    u64 ell = 1;
    cplx alpha = 0.0;
    bool derivative = false;
    kernel::GTag g_tag = kernel::GTag::narrow;
    u64 prime_cutoff = 100000;
    unsigned accel_depth = 0;
    double tol = 1e-9;
    std::vector<MomentRow> rows;
    DecayFit fit;
};

namespace detail {

// Deterministic parallel map over the d-list: contiguous blocks handed out
// by an atomic counter, results written by index, reduced serially in
// d-order afterwards -> bit-exact for any worker count.
template <class F>
inline void map_indexed(std::size_t count, unsigned workers, F&& fn) {
    workers = std::min<unsigned>(
        std::max(1u, workers),
        std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    const std::size_t block = 8;
    auto run = [&] {
        try {
            for (;;) {
                std::size_t b = next.fetch_add(1);
                std::size_t lo = b * block;
                if (lo >= count) break;
                std::size_t hi = std::min(lo + block, count);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline cplx kahan_sum(const std::vector<cplx>& v) {
    cplx sum = 0.0, comp = 0.0;
    for (const cplx& x : v) {
        cplx y = x - comp;
        cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

// d-enumeration for one grid point: odd squarefree d with Phi(d/X) != 0
inline std::vector<u64> d_list(const window::WindowSpec& w, double X) {
    u64 lo = (u64)std::max(1.0, std::floor(w.x_lo * X));
    u64 hi = (u64)std::ceil(w.x_hi * X);
    std::vector<u64> out;
    arith::SquarefreeStream(lo, hi, true).for_each([&](u64 d) {
        if (d % 2 == 1) out.push_back(d);
    });
    return out;
}

struct BruteCaches {
    kernel::KernelCache cp, cm;  // omega_{+alpha}, omega_{-alpha}
};

inline BruteCaches make_brute_caches(const MomentRequest& rq) {
    double x_min = rq.x_grid.front(), x_max = rq.x_grid.back();
    double d_lo = std::max(1.0, std::floor(rq.window.x_lo * x_min));
    double d_hi = std::ceil(rq.window.x_hi * x_max);
    double q_min = 8.0 * d_lo, q_max = 8.0 * d_hi;
    auto tr = lfun::detail::afe_truncation(rq.kappa, rq.alpha, rq.g_tag,
                                           q_min, 0.5 * rq.tol);
    double xi_max = 1.3 * (double)tr.n_stop / q_min;
    double xi_min = 0.5 / q_max;
    double target = std::max(1e-12, 1e-3 * rq.tol);
    BruteCaches bc;
    bc.cp = kernel::build_kernel_cache(rq.kappa, rq.alpha, rq.g_tag, xi_min,
                                       xi_max, target);
    bc.cm = kernel::build_kernel_cache(rq.kappa, -rq.alpha, rq.g_tag, xi_min,
                                       xi_max, target);
    return bc;
}

}  // namespace detail

// Measured side of eq. (M-l) at one grid point.  Exact enumeration over the
// window support; compensated fixed-order reduction.
inline MomentRow brute_moment_row(const eigenform::EigenformTable& table,
                                  const MomentRequest& rq,
                                  const detail::BruteCaches& bc, double X) {
    auto ds = detail::d_list(rq.window, X);
    std::vector<cplx> vals(ds.size(), cplx(0.0));
    std::vector<double> tails(ds.size(), 0.0);
    detail::map_indexed(ds.size(), rq.workers, [&](std::size_t i) {
        u64 d = ds[i];
        double phi = rq.window((double)d / X);
        if (phi == 0.0) return;
        int chi = arith::kronecker((i64)(8 * d), (i64)rq.ell);
        if (chi == 0) return;
        lfun::TwistPoint pt{d, rq.alpha, rq.kappa};
        auto lv = lfun::central_value(table, bc.cp, bc.cm, pt, rq.tol);
        vals[i] = (double)chi * phi * lv.value;
        tails[i] = std::abs(phi) * lv.tail_bound;
    });
    MomentRow row;
    row.X = X;
    row.M = detail::kahan_sum(vals);
    for (double t : tails) row.tail_bound += t;
    row.d_count = ds.size();
    return row;
}

// Measured side of the Theorem 2 moment (derivative at the center).
inline MomentRow derivative_brute_moment_row(
    const eigenform::EigenformTable& table, const MomentRequest& rq,
    const lfun::DerivCaches& dc, double X) {
    auto ds = detail::d_list(rq.window, X);
    std::vector<cplx> vals(ds.size(), cplx(0.0));
    detail::map_indexed(ds.size(), rq.workers, [&](std::size_t i) {
        u64 d = ds[i];
        double phi = rq.window((double)d / X);
        if (phi == 0.0) return;
        int chi = arith::kronecker((i64)(8 * d), (i64)rq.ell);
        if (chi == 0) return;
        vals[i] = (double)chi * phi *
                  lfun::central_derivative(table, dc, d, rq.tol);
    });
    MomentRow row;
    row.X = X;
    row.M = detail::kahan_sum(vals);
    row.tail_bound = (double)ds.size() * rq.tol;
    row.d_count = ds.size();
    return row;
}

// gamma_alpha := (8/2pi)^{-2alpha} Gamma(kappa/2 - alpha)/Gamma(kappa/2 + alpha)
inline cplx gamma_alpha(int kappa, cplx alpha) {
    cplx lg = special::log_gamma(0.5 * kappa - alpha) -
              special::log_gamma(0.5 * kappa + alpha);
    return std::exp(-2.0 * alpha * std::log(8.0 / (2.0 * pi)) + lg);
}

// Main term of the shifted moment, MT(X) = c1 X + c2 X^{1-2alpha}:
//   c1 = 4 PhiTilde(1) / (pi^2 ell1^{1/2+alpha}) L(1+2a, sym^2 f) Z(1/2+a, ell)
//   c2 = i^kappa gamma_alpha 4 PhiTilde(1-2alpha) / (pi^2 ell1^{1/2-alpha})
//        L(1-2a, sym^2 f) Z(1/2-a, ell)
struct MainTermCoeffs {
    cplx c1{}, c2{};
    cplx term1(double X) const { return c1 * X; }
    cplx term2(double X, cplx alpha) const {
        return c2 * std::exp((1.0 - 2.0 * alpha) * std::log(X));
    }
};

inline MainTermCoeffs main_term_coeffs(const eigenform::EigenformTable& table,
                                       const MomentRequest& rq) {
    euler::EulerContext ctx(table, rq.ell, rq.prime_cutoff);
    cplx a = rq.alpha;
    auto lz = [&](cplx g) {
        // L(1+2g, sym^2 f) Z(1/2+g, ell) as displayed in eq. (LZ)
        cplx z = rq.accel_depth
                     ? euler::ZN_accelerated(ctx, g, rq.accel_depth)
                     : euler::Z_product(ctx, g);
        return euler::sym_square_L_c(table, 1.0 + 2.0 * g, rq.tol) * z;
    };
    double l1 = (double)ctx.ell1;
    MainTermCoeffs mc;
    mc.c1 = 4.0 * window::mellin(rq.window, 1.0) /
            (pi * pi * std::exp((0.5 + a) * std::log(l1))) * lz(a);
    mc.c2 = lfun::i_pow(rq.kappa) * gamma_alpha(rq.kappa, a) * 4.0 *
            window::mellin(rq.window, 1.0 - 2.0 * a) /
            (pi * pi * std::exp((0.5 - a) * std::log(l1))) * lz(-a);
    return mc;
}

inline cplx main_term(const eigenform::EigenformTable& table,
                      const MomentRequest& rq, double X) {
    auto mc = main_term_coeffs(table, rq);
    return mc.term1(X) + mc.term2(X, rq.alpha);
}

// Theorem 2 prediction: (8 PhiTilde(1)/pi^2) L(1,sym^2 f) Z*(0) X [bracket],
// bracket = log X + 2 L'(1)/L(1) + Z*'(0)/Z*(0) + log(8/2pi)
//           + digamma(kappa/2) + PhiTilde'(1)/PhiTilde(1).
inline double derivative_main_term(const eigenform::EigenformTable& table,
                                   const window::WindowSpec& w, double X,
                                   u64 prime_cutoff = 100000) {
    if (table.kappa % 4 != 2)
        throw std::invalid_argument(
            "derivative_main_term: weight 2 mod 4 required");
    euler::EulerContext ctx(table, 1, prime_cutoff);
    double L1 = euler::sym_square_L(table, 1.0);
    double Ld = euler::sym_square_L_derivative(table, 1.0);
    double Z0 = euler::Z_product(ctx, cplx(0.0)).real();
    double Zlog = euler::Z_star_derivative(table, prime_cutoff);
    cplx ph1 = window::mellin(w, 1.0);
    cplx phd = window::mellin_derivative(w, 1.0);
    double bracket = std::log(X) + 2.0 * Ld / L1 + Zlog +
                     std::log(8.0 / (2.0 * pi)) +
                     special::digamma(cplx(0.5 * table.kappa, 0.0)).real() +
                     (phd / ph1).real();
    return 8.0 * ph1.real() / (pi * pi) * L1 * Z0 * X * bracket;
}

// Least-squares slope of log|R| vs log X over rows whose residual is above
// the numerical noise floor; flags spread of the normalized residuals.
inline DecayFit residual_analysis(const MomentReport& rep,
                                  double spread_factor = 4.0) {
    DecayFit fit;
    if (rep.rows.size() < 3)
        throw std::invalid_argument("residual_analysis: need >= 3 grid points");
    std::vector<double> lx, lr, rn;
    for (const auto& row : rep.rows) {
        double r = std::abs(row.R);
        double floor_ = std::max(row.tail_bound, 1e-12 * std::abs(row.M));
        if (r <= floor_) {
            fit.flags.push_back("row X=" + std::to_string(row.X) +
                                ": residual indistinguishable from "
                                "quadrature error");
            continue;
        }
        lx.push_back(std::log(row.X));
        lr.push_back(std::log(r));
        rn.push_back(std::abs(row.R_norm));
    }
    if (lx.size() >= 2) {
        double n = (double)lx.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += lr[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * lr[i];
        }
        double den = n * sxx - sx * sx;
        if (den > 1e-12) {
            fit.slope = (n * sxy - sx * sy) / den;
            fit.slope_defined = true;
        }
    }
    if (fit.slope_defined) {
        // 95% band by resampling grid rows with replacement (deterministic)
        std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
        std::uniform_int_distribution<std::size_t> pick(0, lx.size() - 1);
        std::vector<double> slopes;
        for (int b = 0; b < 2000; ++b) {
            double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t j = 0; j < lx.size(); ++j) {
                std::size_t i = pick(rng);
                n += 1.0;
                sx += lx[i];
                sy += lr[i];
                sxx += lx[i] * lx[i];
                sxy += lx[i] * lr[i];
            }
            double den = n * sxx - sx * sx;
            if (den > 1e-12) slopes.push_back((n * sxy - sx * sy) / den);
        }
        if (slopes.size() >= 100) {
            std::sort(slopes.begin(), slopes.end());
            fit.slope_lo = slopes[(std::size_t)(0.025 * slopes.size())];
            fit.slope_hi = slopes[(std::size_t)(0.975 * slopes.size())];
        } else {
            fit.slope_lo = fit.slope_hi = fit.slope;
        }
    }
    if (!fit.slope_defined) fit.flags.push_back("slope undefined: noise-floor");
    if (!rn.empty()) {
        auto [mn, mx] = std::minmax_element(rn.begin(), rn.end());
        fit.rnorm_ratio = *mn > 0.0 ? *mx / *mn : 1.0;
        if (fit.rnorm_ratio > spread_factor)
            fit.flags.push_back("normalized residual spread exceeds factor " +
                                std::to_string(spread_factor));
    }
    return fit;
}

// Full run: measured rows, predicted main terms, residual diagnostics.
inline MomentReport run_moment(const eigenform::EigenformTable& table,
                               const MomentRequest& rq) {
    validate_request(rq);
    if (table.kappa != rq.kappa)
        throw std::invalid_argument("run_moment: table weight mismatch");
    MomentReport rep;
    rep.kappa = rq.kappa;
    rep.ell = rq.ell;
    rep.alpha = rq.alpha;
    rep.derivative = rq.derivative;
    rep.g_tag = rq.g_tag;
    rep.prime_cutoff = rq.prime_cutoff;
    rep.accel_depth = rq.accel_depth;
    rep.tol = rq.tol;
    if (rq.derivative) {
        double x_min = rq.x_grid.front(), x_max = rq.x_grid.back();
        double q_min = 8.0 * std::max(1.0, std::floor(rq.window.x_lo * x_min));
        double q_max = 8.0 * std::ceil(rq.window.x_hi * x_max);
        auto tr = lfun::detail::afe_truncation(
            rq.kappa, 1e-3, kernel::GTag::narrow, q_min, 0.5 * rq.tol);
        auto dc = lfun::make_deriv_caches(rq.kappa, 1e-3, 0.5 / q_max,
                                          1.3 * (double)tr.n_stop / q_min,
                                          std::max(1e-12, 1e-3 * rq.tol));
        for (double X : rq.x_grid) {
            MomentRow row = derivative_brute_moment_row(table, rq, dc, X);
            row.MT = derivative_main_term(table, rq.window, X,
                                          rq.prime_cutoff);
            row.R = row.M - row.MT;
            row.R_norm = row.R / std::sqrt(X);
            rep.rows.push_back(row);
        }
    } else {
        auto bc = detail::make_brute_caches(rq);
        auto mc = main_term_coeffs(table, rq);
        for (double X : rq.x_grid) {
            MomentRow row = brute_moment_row(table, rq, bc, X);
            row.MT = mc.term1(X) + mc.term2(X, rq.alpha);
            row.R = row.M - row.MT;
            row.R_norm = row.R / std::sqrt(X);
            rep.rows.push_back(row);
        }
    }
    if (rep.rows.size() >= 3) rep.fit = residual_analysis(rep);
    return rep;
}

// CSV emission: fixed header, one row per X (real parts; complex-shift
// metadata including imaginary parts lives in the JSON emission).
inline void write_csv(std::ostream& os, const MomentReport& rep) {
    os << "# qtml v1\n";
    os << "X,M,MT,R,R_norm\n";
    char buf[256];
    for (const auto& row : rep.rows) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.12g,%.12g,%.12g,%.12g\n",
                      row.X, row.M.real(), row.MT.real(), row.R.real(),
                      row.R_norm.real());
        os << buf;
    }
}

}  // namespace qtml::moment
