#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "qtml/special.hpp"
#include "qtml/window.hpp"

using namespace qtml;
using cplx = std::complex<double>;

TEST_CASE("log_gamma against known values and libm") {
    CHECK(std::abs(special::gamma(cplx(5.0, 0.0)) - 24.0) < 1e-12);
    CHECK(std::abs(special::gamma(cplx(0.5, 0.0)) -
                   std::sqrt(special::pi)) < 1e-13);
    for (double x : {0.1, 0.35, 1.0, 2.7, 6.0, 14.5, 30.0})
        CHECK(std::abs(special::log_gamma(cplx(x, 0.0)).real() -
                       std::lgamma(x)) < 1e-11 * std::max(1.0, std::lgamma(x)));
    // reflection through the recurrence Gamma(z+1) = z Gamma(z)
    for (cplx z : {cplx(0.3, 1.2), cplx(-1.7, 0.4), cplx(2.0, -3.0)}) {
        cplx lhs = special::log_gamma(z + 1.0);
        cplx rhs = special::log_gamma(z) + std::log(z);
        CHECK(std::abs(std::exp(lhs) - std::exp(rhs)) <
              1e-11 * std::abs(std::exp(lhs)));
    }
}

TEST_CASE("digamma against series oracle") {
    const double euler_gamma = 0.5772156649015329;
    CHECK(std::abs(special::digamma(cplx(1.0, 0.0)).real() + euler_gamma) <
          1e-12);
    // psi(n) = -gamma + sum_{k<n} 1/k
    double h = 0.0;
    for (int n = 1; n <= 12; ++n) {
        CHECK(std::abs(special::digamma(cplx((double)n, 0.0)).real() -
                       (-euler_gamma + h)) < 1e-12);
        h += 1.0 / n;
    }
    // complex recurrence psi(z+1) = psi(z) + 1/z
    for (cplx z : {cplx(0.4, 0.9), cplx(3.1, -2.0)})
        CHECK(std::abs(special::digamma(z + 1.0) -
                       (special::digamma(z) + 1.0 / z)) < 1e-12);
}

TEST_CASE("zeta at classical points") {
    const double pi = special::pi;
    CHECK(std::abs(special::zeta(cplx(2.0, 0.0)).real() - pi * pi / 6.0) <
          1e-13);
    CHECK(std::abs(special::zeta(cplx(4.0, 0.0)).real() -
                   pi * pi * pi * pi / 90.0) < 1e-13);
    CHECK(std::abs(special::zeta(cplx(3.0, 0.0)).real() -
                   1.2020569031595943) < 1e-12);
    CHECK(std::abs(special::zeta(cplx(0.0, 0.0)).real() + 0.5) < 1e-12);
    CHECK(std::abs(special::zeta(cplx(-1.0, 0.0)).real() + 1.0 / 12.0) <
          1e-12);
    // functional-equation spot check at s = 1/2 + 6i:
    // zeta(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s) zeta(1-s)
    cplx s(0.5, 6.0);
    cplx lhs = special::zeta(s);
    cplx rhs = std::exp(s * std::log(2.0) + (s - 1.0) * std::log(pi) +
                        std::log(std::sin(0.5 * pi * s)) +
                        special::log_gamma(1.0 - s)) *
               special::zeta(1.0 - s);
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
}

TEST_CASE("zeta_restricted removes the stated local factors") {
    double s = 1.7;
    double full = special::zeta_real(s);
    double r = special::zeta_restricted(s, {2, 5});
    double expect = full * (1.0 - std::pow(2.0, -s)) *
                    (1.0 - std::pow(5.0, -s));
    CHECK(std::abs(r - expect) < 1e-12 * expect);
}

TEST_CASE("window bump and Mellin transform") {
    auto w = window::default_window();
    CHECK(w(1.0) == 0.0);
    CHECK(w(2.0) == 0.0);
    CHECK(w(0.5) == 0.0);
    CHECK(w(1.5) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));

    // Mellin at s = 1 against a dense Simpson oracle
    auto simpson = [&](auto f) {
        const int N = 20000;
        double h = 1.0 / N, acc = 0.0;
        for (int i = 0; i < N; ++i) {
            double a = 1.0 + i * h, b = a + h;
            acc += (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * h / 6.0;
        }
        return acc;
    };
    double ref1 = simpson([&](double x) { return w(x); });
    CHECK(std::abs(window::mellin(w, 1.0).real() - ref1) < 1e-10);
    double ref_s = simpson([&](double x) { return w(x) * std::pow(x, 0.7); });
    CHECK(std::abs(window::mellin(w, cplx(1.7, 0.0)).real() - ref_s) < 1e-10);

    // frozen value used throughout the main-term constants
    CHECK(window::mellin(w, 1.0).real() ==
          doctest::Approx(0.007029858407).epsilon(1e-9));
}

TEST_CASE("mellin_derivative matches finite differences") {
    auto w = window::default_window();
    for (cplx s : {cplx(1.0, 0.0), cplx(0.6, 0.4)}) {
        cplx fd = (window::mellin(w, s + 1e-5) - window::mellin(w, s - 1e-5)) /
                  2e-5;
        CHECK(std::abs(window::mellin_derivative(w, s) - fd) < 1e-8);
    }
}

TEST_CASE("window shift multiplies the integrand by x^z") {
    auto w = window::default_window();
    cplx z(0.3, -0.2);
    auto wz = w.with_shift(z);
    // Mellin of the shifted window at s equals Mellin of the base at s + z
    for (cplx s : {cplx(1.0, 0.0), cplx(1.4, 0.6)})
        CHECK(std::abs(window::mellin(wz, s) - window::mellin(w, s + z)) <
              1e-11);
}

TEST_CASE("fourier_type transform: value at 0 and decay") {
    auto w = window::default_window();
    // at y = 0 the cosine transform is the plain integral
    auto simpson = [&](auto f) {
        const int N = 20000;
        double h = 1.0 / N, acc = 0.0;
        for (int i = 0; i < N; ++i) {
            double a = 1.0 + i * h, b = a + h;
            acc += (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * h / 6.0;
        }
        return acc;
    };
    double ref = simpson([&](double x) { return w(x); });
    CHECK(std::abs(window::fourier_type(w, 0.0) - ref) < 1e-10);
    // smooth compact support -> rapid decay
    CHECK(std::abs(window::fourier_type(w, 40.0)) <
          1e-4 * std::abs(window::fourier_type(w, 1.0)));
}
