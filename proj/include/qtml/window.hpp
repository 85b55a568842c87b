// The smooth compactly supported test window and its Mellin / Fourier-type
// transforms.
#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include "qtml/quadrature.hpp"

namespace qtml::window {

using cplx = std::complex<double>;

// Phi_z(x) = x^z Phi(x) with Phi a fixed closed-form bump on (x_lo, x_hi).
struct WindowSpec {
    double x_lo = 1.0;
    double x_hi = 2.0;
    cplx shift = 0.0;  // z in Phi_z
    std::function<double(double)> base;  // the unshifted bump

    double operator()(double x) const {
        if (x <= x_lo || x >= x_hi) return 0.0;
        return base(x);
    }
    cplx shifted(double x) const {
        if (x <= x_lo || x >= x_hi) return 0.0;
        return std::pow(cplx(x, 0.0), shift) * base(x);
    }
    WindowSpec with_shift(cplx z) const {
        WindowSpec w = *this;
        w.shift = z;
        return w;
    }
};

// Phi(x) = exp(-1/((x-1)(2-x))) on (1,2), zero elsewhere.
inline WindowSpec default_window() {
    WindowSpec w;
    w.x_lo = 1.0;
    w.x_hi = 2.0;
    w.base = [](double x) {
        double t = (x - 1.0) * (2.0 - x);
        return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
    };
    return w;
}

// Mellin transform of the shifted window: int Phi_z(x) x^{s-1} dx.
inline cplx mellin(const WindowSpec& w, cplx s, double tol = 1e-13) {
    return quad::integrate<cplx>(
        [&](double x) {
            double b = w(x);
            if (b == 0.0) return cplx(0.0);
            return b * std::pow(cplx(x, 0.0), s + w.shift - 1.0);
        },
        w.x_lo, w.x_hi, tol);
}

// d/ds Mellin at s: log-weighted quadrature.
inline cplx mellin_derivative(const WindowSpec& w, cplx s, double tol = 1e-13) {
    return quad::integrate<cplx>(
        [&](double x) {
            double b = w(x);
            if (b == 0.0) return cplx(0.0);
            return b * std::pow(cplx(x, 0.0), s + w.shift - 1.0) * std::log(x);
        },
        w.x_lo, w.x_hi, tol);
}

// Fourier-type transform: int (cos(2 pi x y) + sin(2 pi x y)) Phi(x) dx.
inline double fourier_type(const WindowSpec& w, double y, double tol = 1e-12) {
    return quad::integrate<double>(
        [&](double x) {
            double b = w(x);
            if (b == 0.0) return 0.0;
            double a = 2.0 * 3.14159265358979323846 * x * y;
            return (std::cos(a) + std::sin(a)) * b;
        },
        w.x_lo, w.x_hi, tol);
}

}  // namespace qtml::window
