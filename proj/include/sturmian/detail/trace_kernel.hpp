#pragma once

#include "sturmian/bigfloat.hpp"
#include "sturmian/contfrac.hpp"

#include <cmath>
#include <complex>
#include <span>
#include <utility>

namespace sturmian::detail {

// Scalar primitives used by the trace recursion. Overloads exist for double,
// std::complex<double> and BigReal so the same kernel serves all three.
inline void fms(double& r, double a, double b, double c) { r = a * b - c; }
inline void fma_(double& r, double a, double b, double c) { r = a * b + c; }
inline void assign(double& r, double v) { r = v; }
inline void assign_sum(double& r, double a, double b) { r = a + b; }
inline void assign_diff(double& r, double a, double b) { r = a - b; }
inline double magnitude(double v) { return std::abs(v); }

inline void fms(std::complex<double>& r, std::complex<double> a, std::complex<double> b, std::complex<double> c) {
    r = a * b - c;
}
inline void fma_(std::complex<double>& r, std::complex<double> a, std::complex<double> b, std::complex<double> c) {
    r = a * b + c;
}
inline void assign(std::complex<double>& r, std::complex<double> v) { r = v; }
inline double magnitude(std::complex<double> v) { return std::abs(v); }

inline void fms(BigReal& r, const BigReal& a, const BigReal& b, const BigReal& c) {
    mpfr_fms(r.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
}
inline void fma_(BigReal& r, const BigReal& a, const BigReal& b, const BigReal& c) {
    mpfr_fma(r.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
}
inline void assign(BigReal& r, const BigReal& v) { mpfr_set(r.raw(), v.raw(), MPFR_RNDN); }
inline void assign(BigReal& r, double v) { mpfr_set_d(r.raw(), v, MPFR_RNDN); }
inline void assign_diff(BigReal& r, const BigReal& a, double b) { mpfr_sub_d(r.raw(), a.raw(), b, MPFR_RNDN); }

// Working registers of the trace recursion at one energy. After advance(a),
// (x_prev, x_cur, y) = (x_k, x_{k+1}, y_{k+1}) and y_prev = y_k.
template <class S>
struct TraceWork {
    S x_prev, x_cur, y, y_prev, t0, t1, t2;
    S dx_prev, dx_cur, dy, dy_prev, d0, d1, d2;

    TraceWork() = default;
    explicit TraceWork(mpfr_prec_t bits)
        requires std::is_same_v<S, BigReal>
        : x_prev(bits), x_cur(bits), y(bits), y_prev(bits), t0(bits), t1(bits), t2(bits),
          dx_prev(bits), dx_cur(bits), dy(bits), dy_prev(bits), d0(bits), d1(bits), d2(bits) {}

    // Seed at level 0: x_{-1} = 2, x_0 = z, y_0 = z - lambda.
    template <class Z>
    void seed(const Z& z, double lambda) {
        assign(x_prev, 2.0);
        assign(x_cur, z);
        if constexpr (std::is_same_v<S, BigReal>) assign_diff(y, z, lambda);
        else y = z - lambda;
        assign(y_prev, y);
        assign(dx_prev, 0.0);
        assign(dx_cur, 1.0);
        assign(dy, 1.0);
        assign(dy_prev, 1.0);
    }

    // Advances one level with coefficient a >= 1 using
    // t_{p+1} = x_k t_p - t_{p-1}, t_0 = x_{k-1}, t_1 = y_k.
    // Returns false if a magnitude exceeded cap (scalar types only).
    bool advance(Coeff a, bool derivs, double cap = 0.0) {
        assign(t0, x_prev);
        assign(t1, y);
        if (derivs) {
            assign(d0, dx_prev);
            assign(d1, dy);
        }
        for (Coeff p = 1; p <= a; ++p) {
            fms(t2, x_cur, t1, t0);
            if (derivs) {
                // t'_{p+1} = x' t_p + x t'_p - t'_{p-1}
                fms(d2, dx_cur, t1, d0);
                fma_(d2, x_cur, d1, d2);
                swap_(d0, d1);
                swap_(d1, d2);
            }
            swap_(t0, t1);
            swap_(t1, t2);
            if constexpr (!std::is_same_v<S, BigReal>) {
                if (cap > 0.0 && !(magnitude(t1) <= cap)) return false;
            }
        }
        swap_(y_prev, y);
        swap_(x_prev, x_cur);
        swap_(x_cur, t0);
        swap_(y, t1);
        if (derivs) {
            swap_(dy_prev, dy);
            swap_(dx_prev, dx_cur);
            swap_(dx_cur, d0);
            swap_(dy, d1);
        }
        return true;
    }

    void run(std::span<const Coeff> coeffs, bool derivs) {
        for (auto a : coeffs) advance(a, derivs);
    }

private:
    static void swap_(S& a, S& b) {
        using std::swap;
        swap(a, b);
    }
};

} // namespace sturmian::detail
