#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <string>
#include <utility>

namespace sturmian {

// RAII wrapper over an MPFR variable. Every value carries its own precision;
// binary operators produce the larger of the two operand precisions.
class BigReal {
public:
    explicit BigReal(mpfr_prec_t bits = 64) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
    BigReal(double x, mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_d(v_, x, MPFR_RNDN); }
    BigReal(const mpz_class& z, mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }
    BigReal(const BigReal& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    BigReal(BigReal&& o) noexcept { mpfr_init2(v_, MPFR_PREC_MIN); mpfr_swap(v_, o.v_); }
    BigReal& operator=(const BigReal& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigReal& operator=(BigReal&& o) noexcept { mpfr_swap(v_, o.v_); return *this; }
    ~BigReal() { mpfr_clear(v_); }

    static BigReal ratio(const mpz_class& num, const mpz_class& den, mpfr_prec_t bits);
    static BigReal parse(const std::string& s, mpfr_prec_t bits);

    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
    // Changes precision in place, rounding the stored value.
    void round_to(mpfr_prec_t bits) { mpfr_prec_round(v_, bits, MPFR_RNDN); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    // Scientific notation with enough digits to round-trip at this precision.
    std::string str() const;
    std::string str(std::size_t digits) const;

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    BigReal& operator+=(const BigReal& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigReal& operator-=(const BigReal& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigReal& operator*=(const BigReal& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigReal& operator/=(const BigReal& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigReal& operator+=(double x) { mpfr_add_d(v_, v_, x, MPFR_RNDN); return *this; }
    BigReal& operator-=(double x) { mpfr_sub_d(v_, v_, x, MPFR_RNDN); return *this; }
    BigReal& operator*=(double x) { mpfr_mul_d(v_, v_, x, MPFR_RNDN); return *this; }

    friend BigReal operator+(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_add); }
    friend BigReal operator-(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_sub); }
    friend BigReal operator*(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_mul); }
    friend BigReal operator/(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_div); }
    friend BigReal operator+(const BigReal& a, double x) { BigReal r(a); r += x; return r; }
    friend BigReal operator-(const BigReal& a, double x) { BigReal r(a); r -= x; return r; }
    friend BigReal operator*(const BigReal& a, double x) { BigReal r(a); r *= x; return r; }
    friend BigReal operator-(const BigReal& a) { BigReal r(a); mpfr_neg(r.v_, r.v_, MPFR_RNDN); return r; }

    friend int compare(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.v_, b.v_); }
    friend bool operator<(const BigReal& a, const BigReal& b) { return mpfr_less_p(a.v_, b.v_); }
    friend bool operator>(const BigReal& a, const BigReal& b) { return mpfr_greater_p(a.v_, b.v_); }
    friend bool operator<=(const BigReal& a, const BigReal& b) { return mpfr_lessequal_p(a.v_, b.v_); }
    friend bool operator>=(const BigReal& a, const BigReal& b) { return mpfr_greaterequal_p(a.v_, b.v_); }
    friend bool operator==(const BigReal& a, const BigReal& b) { return mpfr_equal_p(a.v_, b.v_); }
    friend bool operator<(const BigReal& a, double x) { return mpfr_cmp_d(a.v_, x) < 0; }
    friend bool operator>(const BigReal& a, double x) { return mpfr_cmp_d(a.v_, x) > 0; }

    friend BigReal abs(const BigReal& a) { BigReal r(a); mpfr_abs(r.v_, r.v_, MPFR_RNDN); return r; }
    friend BigReal floor(const BigReal& a) { BigReal r(a); mpfr_floor(r.v_, r.v_); return r; }
    // Midpoint rounded to the larger operand precision.
    friend BigReal midpoint(const BigReal& a, const BigReal& b);

    friend void swap(BigReal& a, BigReal& b) noexcept { mpfr_swap(a.v_, b.v_); }

private:
    template <class Op>
    static BigReal binary(const BigReal& a, const BigReal& b, Op op) {
        BigReal r(std::max(a.precision(), b.precision()));
        op(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    mpfr_t v_;
};

// Natural log of a positive big integer, accurate to double precision.
double log_of(const mpz_class& z);

} // namespace sturmian
