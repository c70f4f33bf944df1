#include "sturmian/bigfloat.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sturmian {

BigReal BigReal::ratio(const mpz_class& num, const mpz_class& den, mpfr_prec_t bits) {
    BigReal n(num, bits + 64);
    BigReal d(den, bits + 64);
    BigReal r(bits);
    mpfr_div(r.v_, n.v_, d.v_, MPFR_RNDN);
    return r;
}

BigReal BigReal::parse(const std::string& s, mpfr_prec_t bits) {
    BigReal r(bits);
    if (mpfr_set_str(r.v_, s.c_str(), 10, MPFR_RNDN) != 0)
        throw std::invalid_argument("not a number: " + s);
    return r;
}

std::string BigReal::str() const {
    auto digits = static_cast<std::size_t>(std::ceil(static_cast<double>(precision()) * 0.30103)) + 2;
    return str(digits);
}

std::string BigReal::str(std::size_t digits) const {
    std::vector<char> buf(digits + 64);
    mpfr_snprintf(buf.data(), buf.size(), "%.*Re", static_cast<int>(digits), v_);
    return std::string(buf.data());
}

BigReal midpoint(const BigReal& a, const BigReal& b) {
    BigReal r(std::max(a.precision(), b.precision()));
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    mpfr_div_2ui(r.v_, r.v_, 1, MPFR_RNDN);
    return r;
}

double log_of(const mpz_class& z) {
    if (sgn(z) <= 0) throw std::domain_error("log_of: non-positive integer");
    long exp = 0;
    double mant = mpz_get_d_2exp(&exp, z.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

} // namespace sturmian
