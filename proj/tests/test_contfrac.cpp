#include "sturmian/contfrac.hpp"
#include "sturmian/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace sturmian;

TEST_CASE("frequency spec parsing round-trips") {
    for (const char* s : {"prefix=[3,1];tail=const:2", "prefix=[];tail=periodic:[1,2]", "prefix=[1,1,1];tail=none"}) {
        auto f = FrequencySpec::parse(s);
        CHECK(f.to_string() == s);
        CHECK(FrequencySpec::parse(f.to_string()) == f);
    }
    CHECK(FrequencySpec::parse("const:1") == FrequencySpec::constant(1));
    CHECK(FrequencySpec::parse("periodic:[1,2]") == FrequencySpec::periodic({1, 2}));
    CHECK_THROWS_AS(FrequencySpec::parse("prefix=[0];tail=none"), ValidationError);
    CHECK_THROWS_AS(FrequencySpec::parse("prefix=[1]"), ValidationError);
    CHECK_THROWS_AS(FrequencySpec::parse("prefix=[1];tail=periodic:[]"), ValidationError);
    CHECK_THROWS_AS(FrequencySpec::parse("prefix=[1,x];tail=none"), ValidationError);
}

TEST_CASE("coefficient accessor") {
    auto f = FrequencySpec({3, 1}, PeriodicTail{{4, 5}});
    CHECK(f.a(1) == 3);
    CHECK(f.a(2) == 1);
    CHECK(f.a(3) == 4);
    CHECK(f.a(4) == 5);
    CHECK(f.a(5) == 4);
    auto e = FrequencySpec::explicit_only({2, 2});
    CHECK(e.available() == 2u);
    CHECK_THROWS_AS(e.a(3), CoefficientUndefined);
    CHECK_THROWS_AS(e.a(3), ValidationError);
}

TEST_CASE("convergents") {
    SUBCASE("Fibonacci") {
        auto c = convergents(FrequencySpec::explicit_only({1, 1, 1, 1, 1}), 5);
        const long q[] = {0, 1, 1, 2, 3, 5, 8};
        for (int k = -1; k <= 5; ++k) CHECK(c.q(k) == q[k + 1]);
    }
    SUBCASE("prefix 3,1") {
        auto c = convergents(FrequencySpec::explicit_only({3, 1}), 2);
        CHECK(c.q(-1) == 0);
        CHECK(c.q(0) == 1);
        CHECK(c.q(1) == 3);
        CHECK(c.q(2) == 4);
        CHECK(c.to_csv() == "k,p_k,q_k\n-1,1,0\n0,0,1\n1,1,3\n2,1,4\n");
    }
    SUBCASE("determinant identity") {
        auto c = convergents(FrequencySpec({7, 1, 300}, PeriodicTail{{1, 2, 3}}), 200);
        for (int k = 0; k <= 200; ++k) {
            mpz_class det = c.p(k) * c.q(k - 1) - c.p(k - 1) * c.q(k);
            CHECK(det == (k % 2 == 0 ? -1 : 1));
        }
    }
    SUBCASE("growth rate of constant type") {
        for (Coeff m : {1, 2, 5}) {
            const int K = 400;
            auto c = convergents(FrequencySpec::constant(m), K);
            const double md = static_cast<double>(m);
            CHECK(log_of(c.q(K)) / K == doctest::Approx(std::log((md + std::sqrt(md * md + 4)) / 2)).epsilon(1e-2));
        }
    }
    CHECK_THROWS_AS(convergents(FrequencySpec::explicit_only({1}), 2), CoefficientUndefined);
}

TEST_CASE("frequency value") {
    auto golden = frequency_value(FrequencySpec::constant(1), 200);
    BigReal exact(5.0, 400);
    mpfr_sqrt(exact.raw(), exact.raw(), MPFR_RNDN);
    exact -= 1.0;
    mpfr_div_ui(exact.raw(), exact.raw(), 2, MPFR_RNDN);
    BigReal err = abs(golden - exact);
    BigReal bound(1.0, 64);
    mpfr_mul_2si(bound.raw(), bound.raw(), -200, MPFR_RNDN);
    CHECK(err < bound);

    auto silver = frequency_value(FrequencySpec::constant(2), 64);
    CHECK(silver.to_double() == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));

    CHECK_THROWS_AS(frequency_value(FrequencySpec::explicit_only({2}), 8), ValidationError);
    CHECK_THROWS_AS(frequency_value(FrequencySpec::explicit_only({2}), 64), CoefficientUndefined);
}

TEST_CASE("classical approximation bound") {
    auto f = FrequencySpec({1, 4, 1, 1, 9}, PeriodicTail{{2, 1}});
    auto alpha = frequency_value(f, 512);
    auto c = convergents(f, 60);
    for (int k = 1; k < 60; ++k) {
        BigReal approx = BigReal::ratio(c.p(k), c.q(k), 600);
        BigReal err = abs(alpha - approx);
        BigReal bound = BigReal::ratio(mpz_class(1), c.q(k) * c.q(k + 1), 600);
        CHECK(err < bound);
    }
}

TEST_CASE("geometric mean") {
    CHECK(geometric_mean_delta(FrequencySpec::constant(1), 10) == doctest::Approx(1.0));
    CHECK(geometric_mean_delta(FrequencySpec::constant(2), 5) == doctest::Approx(2.0));
    CHECK(geometric_mean_delta(FrequencySpec::explicit_only({1, 2, 1, 2}), 4) == doctest::Approx(std::sqrt(2.0)));
    auto huge = FrequencySpec::constant(1000000000000ULL);
    CHECK(std::isfinite(geometric_mean_delta(huge, 5000)));
    auto mixed = FrequencySpec({1, 1, 3}, PeriodicTail{{1, 7}});
    for (std::size_t k = 1; k < 30; ++k) {
        const double d = geometric_mean_delta(mixed, k);
        CHECK(d >= 1.0);
        if (k <= 2) CHECK(d == 1.0);
        else CHECK(d > 1.0);
    }
}

TEST_CASE("block decomposition") {
    auto d = block_decompose(std::vector<Coeff>{2, 1, 1, 3, 1});
    REQUIRE(d.s() == 2);
    CHECK(d.segments[0] == std::vector<Coeff>{2});
    CHECK(d.runs[0] == 2);
    CHECK(d.segments[1] == std::vector<Coeff>{3});
    CHECK(d.runs[1] == 1);
    CHECK(d.segments[2].empty());
    CHECK(d.exponent_sum == 2);

    for (std::size_t k : {1, 2, 7, 8}) {
        auto a = block_decompose(FrequencySpec::constant(1), k);
        CHECK(a.s() == 1);
        CHECK(a.runs[0] == k);
        CHECK(a.exponent_sum == (k + 1) / 2);
    }
    auto none = block_decompose(FrequencySpec::periodic({2, 5}), 9);
    CHECK(none.s() == 0);
    CHECK(none.exponent_sum == 0);

    // Round trip on pseudo-random prefixes.
    std::uint64_t x = 12345;
    for (int t = 0; t < 200; ++t) {
        std::vector<Coeff> v;
        for (int i = 0; i < 1 + t % 17; ++i) {
            x = x * 6364136223846793005ULL + 1442695040888963407ULL;
            v.push_back((x >> 60) % 3 == 0 ? 1 + (x >> 40) % 4 : 1);
        }
        auto bd = block_decompose(v);
        CHECK(bd.reassemble() == v);
        for (std::size_t i = 1; i + 1 < bd.segments.size(); ++i) CHECK(!bd.segments[i].empty());
    }
}

TEST_CASE("gauss sampling") {
    auto a = sample_gauss(7, 2, 50, 1);
    auto b = sample_gauss(7, 2, 50, 3);
    CHECK(a == b);
    CHECK(a[0] != a[1]);
    CHECK(sample_gauss_one(7, 1, 50) == a[1]);
    for (const auto& s : a) {
        CHECK(s.size() == 50);
        for (auto c : s) CHECK(c >= 1);
    }
    CHECK_THROWS_AS(sample_gauss(1, 0, 5), ValidationError);
}

TEST_CASE("gauss sampling matches the Gauss measure digit law") {
    // P(a_1 = j) = log2(1 + 1/(j(j+2))) under the Gauss measure.
    const std::size_t n = 20000;
    auto s = sample_gauss(99, n, 3, 0);
    for (Coeff j : {1, 2, 3}) {
        std::size_t hits = 0;
        for (const auto& v : s) hits += v[1] == j;
        const double jd = static_cast<double>(j);
        const double p = std::log2(1.0 + 1.0 / (jd * (jd + 2.0)));
        CHECK(static_cast<double>(hits) / n == doctest::Approx(p).epsilon(0.05));
    }
}

TEST_CASE("cesaro average") {
    CHECK(cesaro_average(FrequencySpec::periodic({1, 3}), 10) == doctest::Approx(2.0));
}
