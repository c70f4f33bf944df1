#include "sturmian/dynamics.hpp"
#include "sturmian/errors.hpp"

#include <doctest.h>
#include <gmpxx.h>

#include <cmath>
#include <random>

using namespace sturmian;

namespace {

// floor(n sqrt(d)) exactly, d not a perfect square.
long floor_sqrt_mult(long n, long d) {
    mpz_class s;
    mpz_class sq = mpz_class(n) * n * d;
    mpz_sqrt(s.get_mpz_t(), sq.get_mpz_t());
    long r = s.get_si();
    return n >= 0 ? r : -r - 1;
}

long fdiv2(long v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// floor(n alpha) for alpha = (sqrt5 - 1)/2 and alpha = sqrt2 - 1.
long floor_golden(long n) { return fdiv2(floor_sqrt_mult(n, 5) - n); }
long floor_silver(long n) { return floor_sqrt_mult(n, 2) - n; }

Amplitude free_amplitude(long n, double t) {
    long m = std::labs(n);
    Amplitude ph = std::pow(Amplitude(0.0, -1.0), static_cast<int>(m % 4));
    return ph * std::cyl_bessel_j(static_cast<double>(m), 2.0 * t);
}

} // namespace

TEST_CASE("potential matches the floor formula at omega = 0") {
    PotentialSpec s{FrequencySpec::constant(1), 3.5, 0.0, 1000};
    auto V = potential(s);
    const double expect5[] = {3.5, 0.0, 3.5, 3.5, 0.0};
    for (long n = 1; n <= 5; ++n) CHECK(V[static_cast<std::size_t>(n + 1000)] == expect5[n - 1]);
    CHECK(V[1000] == 0.0);
    for (long n = -1000; n <= 1000; ++n) {
        double v = 3.5 * static_cast<double>(floor_golden(n + 1) - floor_golden(n));
        REQUIRE(V[static_cast<std::size_t>(n + 1000)] == v);
    }
    PotentialSpec s2{FrequencySpec::constant(2), 1.0, 0.0, 500};
    auto V2 = potential(s2);
    for (long n = -500; n <= 500; ++n)
        REQUIRE(V2[static_cast<std::size_t>(n + 500)] == static_cast<double>(floor_silver(n + 1) - floor_silver(n)));
}

TEST_CASE("potential with a phase and a rational frequency") {
    PotentialSpec a{FrequencySpec::constant(1), 2.0, 0.3, 50};
    PotentialSpec b = a;
    b.L = 80;
    auto Va = potential(a), Vb = potential(b);
    for (long n = -50; n <= 50; ++n) CHECK(Va[static_cast<std::size_t>(n + 50)] == Vb[static_cast<std::size_t>(n + 80)]);
    for (double v : Vb) CHECK((v == 0.0 || v == 2.0));

    // alpha = 1/2 alternates, boundary hits decided by the half-open interval.
    auto Vr = potential({FrequencySpec::explicit_only({2}), 1.0, 0.0, 4});
    for (long n = -4; n <= 4; ++n) CHECK(Vr[static_cast<std::size_t>(n + 4)] == (n % 2 != 0 ? 1.0 : 0.0));

    CHECK_THROWS_AS(potential({FrequencySpec::constant(1), 1.0, 1.0, 5}), ValidationError);
    CHECK_THROWS_AS(potential({FrequencySpec::constant(1), 1.0, 0.0, 0}), ValidationError);
}

TEST_CASE("evolution preconditions and the initial state") {
    PotentialSpec s{FrequencySpec::constant(1), 2.0, 0.0, 100};
    auto st = evolve(s, {0.0});
    REQUIRE(st.size() == 1);
    CHECK(st[0].at(0) == Amplitude(1.0, 0.0));
    CHECK(st[0].norm2() == 1.0);
    CHECK_THROWS_WITH_AS(evolve(s, {0.0, 30.0}), doctest::Contains("window-too-small"), ValidationError);
    CHECK_THROWS_WITH_AS(evolve(s, {1.0}, {1e-14}), doctest::Contains("tol-unachievable"), ValidationError);
    CHECK_THROWS_AS(evolve(s, {2.0, 1.0}), ValidationError);
    CHECK(required_window(0.0, 100.0) == 200 + 56);
}

TEST_CASE("free evolution against Bessel amplitudes") {
    const double tol = 1e-9;
    PotentialSpec s{FrequencySpec::constant(1), 0.0, 0.0, 500};
    std::vector<double> times{1.0, 10.0, 50.0, 120.0};
    auto st = evolve(s, times, {tol});
    for (const auto& w : st) {
        double err2 = 0.0;
        for (long n = -w.L; n <= w.L; ++n) err2 += std::norm(w.at(n) - free_amplitude(n, w.time));
        CHECK(std::sqrt(err2) <= tol);
        CHECK(w.error_bound <= tol);
        CHECK(std::fabs(w.norm2() - 1.0) <= 2 * tol);
        auto m2 = moments(w, 2.0);
        CHECK(std::fabs(m2.value - 2.0 * w.time * w.time) <= 1e-7 * w.time * w.time + m2.error_bar);
    }
}

TEST_CASE("free second moment grows ballistically") {
    PotentialSpec s{FrequencySpec::constant(1), 0.0, 0.0, 480};
    auto times = geometric_grid(10.0, 200.0, 12);
    auto st = evolve(s, times);
    std::vector<double> m;
    for (const auto& w : st) m.push_back(moments(w, 2.0).value);
    double beta = loglog_slope(times, m, 2.0);
    CHECK(beta >= 0.95);
    CHECK(beta <= 1.0 + 1e-6);
}

TEST_CASE("moments of simple states") {
    auto d = delta0(5);
    for (double p : {0.5, 1.0, 2.0, 5.0}) CHECK(moments(d, p).value == 0.0);
    WaveState w = delta0(5);
    w.amp[5] = 0.0;
    w.amp[4] = w.amp[6] = std::sqrt(0.5);
    for (double p : {0.5, 1.0, 2.0, 5.0}) CHECK(moments(w, p).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(moments(w, 0.0), ValidationError);
}

TEST_CASE("Hermiticity and energy conservation") {
    PotentialSpec s{FrequencySpec::constant(1), 2.0, 0.1, 220};
    auto V = potential(s);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int r = 0; r < 10; ++r) {
        std::vector<Amplitude> psi(V.size());
        for (auto& a : psi) a = {g(rng), g(rng)};
        auto e = expectation(V, psi);
        CHECK(std::fabs(e.imag()) <= 1e-12 * std::abs(e));
    }
    const double tol = 1e-8;
    auto st = evolve(s, {5.0, 10.0, 20.0, 40.0}, {tol});
    WaveState start = delta0(220);
    double e0 = expectation(V, start.amp).real();
    for (const auto& w : st) {
        CHECK(std::fabs(expectation(V, w.amp).real() - e0) <= 10 * tol);
        CHECK(std::fabs(w.norm2() - 1.0) <= 2 * tol);
    }
}

TEST_CASE("Abel time averages") {
    const double T = 10.0;
    auto grid = abel_grid(T);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() >= 8 * T);
    std::vector<Sample> c, lin;
    for (double t : grid) {
        c.push_back({t, 2.5});
        lin.push_back({t, t});
    }
    CHECK(time_average(c, T).value == doctest::Approx(2.5).epsilon(1e-4));
    auto a = time_average(lin, T, {-1.0, 1.0});
    CHECK(a.value == doctest::Approx(T / 2).epsilon(0.01));
    CHECK(a.tail > 0.0);
    CHECK(a.tail < 1e-5 * T);

    const double Ts = 1e-3;
    std::vector<Sample> smooth;
    for (double t : abel_grid(Ts)) smooth.push_back({t, std::cos(t) + 2.0});
    CHECK(time_average(smooth, Ts).value == doctest::Approx(3.0).epsilon(1e-4));

    std::vector<Sample> short_s(c.begin(), c.end() - 20);
    CHECK_THROWS_WITH_AS(time_average(short_s, T), doctest::Contains("insufficient-coverage"), ValidationError);
    std::vector<Sample> late(c.begin() + 1, c.end());
    CHECK_THROWS_AS(time_average(late, T), ValidationError);
}

TEST_CASE("outside probabilities") {
    const double T = 100.0;
    PotentialSpec s{FrequencySpec::constant(1), 0.0, 0.0, 2000};
    auto st = evolve(s, abel_grid(T));
    CHECK(outside_probability(st, 0, T) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(outside_probability(st, 50, T) >= 0.1);
    CHECK(outside_probability(st, 1950, T) <= 1e-8);
    CHECK_THROWS_AS(outside_probability(st, 2001, T), ValidationError);
}

TEST_CASE("transport exponent fits") {
    auto grid = geometric_grid(3.0, 23.0, 8);
    const std::vector<double> ps{0.5, 1.0, 2.0, 5.0};

    auto free_fits = fit_beta({FrequencySpec::constant(1), 0.0, 0.0, 2000}, ps, grid);
    CHECK(free_fits[2].beta_plus_hat == doctest::Approx(1.0).epsilon(0.05));

    auto strong = fit_beta({FrequencySpec::constant(1), 8.0, 0.0, 2000}, ps, grid);
    auto weak = fit_beta({FrequencySpec::constant(1), 0.5, 0.0, 2000}, ps, grid);
    CHECK(strong[2].beta_plus_hat < weak[2].beta_plus_hat);
    for (const auto* fits : {&strong, &weak, &free_fits}) {
        for (std::size_t i = 0; i < fits->size(); ++i) {
            const auto& f = (*fits)[i];
            CHECK(f.beta_minus_hat <= f.beta_plus_hat);
            CHECK(f.beta_minus_hat >= 0.0);
            CHECK(f.beta_plus_hat <= 1.05);
            CHECK(f.max_norm_drift <= 2e-8);
            // Small-p fits at strong coupling are dominated by the decay of the
            // return probability at these times, so monotonicity is checked
            // only for the weak and free runs.
            if (i > 0 && fits != &strong) CHECK(f.beta_plus_hat >= (*fits)[i - 1].beta_plus_hat - 0.05);
        }
    }
    CHECK_THROWS_AS(fit_beta({FrequencySpec::constant(1), 0.0, 0.0, 2000}, 2.0, geometric_grid(2.0, 20.0, 7)),
                    ValidationError);
    CHECK_THROWS_AS(fit_beta({FrequencySpec::constant(1), 0.0, 0.0, 2000}, 2.0, {1, 2, 3, 4, 5, 6, 7, 8}),
                    ValidationError);
}
