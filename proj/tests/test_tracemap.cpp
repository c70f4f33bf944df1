#include "sturmian/contfrac.hpp"
#include "sturmian/errors.hpp"
#include "sturmian/tracemap.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace sturmian;

namespace {

using Mat = std::array<Complex, 4>;

Mat mul(const Mat& a, const Mat& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

// tr(T_{q_k} ... T_1) and tr(M_{k-1} M_k) from explicit one-step transfer matrices.
struct MatrixOracle {
    std::vector<Mat> m; // M_{-1}, M_0, ..., M_K

    MatrixOracle(const FrequencySpec& f, double lambda, Complex z, int K) {
        auto c = convergents(f, K);
        auto alpha = frequency_value(f, 256);
        m.push_back({1.0, -lambda, 0.0, 1.0});
        m.push_back({z, -1.0, 1.0, 0.0});
        const long qmax = c.q(K).get_si();
        Mat prod{1.0, 0.0, 0.0, 1.0};
        BigReal one_minus = BigReal(1.0, 300) - alpha;
        int next = 1;
        for (long j = 1; j <= qmax; ++j) {
            BigReal ja = alpha * static_cast<double>(j);
            BigReal frac = ja - floor(ja);
            const double v = frac >= one_minus ? 1.0 : 0.0;
            prod = mul(Mat{z - lambda * v, -1.0, 1.0, 0.0}, prod);
            if (j == c.q(next).get_si()) {
                m.push_back(prod);
                ++next;
            }
        }
    }
    Complex x(int k) const { const auto& a = m[k + 1]; return a[0] + a[3]; }
    Complex y(int k) const {
        auto p = mul(m[k], m[k + 1]);
        return p[0] + p[3];
    }
};

} // namespace

TEST_CASE("worked example at lambda = 3, z = 3") {
    auto s = TraceState::seed(3.0, 3.0);
    CHECK(s.x_prev == Complex(2.0));
    CHECK(s.x_cur == Complex(3.0));
    CHECK(s.y_cur == Complex(0.0));
    auto s1 = trace_step(s, 3).state;
    CHECK(s1.x_prev == Complex(3.0));
    CHECK(s1.x_cur == Complex(-6.0));
    CHECK(s1.y_cur == Complex(-16.0));
    auto s2 = trace_step(s1, 1).state;
    CHECK(s2.x_cur == Complex(-16.0));
    CHECK(s2.y_cur == Complex(93.0));
    CHECK(fricke(3.0, -6.0, -16.0) == Complex(9.0));
    auto t = level_traces(s, 3);
    REQUIRE(t.size() == 5);
    CHECK(t[3] == s1.x_cur);
    CHECK(t[4] == s1.y_cur);
}

TEST_CASE("single-step level gives x_1 = y_0") {
    for (double z : {-1.5, 0.3, 7.0}) {
        auto s = trace_step(TraceState::seed(z, 5.0), 1).state;
        CHECK(s.x_cur == Complex(z - 5.0));
    }
    CHECK_THROWS_AS(trace_step(TraceState::seed(1.0, 5.0), 0), ValidationError);
}

TEST_CASE("traces agree with explicit transfer-matrix products") {
    const double lambda = 2.5;
    for (const auto& f : {FrequencySpec::constant(1), FrequencySpec({3, 1}, ConstantTail{2}),
                          FrequencySpec::periodic({1, 4, 2})}) {
        for (Complex z : {Complex(0.4, 0.0), Complex(-1.1, 0.2), Complex(2.9, -0.05)}) {
            const int K = 7;
            MatrixOracle o(f, lambda, z, K);
            auto s = TraceState::seed(z, lambda);
            for (int k = 0; k < K; ++k) {
                CHECK(std::abs(s.x_cur - o.x(k)) <= 1e-8 * (1 + std::abs(o.x(k))));
                CHECK(std::abs(s.y_cur - o.y(k)) <= 1e-8 * (1 + std::abs(o.y(k))));
                s = trace_step(s, f.a(static_cast<std::size_t>(k + 1))).state;
            }
        }
    }
}

TEST_CASE("fricke invariant") {
    CHECK(fricke(2.0, 2.0, 2.0) == Complex(0.0));
    for (double z : {-3.0, 0.0, 1.7, 12.0})
        CHECK(std::abs(fricke(2.0, z, z - 4.5) - 4.5 * 4.5) < 1e-12);

    // Conserved at every intermediate p of every level.
    for (double lambda : {3.0, 20.0}) {
        auto f = FrequencySpec({2, 1, 3}, PeriodicTail{{1, 1, 2}});
        for (int i = 0; i <= 60; ++i) {
            const double z = -(lambda + 5) + 2 * (lambda + 5) * i / 60.0;
            auto s = TraceState::seed(z, lambda);
            for (int k = 0; k < 30; ++k) {
                auto t = level_traces(s, f.a(static_cast<std::size_t>(k + 1)));
                if (t.size() < f.a(static_cast<std::size_t>(k + 1)) + 2) break;
                bool finite = true;
                for (std::size_t p = 1; p < t.size(); ++p) {
                    const Complex x = s.x_cur, a = t[p], b = t[p - 1];
                    const double scale = std::max(
                        {lambda * lambda, std::norm(x) + std::norm(a) + std::norm(b), std::abs(x * a * b)});
                    if (!std::isfinite(scale) || scale > 1e200) { finite = false; break; }
                    CHECK(std::abs(fricke(x, a, b) - lambda * lambda) <= 1e-9 * scale);
                }
                auto step = trace_step(s, f.a(static_cast<std::size_t>(k + 1)));
                if (!finite || step.diverged) break;
                s = step.state;
            }
        }
    }
}

TEST_CASE("derivatives match central differences") {
    {
        auto d = trace_step(TraceState::seed(3.0, 3.0, true), 3).state.deriv->dx_cur;
        const double h = 1e-6;
        auto xp = trace_step(TraceState::seed(3.0 + h, 3.0), 3).state.x_cur;
        auto xm = trace_step(TraceState::seed(3.0 - h, 3.0), 3).state.x_cur;
        CHECK(std::abs(d - (xp - xm) / (2 * h)) < 1e-6 * std::max(1.0, std::abs(d)));
    }
    auto f = FrequencySpec({1, 2}, PeriodicTail{{3, 1}});
    for (double lambda : {5.0, 20.0}) {
        for (Complex z : {Complex(0.31, 0.0), Complex(-1.7, 0.0), Complex(lambda + 0.4, 0.0), Complex(0.2, 0.3)}) {
            const double h = 1e-6 * std::max(1.0, std::abs(z));
            auto s = TraceState::seed(z, lambda, true);
            auto sp = TraceState::seed(z + h, lambda);
            auto sm = TraceState::seed(z - h, lambda);
            for (int k = 0; k < 15; ++k) {
                const auto a = f.a(static_cast<std::size_t>(k + 1));
                s = trace_step(s, a).state;
                sp = trace_step(sp, a).state;
                sm = trace_step(sm, a).state;
                if (std::abs(s.x_cur) > 1e6) break;
                const Complex fd = (sp.x_cur - sm.x_cur) / (2 * h);
                const Complex d = s.deriv->dx_cur;
                // The finite-difference truncation error limits the comparison on steep traces.
                if (std::abs(d) * h > 1e-3) break;
                CHECK(std::abs(d - fd) <= 1e-4 * std::max(std::abs(d), 1.0));
            }
        }
    }
}

TEST_CASE("growth sequence") {
    auto fib = growth_sequence(FrequencySpec::constant(1), 4, 6);
    const long fv[] = {1, 1, 2, 3, 5, 8, 13};
    for (int i = 0; i <= 6; ++i) CHECK(fib[i] == fv[i]);
    auto pell = growth_sequence(FrequencySpec::constant(2), 0, 4);
    const long pv[] = {1, 2, 5, 12, 29};
    for (int i = 0; i <= 4; ++i) CHECK(pell[i] == pv[i]);
    CHECK(growth_sequence(FrequencySpec::constant(3), 2, 0).size() == 1);
    auto g = growth_sequence(FrequencySpec({4, 1, 7}, ConstantTail{1}), 0, 10);
    for (std::size_t i = 2; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(growth_sequence(FrequencySpec::explicit_only({1, 2}), 0, 3), CoefficientUndefined);
}

TEST_CASE("escape classification") {
    SUBCASE("escape at k0 = 0 in the worked example") {
        auto r = escape_classify(FrequencySpec({3, 1}, ConstantTail{1}), 3.0, 3.0, 0.0, 4);
        CHECK(r.verdict == EscapeVerdict::escaped);
        CHECK(r.k0 == 0);
        CHECK(r.abs_x[0] == 2.0);
        CHECK(r.abs_x[1] == 3.0);
        CHECK(r.abs_x[2] == 6.0);
        REQUIRE(r.growth.size() == 5);
        CHECK(r.growth[0] == 1);
        CHECK(r.growth[1] == 3);
        CHECK(r.growth[2] == 4);
    }
    SUBCASE("bounded when the first traces stay inside [-2, 2]") {
        // |x_0| <= 2 and |x_1| = |z(z - 5) - 2| <= 2 for a_1 = 2: bisect for z(z - 5) = 2.
        double lo = -0.7, hi = 0.0;
        for (int i = 0; i < 80; ++i) {
            const double m = 0.5 * (lo + hi);
            (m * (m - 5.0) > 2.0 ? lo : hi) = m;
        }
        const double z = lo;
        auto f = FrequencySpec::constant(2);
        auto xs = trace_sequence(f, 5.0, z, 1);
        CHECK(std::abs(xs[1]) <= 2.0);
        CHECK(std::abs(xs[2]) <= 2.0);
        auto r = escape_classify(f, 5.0, z, 0.0, 1);
        CHECK(r.verdict == EscapeVerdict::bounded_up_to);
        CHECK(r.running_max <= 2.0);
    }
    SUBCASE("first index of two consecutive escapes") {
        auto f = FrequencySpec::constant(1);
        for (double z : {2.5, 3.3, -4.0, 9.0}) {
            auto r = escape_classify(f, 4.5, z, 0.0, 20);
            if (r.verdict != EscapeVerdict::escaped) continue;
            for (int k = 0; k < r.k0; ++k)
                CHECK_FALSE((r.abs_x[k] <= 2.0 && r.abs_x[k + 1] > 2.0 && r.abs_x[k + 2] > 2.0));
        }
    }
    SUBCASE("monotone in delta and super-exponential growth") {
        auto f = FrequencySpec({2, 1}, PeriodicTail{{1, 3}});
        for (int i = 0; i < 40; ++i) {
            const Complex z(-3.0 + 0.4 * i, 0.05 * (i % 5));
            auto r1 = escape_classify(f, 6.0, z, 0.2, 25);
            if (r1.verdict != EscapeVerdict::escaped) continue;
            for (double d2 : {0.1, 0.0}) CHECK(escape_classify(f, 6.0, z, d2, 25).verdict == EscapeVerdict::escaped);
            for (std::size_t k = 0; k < r1.growth.size(); ++k) {
                const double ax = r1.abs_x[static_cast<std::size_t>(r1.k0) + k + 1];
                if (std::isinf(ax)) break;
                CHECK(std::log(ax) > r1.growth[k].get_d() * std::log(1.2));
            }
        }
    }
    CHECK_THROWS_AS(escape_classify(FrequencySpec::constant(1), 3.0, 0.0, 0.0, 0), ValidationError);
    CHECK_THROWS_AS(escape_classify(FrequencySpec::explicit_only({1, 1}), 3.0, 0.1, 0.0, 5), CoefficientUndefined);
}

TEST_CASE("high-precision Fricke audit") {
    auto f = FrequencySpec::constant(1);
    for (double z : {-7.9, -0.3, 2.6, 19.5, 23.0}) {
        auto a = fricke_audit(f, 20.0, z, 30);
        CHECK(a.triples > 0);
        CHECK(a.max_rel_dev <= 1e-9);
    }
    auto esc = fricke_audit(FrequencySpec({3, 1}, ConstantTail{1}), 3.0, 3.0, 30);
    CHECK(esc.diverged);
    CHECK(esc.max_rel_dev <= 1e-9);
    // At double precision the same orbit loses the invariant to cancellation.
    CHECK(fricke_audit(FrequencySpec({3, 1}, ConstantTail{1}), 3.0, 3.0, 30, 53).max_rel_dev > 1e-9);
}
