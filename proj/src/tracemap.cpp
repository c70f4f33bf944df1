#include "sturmian/tracemap.hpp"

#include "sturmian/detail/trace_kernel.hpp"
#include "sturmian/errors.hpp"

#include <cmath>
#include <limits>

namespace sturmian {

TraceState TraceState::seed(Complex z, double lambda, bool with_derivative) {
    TraceState s;
    s.k = 0;
    s.x_prev = 2.0;
    s.x_cur = z;
    s.y_cur = z - lambda;
    if (with_derivative) s.deriv = TraceDerivatives{0.0, 1.0, 1.0};
    return s;
}

TraceStep trace_step(const TraceState& state, Coeff a_next, double cap) {
    if (a_next < 1) throw ValidationError("trace_step: a_next must be >= 1");
    detail::TraceWork<Complex> w;
    w.x_prev = state.x_prev;
    w.x_cur = state.x_cur;
    w.y = state.y_cur;
    const bool derivs = state.deriv.has_value();
    if (derivs) {
        w.dx_prev = state.deriv->dx_prev;
        w.dx_cur = state.deriv->dx_cur;
        w.dy = state.deriv->dy_cur;
    }
    if (!w.advance(a_next, derivs, cap)) return {state, true};
    TraceStep out;
    out.state.k = state.k + 1;
    out.state.x_prev = w.x_prev;
    out.state.x_cur = w.x_cur;
    out.state.y_cur = w.y;
    if (derivs) out.state.deriv = TraceDerivatives{w.dx_prev, w.dx_cur, w.dy};
    return out;
}

std::vector<Complex> level_traces(const TraceState& state, Coeff a_next, double cap) {
    if (a_next < 1) throw ValidationError("level_traces: a_next must be >= 1");
    std::vector<Complex> t{state.x_prev, state.y_cur};
    for (Coeff p = 1; p <= a_next; ++p) {
        Complex next = state.x_cur * t[p] - t[p - 1];
        if (!(std::abs(next) <= cap)) break;
        t.push_back(next);
    }
    return t;
}

Complex fricke(Complex x, Complex y, Complex w) { return x * x + y * y + w * w - x * y * w - 4.0; }

FrickeAudit fricke_audit(const FrequencySpec& freq, double lambda, double z, int K, long bits, double cap) {
    if (K < 0) throw ValidationError("fricke_audit: K must be >= 0");
    if (bits < 53) throw ValidationError("fricke_audit: bits must be >= 53");
    const auto prec = static_cast<mpfr_prec_t>(bits);
    BigReal x_prev(2.0, prec), x(z, prec), y(z, prec);
    y -= lambda;
    const BigReal l2(lambda * lambda, prec);
    FrickeAudit out;
    auto check = [&](const BigReal& a, const BigReal& b) {
        BigReal v = x * x + a * a + b * b - x * a * b - l2;
        v -= 4.0;
        out.max_rel_dev = std::max(out.max_rel_dev, abs(v).to_double() / (lambda * lambda));
        ++out.triples;
    };
    for (int k = 0; k < K; ++k) {
        const Coeff a = freq.a(static_cast<std::size_t>(k + 1));
        BigReal t0 = x_prev, t1 = y;
        check(t1, t0);
        for (Coeff p = 1; p <= a; ++p) {
            BigReal t2(prec);
            detail::fms(t2, x, t1, t0);
            if (!(abs(t2) < cap)) {
                out.diverged = true;
                return out;
            }
            check(t2, t1);
            t0 = std::move(t1);
            t1 = std::move(t2);
        }
        x_prev = std::move(x);
        x = std::move(t0);
        y = std::move(t1);
        ++out.levels;
    }
    return out;
}

std::vector<Complex> trace_sequence(const FrequencySpec& freq, double lambda, Complex z, int K, double cap) {
    std::vector<Complex> xs;
    auto s = TraceState::seed(z, lambda);
    xs.push_back(s.x_prev);
    xs.push_back(s.x_cur);
    for (int k = 0; k < K; ++k) {
        auto step = trace_step(s, freq.a(static_cast<std::size_t>(k + 1)), cap);
        if (step.diverged) break;
        s = step.state;
        xs.push_back(s.x_cur);
    }
    return xs;
}

std::vector<mpz_class> growth_sequence(const FrequencySpec& freq, int k0, int J) {
    if (J < 0 || k0 < 0) throw ValidationError("growth_sequence: k0 and J must be >= 0");
    std::vector<mpz_class> g{1};
    if (J >= 1) g.emplace_back(freq.a(static_cast<std::size_t>(k0 + 1)));
    for (int j = 1; j < J; ++j) {
        mpz_class a = freq.a(static_cast<std::size_t>(k0 + j + 1));
        g.push_back(a * g[static_cast<std::size_t>(j)] + g[static_cast<std::size_t>(j - 1)]);
    }
    return g;
}

EscapeReport escape_classify(const FrequencySpec& freq, double lambda, Complex z, double delta, int k_max,
                             double cap) {
    if (k_max < 1) throw ValidationError("escape_classify: k_max must be >= 1");
    if (!(delta >= 0.0)) throw ValidationError("escape_classify: delta must be >= 0");
    EscapeReport rep;
    rep.k_max = k_max;
    rep.delta = delta;
    const double thr = 2.0 + delta;
    const double inf = std::numeric_limits<double>::infinity();

    auto s = TraceState::seed(z, lambda);
    rep.abs_x = {std::abs(s.x_prev), std::abs(s.x_cur)};
    bool diverged = false;
    // Compute |x_k| for k <= k_max + 1; entries past the cap are +inf.
    for (int k = 0; k <= k_max; ++k) {
        if (diverged) {
            rep.abs_x.push_back(inf);
            continue;
        }
        auto step = trace_step(s, freq.a(static_cast<std::size_t>(k + 1)), cap);
        if (step.diverged) {
            diverged = true;
            rep.abs_x.push_back(inf);
            continue;
        }
        s = step.state;
        rep.abs_x.push_back(std::abs(s.x_cur));
    }
    auto ax = [&](int k) { return rep.abs_x[static_cast<std::size_t>(k + 1)]; };

    for (int k = 0; k <= k_max; ++k) {
        if (ax(k - 1) <= thr && ax(k) > thr && ax(k + 1) > thr) {
            // x_{k+1} is never computed once x_k itself overflowed.
            if (std::isinf(ax(k)))
                throw NumericError("escape_classify: magnitude cap reached before the criterion could be decided");
            rep.verdict = EscapeVerdict::escaped;
            rep.k0 = k;
            rep.growth = growth_sequence(freq, k, k_max - k);
            break;
        }
    }
    for (int k = -1; k <= k_max; ++k) rep.running_max = std::max(rep.running_max, ax(k));
    return rep;
}

} // namespace sturmian
