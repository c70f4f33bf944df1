#include "sturmian/dynamics.hpp"

#include "sturmian/errors.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace sturmian {

namespace {

constexpr long kMaxPotentialBits = 1L << 15;

// floor(m alpha + omega) for every m in a range, decided exactly or not at all.
class FloorOracle {
public:
    FloorOracle(const FrequencySpec& freq, double omega, long max_abs_m) : freq_(freq), omega_(omega) {
        long lg = 0;
        while ((1L << lg) < max_abs_m + 2) ++lg;
        bits0_ = std::max<long>(128, 64 + 2 * lg);
        if (!freq.has_tail()) {
            const auto n = freq.prefix().size();
            auto conv = convergents(freq, static_cast<int>(n));
            rational_ = mpq_class(conv.p(static_cast<int>(n)), conv.q(static_cast<int>(n)));
            rational_->canonicalize();
        }
    }

    long operator()(long m) {
        if (rational_) {
            mpq_class x = *rational_ * mpq_class(m) + mpq_class(omega_);
            mpz_class f;
            mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
            return f.get_si();
        }
        // Irrational alpha and omega in [0,1): m alpha + omega is an integer only for m = 0.
        if (m == 0) return 0;
        for (long bits = bits0_; bits <= kMaxPotentialBits; bits *= 2) {
            const BigReal& a = alpha(bits);
            BigReal x(mpz_class(m), static_cast<mpfr_prec_t>(bits + 80));
            x *= a;
            x += omega_;
            BigReal fl = floor(x);
            double frac = (x - fl).to_double();
            double err = (std::fabs(static_cast<double>(m)) + 2.0) * std::ldexp(1.0, static_cast<int>(-bits));
            if (frac > err && frac < 1.0 - err) return mpfr_get_si(fl.raw(), MPFR_RNDN);
        }
        throw NumericError("precision-insufficient: n*alpha+omega at n=" + std::to_string(m) +
                           " is within 2^-" + std::to_string(kMaxPotentialBits) + " of an interval boundary");
    }

private:
    const BigReal& alpha(long bits) {
        auto it = alpha_.find(bits);
        if (it == alpha_.end()) it = alpha_.emplace(bits, frequency_value(freq_, static_cast<int>(bits))).first;
        return it->second;
    }

    const FrequencySpec& freq_;
    double omega_;
    long bits0_ = 128;
    std::optional<mpq_class> rational_;
    std::map<long, BigReal> alpha_;
};

// 2 sum_{k>N} |J_k(x)| <= 2 (x/2)^{N+1}/(N+1)! / (1 - x/(2(N+2))), natural log.
double log_chebyshev_tail(double x, long N) {
    if (x == 0.0) return -INFINITY;
    double r = x / (2.0 * static_cast<double>(N + 2));
    return std::log(2.0) + static_cast<double>(N + 1) * std::log(x / 2.0) - std::lgamma(static_cast<double>(N + 2)) -
           std::log1p(-r);
}

struct StepPlan {
    long order;
    double tail;
};

StepPlan plan_step(double x, double tol) {
    long N = std::max<long>(1, static_cast<long>(std::ceil(x)));
    const double lt = std::log(tol);
    while (log_chebyshev_tail(x, N) > lt) ++N;
    return {N, std::exp(log_chebyshev_tail(x, N))};
}

// psi <- e^{-i H h} psi with H = c + R H', spec(H') in [-1, 1].
void chebyshev_step(const std::vector<double>& V, double c, double R, double h, long N, std::vector<Amplitude>& psi) {
    const std::size_t n = psi.size();
    const double x = R * h;
    auto scaled = [&](const std::vector<Amplitude>& in, std::vector<Amplitude>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            Amplitude s = (V[i] - c) * in[i];
            if (i > 0) s += in[i - 1];
            if (i + 1 < n) s += in[i + 1];
            out[i] = s / R;
        }
    };
    std::vector<Amplitude> prev = psi, cur(n), next(n), acc(n);
    const Amplitude minus_i(0.0, -1.0);
    Amplitude phase(1.0, 0.0);
    double j0 = boost::math::cyl_bessel_j(0, x);
    for (std::size_t i = 0; i < n; ++i) acc[i] = j0 * prev[i];
    scaled(prev, cur);
    for (long k = 1; k <= N; ++k) {
        phase *= minus_i;
        Amplitude coef = 2.0 * boost::math::cyl_bessel_j(static_cast<double>(k), x) * phase;
        for (std::size_t i = 0; i < n; ++i) acc[i] += coef * cur[i];
        if (k == N) break;
        scaled(cur, next);
        for (std::size_t i = 0; i < n; ++i) next[i] = 2.0 * next[i] - prev[i];
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    const Amplitude global = std::polar(1.0, -c * h);
    for (std::size_t i = 0; i < n; ++i) psi[i] = global * acc[i];
}

} // namespace

void validate(const PotentialSpec& spec) {
    if (!std::isfinite(spec.lambda) || spec.lambda < 0.0) throw ValidationError("lambda must be finite and >= 0");
    if (!std::isfinite(spec.omega) || spec.omega < 0.0 || spec.omega >= 1.0)
        throw ValidationError("omega must lie in [0, 1)");
    if (spec.L < 1) throw ValidationError("window half-width L must be >= 1");
}

std::vector<double> potential(const PotentialSpec& spec) {
    validate(spec);
    FloorOracle fl(spec.freq, spec.omega, spec.L + 1);
    std::vector<double> V(static_cast<std::size_t>(2 * spec.L + 1));
    long below = fl(-spec.L);
    for (long n = -spec.L; n <= spec.L; ++n) {
        long above = fl(n + 1);
        long d = above - below;
        if (d != 0 && d != 1) throw NumericError("potential: alpha outside [0, 1]");
        V[static_cast<std::size_t>(n + spec.L)] = d == 1 ? spec.lambda : 0.0;
        below = above;
    }
    return V;
}

double WaveState::norm2() const {
    double s = 0.0;
    for (const auto& a : amp) s += std::norm(a);
    return s;
}

WaveState delta0(long L) {
    WaveState w;
    w.L = L;
    w.amp.assign(static_cast<std::size_t>(2 * L + 1), Amplitude{});
    w.amp[static_cast<std::size_t>(L)] = 1.0;
    return w;
}

std::vector<Amplitude> apply_hamiltonian(const std::vector<double>& V, const std::vector<Amplitude>& psi) {
    if (V.size() != psi.size()) throw ValidationError("apply_hamiltonian: size mismatch");
    const std::size_t n = psi.size();
    std::vector<Amplitude> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Amplitude s = V[i] * psi[i];
        if (i > 0) s += psi[i - 1];
        if (i + 1 < n) s += psi[i + 1];
        out[i] = s;
    }
    return out;
}

Amplitude expectation(const std::vector<double>& V, const std::vector<Amplitude>& psi) {
    auto h = apply_hamiltonian(V, psi);
    Amplitude s{};
    for (std::size_t i = 0; i < psi.size(); ++i) s += std::conj(psi[i]) * h[i];
    return s;
}

long required_window(double lambda, double T) {
    return static_cast<long>(std::ceil((2.0 + lambda) * T)) + static_cast<long>(std::ceil(16.0 + 4.0 * std::sqrt(T)));
}

std::vector<WaveState> evolve(const PotentialSpec& spec, const std::vector<double>& times, const EvolveOptions& opts) {
    validate(spec);
    if (!(opts.tol > 0.0)) throw ValidationError("tol must be > 0");
    if (opts.tol < 1e-12) throw ValidationError("tol-unachievable: tol below 1e-12 in double precision");
    if (!(opts.max_step_arg > 0.0)) throw ValidationError("max_step_arg must be > 0");
    if (times.empty()) return {};
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0) throw ValidationError("times must be finite and >= 0");
        if (i > 0 && times[i] < times[i - 1]) throw ValidationError("times must be sorted");
    }
    const long need = required_window(spec.lambda, times.back());
    if (spec.L < need)
        throw ValidationError("window-too-small: L=" + std::to_string(spec.L) + " but time " +
                              std::to_string(times.back()) + " needs L >= " + std::to_string(need));

    const auto V = potential(spec);
    const double c = spec.lambda / 2.0, R = 2.0 + spec.lambda / 2.0;

    std::size_t substeps = 0;
    double last = 0.0;
    for (double t : times) {
        substeps += static_cast<std::size_t>(std::ceil(R * (t - last) / opts.max_step_arg));
        last = t;
    }
    const double tol_step = 0.5 * opts.tol / static_cast<double>(std::max<std::size_t>(substeps, 1));

    std::vector<WaveState> out;
    out.reserve(times.size());
    WaveState state = delta0(spec.L);
    for (double t : times) {
        double dt = t - state.time;
        if (dt > 0.0) {
            auto pieces = static_cast<long>(std::ceil(R * dt / opts.max_step_arg));
            double h = dt / static_cast<double>(pieces);
            for (long s = 0; s < pieces; ++s) {
                auto plan = plan_step(R * h, tol_step);
                chebyshev_step(V, c, R, h, plan.order, state.amp);
                state.error_bound += plan.tail;
            }
            state.time = t;
            double edge = std::max(std::abs(state.amp.front()), std::abs(state.amp.back()));
            if (edge > opts.tol)
                throw NumericError("boundary-leak: amplitude " + std::to_string(edge) + " at the window edge at t=" +
                                   std::to_string(t));
        }
        double drift = std::fabs(state.norm2() - 1.0);
        if (drift > 2.0 * opts.tol)
            throw NumericError("norm drift " + std::to_string(drift) + " exceeds 2*tol at t=" + std::to_string(t));
        out.push_back(state);
    }
    return out;
}

MomentValue moments(const WaveState& state, double p) {
    if (!(p > 0.0)) throw ValidationError("moments: p must be > 0");
    double s = 0.0;
    for (long n = -state.L; n <= state.L; ++n) {
        if (n == 0) continue;
        s += std::pow(std::fabs(static_cast<double>(n)), p) * std::norm(state.at(n));
    }
    const double e = state.error_bound;
    return {s, std::pow(static_cast<double>(state.L), p) * (2.0 * e + e * e)};
}

AbelAverage time_average(const std::vector<Sample>& samples, double T, const TailEnvelope& env) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("time_average: T must be > 0");
    if (samples.empty() || samples.front().t != 0.0)
        throw ValidationError("insufficient-coverage: samples must start at t = 0");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].t > samples[i - 1].t)) throw ValidationError("time_average: sample times must increase");
    const double t_cut = 8.0 * T * (1.0 - 1e-12);
    if (samples.back().t < t_cut)
        throw ValidationError("insufficient-coverage: samples end at " + std::to_string(samples.back().t) +
                              " < 8T = " + std::to_string(8.0 * T));
    std::size_t last = 1;
    while (samples[last].t < t_cut) ++last;

    // f linear between samples, weight integrated exactly.
    const double k = 2.0 / T;
    double quad = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
        const auto& a = samples[i];
        const auto& b = samples[i + 1];
        const double h = b.t - a.t, ea = std::exp(-k * a.t), em = std::expm1(-k * h);
        const double m0 = -ea * em;
        const double m1 = ea * (-h * (1.0 + em) - em / k);
        quad += a.f * m0 + (b.f - a.f) / h * m1;
    }

    double C = env.coeff;
    if (C < 0.0) {
        C = 0.0;
        for (std::size_t i = 1; i <= last; ++i)
            if (samples[i].t >= 0.5 * samples[last].t) C = std::max(C, samples[i].f / std::pow(samples[i].t, env.power));
    }
    const double q = env.power;
    const double tc = samples[last].t;
    double tail = C * std::pow(T / 2.0, q) * boost::math::tgamma(q + 1.0, 2.0 * tc / T);
    return {quad + tail, tail};
}

std::vector<double> abel_grid(double t_lo, double t_hi) {
    if (!(t_lo > 0.0) || !(t_hi >= t_lo)) throw ValidationError("abel_grid: need 0 < t_lo <= t_hi");
    std::vector<double> g{0.0};
    for (int j = 0;; ++j) {
        double t = t_lo * std::exp2(j / 16.0);
        g.push_back(t);
        if (t >= t_hi * (1.0 - 1e-12)) break;
    }
    return g;
}

double outside_probability(const std::vector<WaveState>& states, long N, double T) {
    if (states.empty()) throw ValidationError("insufficient-coverage: no states");
    if (N < 0) throw ValidationError("outside_probability: N must be >= 0");
    if (N > states.front().L) throw ValidationError("outside_probability: N exceeds the window");
    std::vector<Sample> samples;
    samples.reserve(states.size());
    for (const auto& s : states) {
        double m = 0.0;
        for (long n = -s.L; n <= s.L; ++n)
            if (std::labs(n) >= N) m += std::norm(s.at(n));
        samples.push_back({s.time, m});
    }
    return time_average(samples, T).value;
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& f, double p) {
    if (t.size() != f.size() || t.size() < 2) throw ValidationError("loglog_slope: need >= 2 matching points");
    const double n = static_cast<double>(t.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0) || !(f[i] > 0.0)) throw NumericError("loglog_slope: non-positive value");
        double x = std::log(t[i]), y = std::log(f[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx) / p;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ValidationError("geometric_grid: need 0 < lo < hi, n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

namespace {

void check_fit_grids(const std::vector<double>& ps, const std::vector<double>& T_grid) {
    if (ps.empty()) throw ValidationError("fit_beta: empty p grid");
    for (double p : ps)
        if (!(p > 0.0)) throw ValidationError("fit_beta: p must be > 0");
    if (T_grid.size() < 8) throw ValidationError("fit_beta: T grid needs >= 8 points");
    if (!(T_grid.front() > 0.0)) throw ValidationError("fit_beta: T grid must be positive");
    const double ratio = T_grid[1] / T_grid[0];
    for (std::size_t i = 1; i < T_grid.size(); ++i)
        if (!(ratio > 1.0) || std::fabs(T_grid[i] / T_grid[i - 1] / ratio - 1.0) > 1e-6)
            throw ValidationError("fit_beta: T grid must be geometric and increasing");
}

} // namespace

std::vector<double> fit_times(const std::vector<double>& T_grid) {
    if (T_grid.empty() || !(T_grid.front() > 0.0)) throw ValidationError("fit_times: T grid must be positive");
    return abel_grid(T_grid.front() / 100.0, 8.0 * T_grid.back());
}

std::vector<TransportFit> fit_beta(const PotentialSpec& spec, const std::vector<double>& ps,
                                   const std::vector<double>& T_grid, double tol) {
    check_fit_grids(ps, T_grid);
    EvolveOptions eo;
    eo.tol = tol;
    return fit_beta_from_states(evolve(spec, fit_times(T_grid), eo), ps, T_grid);
}

std::vector<TransportFit> fit_beta_from_states(const std::vector<WaveState>& states, const std::vector<double>& ps,
                                               const std::vector<double>& T_grid) {
    check_fit_grids(ps, T_grid);
    double drift = 0.0;
    for (const auto& s : states) drift = std::max(drift, std::fabs(s.norm2() - 1.0));

    const std::size_t n = T_grid.size();
    const std::size_t trailing = std::max<std::size_t>(4, (n + 1) / 2);
    std::vector<TransportFit> fits;
    for (double p : ps) {
        TransportFit fit;
        fit.p = p;
        fit.T_grid = T_grid;
        fit.max_norm_drift = drift;
        std::vector<Sample> samples;
        samples.reserve(states.size());
        for (const auto& s : states) samples.push_back({s.time, s.time == 0.0 ? 0.0 : moments(s, p).value});
        for (double T : T_grid) fit.averaged.push_back(time_average(samples, T, {-1.0, p}).value);
        for (std::size_t i = n - trailing; i + 4 <= n; ++i) {
            std::vector<double> t(T_grid.begin() + static_cast<long>(i), T_grid.begin() + static_cast<long>(i + 4));
            std::vector<double> f(fit.averaged.begin() + static_cast<long>(i),
                                  fit.averaged.begin() + static_cast<long>(i + 4));
            fit.window_slopes.push_back(loglog_slope(t, f, p));
        }
        auto [lo, hi] = std::minmax_element(fit.window_slopes.begin(), fit.window_slopes.end());
        fit.beta_minus_hat = *lo;
        fit.beta_plus_hat = *hi;
        fits.push_back(std::move(fit));
    }
    return fits;
}

TransportFit fit_beta(const PotentialSpec& spec, double p, const std::vector<double>& T_grid, double tol) {
    return fit_beta(spec, std::vector<double>{p}, T_grid, tol).front();
}

std::string fits_to_json(const PotentialSpec& spec, const std::vector<TransportFit>& fits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fits)
        arr.push_back({{"p", f.p},
                       {"T_grid", f.T_grid},
                       {"averaged", f.averaged},
                       {"window_slopes", f.window_slopes},
                       {"beta_plus_hat", f.beta_plus_hat},
                       {"beta_minus_hat", f.beta_minus_hat},
                       {"max_norm_drift", f.max_norm_drift}});
    nlohmann::json j{{"freq", spec.freq.to_string()},
                     {"lambda", spec.lambda},
                     {"omega", spec.omega},
                     {"L", spec.L},
                     {"fits", arr}};
    if (!fits.empty()) {
        auto [lo, hi] = std::minmax_element(fits.begin(), fits.end(),
                                            [](const TransportFit& a, const TransportFit& b) { return a.p < b.p; });
        j["finite_p_proxies"] = {{"label", "finite-p proxies for the p->0 and p->inf limits"},
                                 {"p_min", lo->p},
                                 {"lower_beta_plus", lo->beta_plus_hat},
                                 {"lower_beta_minus", lo->beta_minus_hat},
                                 {"p_max", hi->p},
                                 {"upper_beta_plus", hi->beta_plus_hat},
                                 {"upper_beta_minus", hi->beta_minus_hat}};
    }
    return j.dump(2);
}

} // namespace sturmian
