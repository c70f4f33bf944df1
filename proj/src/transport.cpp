#include "sturmian/transport.hpp"

#include "sturmian/errors.hpp"
#include "sturmian/parallel.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sturmian {

namespace {

// Neumaier compensated sum, accumulated in index order.
class Accumulator {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

Estimate estimate(const std::vector<double>& v) {
    Accumulator s;
    for (double x : v) s.add(x);
    const double n = static_cast<double>(v.size());
    const double mean = s.value() / n;
    Accumulator ss;
    for (double x : v) ss.add((x - mean) * (x - mean));
    const double var = v.size() > 1 ? ss.value() / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

nlohmann::json to_j(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}}; }

double log_phi() { return std::log((1.0 + std::sqrt(5.0)) / 2.0); }

// (1/k) log q_k from the ratios q_j / q_{j-1} = a_j + q_{j-2}/q_{j-1}.
double log_q_rate(const std::vector<Coeff>& a) {
    double r = 0.0, s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        r = static_cast<double>(a[j]) + (j ? 1.0 / r : 0.0);
        s += std::log(r);
    }
    return s / static_cast<double>(a.size());
}

bool is_rotation_of(const std::vector<Coeff>& p, const std::vector<Coeff>& q) {
    if (p.size() != q.size()) return false;
    for (std::size_t s = 0; s < p.size(); ++s) {
        bool eq = true;
        for (std::size_t i = 0; i < p.size() && eq; ++i) eq = p[(i + s) % p.size()] == q[i];
        if (eq) return true;
    }
    return false;
}

std::vector<Coeff> primitive_period(const std::vector<Coeff>& p) {
    const std::size_t n = p.size();
    for (std::size_t d = 1; d < n; ++d) {
        if (n % d) continue;
        bool ok = true;
        for (std::size_t i = d; i < n && ok; ++i) ok = p[i] == p[i - d];
        if (ok) return {p.begin(), p.begin() + static_cast<std::ptrdiff_t>(d)};
    }
    return p;
}

} // namespace

std::string ExponentReport::to_json() const {
    nlohmann::json j{{"k", k},
                     {"lambda", lambda},
                     {"log_qk_over_k", log_qk_over_k},
                     {"log_min_deriv_over_k", log_min_deriv_over_k},
                     {"log_maxband_over_k", log_maxband_over_k},
                     {"alpha_hat_deriv", alpha_hat_deriv},
                     {"alpha_hat_band", alpha_hat_band},
                     {"alpha_hat_band_loglambda", alpha_hat_band * std::log(lambda)},
                     {"degenerate", degenerate},
                     {"below_lambda_20", below_lambda_20},
                     {"pruned", pruned}};
    return j.dump(2);
}

ExponentReport exponent_estimate(const Hierarchy& h, const Convergents& conv, int k) {
    if (k < 0 || static_cast<std::size_t>(k) >= h.levels.size())
        throw ValidationError("exponent_estimate: level " + std::to_string(k) + " was not constructed");
    if (k > conv.max_index()) throw ValidationError("exponent_estimate: q_k not available for k = " + std::to_string(k));
    const auto& lvl = h.levels[static_cast<std::size_t>(k)];
    ExponentReport r;
    r.k = k;
    r.lambda = h.lambda;
    r.below_lambda_20 = h.lambda < 20.0;
    r.pruned = lvl.pruned;
    for (std::size_t j = 0; j <= static_cast<std::size_t>(k); ++j) r.pruned = r.pruned || h.levels[j].pruned;
    if (k == 0) {
        r.degenerate = true;
        return r;
    }
    const double kd = static_cast<double>(k);
    const double lq = log_of(conv.q(k));
    const double lmin = std::log(lvl.min_deriv);
    const double lmax = std::log(lvl.max_length);
    r.log_qk_over_k = lq / kd;
    r.log_min_deriv_over_k = lmin / kd;
    r.log_maxband_over_k = lmax / kd;
    if (lmin > 0.0) r.alpha_hat_deriv = lq / lmin;
    else r.degenerate = true;
    if (lmax < 0.0) r.alpha_hat_band = lq / -lmax;
    else r.degenerate = true;
    return r;
}

std::string exponent_sweep_csv(const std::vector<ExponentReport>& rows) {
    std::ostringstream os;
    os.precision(12);
    os << "lambda,k,alpha_hat_band,alpha_hat_deriv,alpha_hat_band_loglambda\n";
    for (const auto& r : rows)
        os << r.lambda << ',' << r.k << ',' << r.alpha_hat_band << ',' << r.alpha_hat_deriv << ','
           << r.alpha_hat_band * std::log(r.lambda) << '\n';
    return os.str();
}

MaxBandBounds maxband_bounds(const FrequencySpec& freq, double lambda, int k) {
    if (!(lambda >= 20.0)) throw ValidationError("maxband_bounds: lambda must be >= 20");
    if (k < 1) throw ValidationError("maxband_bounds: k must be >= 1");
    MaxBandBounds b;
    b.k = k;
    b.lambda = lambda;
    const auto ku = static_cast<std::size_t>(k);
    const double log_delta = log_geometric_mean_delta(freq, ku);
    b.delta_k = std::exp(log_delta);
    b.exponent_sum = block_decompose(freq, ku).exponent_sum;
    const double kd = static_cast<double>(k);
    const double core = -kd * log_delta + (-kd + static_cast<double>(b.exponent_sum)) * std::log(lambda);
    b.lower = -kd * std::log(8.0) + core;
    b.upper = kd * std::log(48.0) + core;
    return b;
}

MaxBandCheck verify_maxband(const Hierarchy& h, const MaxBandBounds& bounds) {
    if (bounds.lambda != h.lambda) throw ValidationError("verify_maxband: bounds were computed for another lambda");
    if (bounds.k < 1 || static_cast<std::size_t>(bounds.k) >= h.levels.size())
        throw ValidationError("verify_maxband: level " + std::to_string(bounds.k) + " was not constructed");
    MaxBandCheck c;
    c.log_max = std::log(h.levels[static_cast<std::size_t>(bounds.k)].max_length);
    c.lower_margin = c.log_max - bounds.lower;
    c.upper_margin = bounds.upper - c.log_max;
    c.ok = c.lower_margin >= 0.0 && c.upper_margin >= 0.0;
    return c;
}

KoebeRadii koebe_radii_bounds(double min_deriv, double delta) {
    if (!(delta > 0.0)) throw ValidationError("koebe_radii_bounds: delta must be > 0");
    if (!(min_deriv > 0.0)) throw ValidationError("koebe_radii_bounds: min_deriv must be > 0");
    const double den = (2.0 + delta) * (2.0 + 2.0 * delta) * (2.0 + 2.0 * delta);
    return {delta * delta / den * min_deriv, (4.0 + 3.0 * delta) * (4.0 + 3.0 * delta) / den * min_deriv};
}

Asymptote constant_type_asymptote(const FrequencySpec& freq) {
    std::vector<Coeff> period;
    if (auto* c = std::get_if<ConstantTail>(&freq.tail())) period = {c->m};
    else if (auto* p = std::get_if<PeriodicTail>(&freq.tail())) period = p->period;
    else throw ValidationError("constant_type_asymptote: frequency has no constant or periodic tail");
    period = primitive_period(period);
    const std::size_t n = period.size();

    // Perron eigenvalue of prod [[a,1],[1,0]], kept normalized.
    std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
    double log_scale = 0.0;
    for (Coeff a : period) {
        const double ad = static_cast<double>(a);
        m = {m[0] * ad + m[1], m[0], m[2] * ad + m[3], m[2]};
        const double s = std::max({std::abs(m[0]), std::abs(m[1]), std::abs(m[2]), std::abs(m[3])});
        for (auto& e : m) e /= s;
        log_scale += std::log(s);
    }
    const double tr = m[0] + m[3], det = m[0] * m[3] - m[1] * m[2];
    const double eig = tr / 2.0 + std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    Asymptote out;
    out.log_q_rate = (std::log(eig) + log_scale) / static_cast<double>(n);

    if (std::all_of(period.begin(), period.end(), [](Coeff a) { return a == 1; })) {
        out.run_density = 0.5;
    } else {
        // Runs of 1's counted cyclically, starting after a coefficient >= 2.
        std::size_t start = 0;
        while (period[start] == 1) ++start;
        std::size_t sum = 0, run = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            if (period[(start + i) % n] == 1) {
                ++run;
            } else {
                sum += (run + 1) / 2;
                run = 0;
            }
        }
        out.run_density = static_cast<double>(sum) / static_cast<double>(n);
    }
    out.value = out.log_q_rate / (1.0 - out.run_density);
    const bool listed = n == 1 || is_rotation_of(period, {1, 2}) || is_rotation_of(period, {1, 1, 2, 2});
    out.conjectural = !listed;
    return out;
}

AeConstants ae_constants() {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double ln2 = std::numbers::ln2;
    return {pi2 / (12.0 * ln2), pi2 / (12.0 * log_phi()), -log_phi() / ln2, std::log(4.0 / 3.0) / ln2,
            -std::log((3.0 + std::sqrt(5.0)) / 6.0) / ln2};
}

std::string MonteCarloReport::to_json() const {
    nlohmann::json j{{"seed", seed},
                     {"samples", samples},
                     {"k", k},
                     {"digit1_freq", to_j(digit1_freq)},
                     {"odd_run_density", to_j(odd_run_density)},
                     {"combined_slope", to_j(combined_slope)},
                     {"log_qk_over_k", to_j(log_qk_over_k)}};
    return j.dump(2);
}

MonteCarloReport gauss_monte_carlo(std::uint64_t seed, std::size_t samples, std::size_t k, unsigned threads) {
    if (samples < 1) throw ValidationError("gauss_monte_carlo: samples must be >= 1");
    if (k < 100) throw ValidationError("gauss_monte_carlo: k must be >= 100");
    std::vector<double> d1(samples), odd(samples), slope(samples), lq(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto a = sample_gauss_one(seed, i, k);
        const double kd = static_cast<double>(k);
        auto bd = block_decompose(a);
        std::size_t ones = 0, odd_runs = 0;
        for (auto m : bd.runs) {
            ones += m;
            odd_runs += m % 2;
        }
        d1[i] = static_cast<double>(ones) / kd;
        odd[i] = static_cast<double>(odd_runs) / kd;
        slope[i] = -1.0 + static_cast<double>(bd.exponent_sum) / kd;
        lq[i] = log_q_rate(a);
    });
    MonteCarloReport r;
    r.seed = seed;
    r.samples = samples;
    r.k = k;
    r.digit1_freq = estimate(d1);
    r.odd_run_density = estimate(odd);
    r.combined_slope = estimate(slope);
    r.log_qk_over_k = estimate(lq);
    return r;
}

std::string EvidenceTable::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"sample_index", r.sample_index},
                      {"coeffs", r.coeffs},
                      {"alpha_hat_band_loglambda", r.alpha_hat_band_loglambda},
                      {"log_qk_over_k", r.log_qk_over_k},
                      {"log_maxband_over_k", r.log_maxband_over_k}});
    nlohmann::json j{{"label", "finite-k evidence, not a proof"},
                     {"lambda", lambda},
                     {"k", k},
                     {"max_coeff", options.max_coeff},
                     {"beam", options.beam},
                     {"rejected", rejected},
                     {"alpha_hat_band_loglambda", to_j(alpha_hat_band_loglambda)},
                     {"reference", reference},
                     {"rows", std::move(rs)}};
    return j.dump(2);
}

std::string EvidenceTable::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "sample_index,coeffs,alpha_hat_band_loglambda,log_qk_over_k,log_maxband_over_k\n";
    for (const auto& r : rows) {
        os << r.sample_index << ',';
        for (std::size_t i = 0; i < r.coeffs.size(); ++i) os << (i ? " " : "") << r.coeffs[i];
        os << ',' << r.alpha_hat_band_loglambda << ',' << r.log_qk_over_k << ',' << r.log_maxband_over_k << '\n';
    }
    return os.str();
}

EvidenceTable ae_evidence(std::uint64_t seed, std::size_t samples, double lambda, int k, const EvidenceOptions& opts) {
    if (samples < 1) throw ValidationError("ae_evidence: samples must be >= 1");
    if (k < 1) throw ValidationError("ae_evidence: k must be >= 1");
    if (!(lambda >= 20.0)) throw ValidationError("ae_evidence: lambda must be >= 20");
    if (opts.max_coeff < 1 || opts.beam < 1) throw ValidationError("ae_evidence: max_coeff and beam must be >= 1");
    EvidenceTable t;
    t.lambda = lambda;
    t.k = k;
    t.options = opts;
    t.reference = ae_constants().bound_thm1;
    const auto ku = static_cast<std::size_t>(k);

    std::vector<std::pair<std::size_t, std::vector<Coeff>>> drawn;
    for (std::size_t idx = 0; drawn.size() < samples; ++idx) {
        if (idx >= 1000 * samples) throw NumericError("ae_evidence: too many samples rejected by the coefficient cap");
        auto a = sample_gauss_one(seed, idx, ku);
        if (*std::max_element(a.begin(), a.end()) > opts.max_coeff) {
            ++t.rejected;
            continue;
        }
        drawn.emplace_back(idx, std::move(a));
    }

    t.rows.resize(samples);
    HierarchyOptions ho;
    ho.threads = 1;
    ho.max_bands = opts.beam;
    ho.prune_ratio = opts.prune_ratio;
    parallel_for(samples, opts.threads, [&](std::size_t i) {
        const auto& [idx, a] = drawn[i];
        auto f = FrequencySpec::explicit_only(a);
        auto h = build_hierarchy(f, lambda, k, ho);
        const double lq = log_q_rate(a);
        const double lmax = std::log(h.levels.back().max_length) / static_cast<double>(k);
        t.rows[i] = {idx, a, lq / -lmax * std::log(lambda), lq, lmax};
    });
    std::vector<double> v;
    for (const auto& r : t.rows) v.push_back(r.alpha_hat_band_loglambda);
    t.alpha_hat_band_loglambda = estimate(v);
    return t;
}

} // namespace sturmian
