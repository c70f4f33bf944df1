#include "sturmian/cli.hpp"

#include "sturmian/bands.hpp"
#include "sturmian/contfrac.hpp"
#include "sturmian/dynamics.hpp"
#include "sturmian/errors.hpp"
#include "sturmian/tracemap.hpp"
#include "sturmian/transport.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sturmian {

namespace {

using nlohmann::json;

// Shortest representation that parses back to the same double.
std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
    throw ValidationError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": " +
                          std::string(why));
}

double to_double(std::string_view key, std::string_view v) {
    v = trim(v);
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v, "expected a number");
    return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
    v = trim(v);
    Int x{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "expected an integer");
    return x;
}

bool to_bool(std::string_view key, std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "expected true or false");
}

// Comma-separated list, or lo:hi:n for a geometric grid.
std::vector<double> to_list(std::string_view key, std::string_view v) {
    v = trim(v);
    std::vector<double> out;
    if (v.empty()) return out;
    if (v.find(':') != std::string_view::npos) {
        auto a = v.find(':'), b = v.find(':', a + 1);
        if (b == std::string_view::npos) bad_value(key, v, "expected lo:hi:n");
        double lo = to_double(key, v.substr(0, a)), hi = to_double(key, v.substr(a + 1, b - a - 1));
        auto n = to_int<std::size_t>(key, v.substr(b + 1));
        try {
            return geometric_grid(lo, hi, n);
        } catch (const ValidationError& e) {
            bad_value(key, v, e.what());
        }
    }
    std::size_t start = 0;
    while (start <= v.size()) {
        auto end = v.find(',', start);
        if (end == std::string_view::npos) end = v.size();
        out.push_back(to_double(key, v.substr(start, end - start)));
        start = end + 1;
    }
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
}

struct Field {
    std::string key;
    std::string flags;
    bool is_switch = false;
    std::function<std::optional<std::string>(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
Field opt(std::string key, std::string flags, std::optional<T> RunConfig::*m) {
    Field f{key, std::move(flags), false, nullptr, nullptr};
    f.get = [m](const RunConfig& c) -> std::optional<std::string> {
        if (!(c.*m)) return std::nullopt;
        if constexpr (std::is_same_v<T, std::string>) return *(c.*m);
        else if constexpr (std::is_floating_point_v<T>) return fmt(*(c.*m));
        else return std::to_string(*(c.*m));
    };
    f.set = [m, key](RunConfig& c, std::string_view v) {
        if constexpr (std::is_same_v<T, std::string>) c.*m = std::string(trim(v));
        else if constexpr (std::is_floating_point_v<T>) c.*m = to_double(key, v);
        else c.*m = to_int<T>(key, v);
    };
    return f;
}

Field list(std::string key, std::string flags, std::vector<double> RunConfig::*m) {
    Field f{key, std::move(flags), false, nullptr, nullptr};
    f.get = [m](const RunConfig& c) -> std::optional<std::string> {
        if ((c.*m).empty()) return std::nullopt;
        return join(c.*m);
    };
    f.set = [m, key](RunConfig& c, std::string_view v) { c.*m = to_list(key, v); };
    return f;
}

Field flag(std::string key, std::string flags, bool RunConfig::*m) {
    Field f{key, std::move(flags), true, nullptr, nullptr};
    f.get = [m](const RunConfig& c) -> std::optional<std::string> {
        if (!(c.*m)) return std::nullopt;
        return std::string("true");
    };
    f.set = [m, key](RunConfig& c, std::string_view v) { c.*m = to_bool(key, v); };
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> t;
        Field sub{"subcommand", "", false, nullptr, nullptr};
        sub.get = [](const RunConfig& c) -> std::optional<std::string> {
            if (c.subcommand.empty()) return std::nullopt;
            return c.subcommand;
        };
        sub.set = [](RunConfig& c, std::string_view v) { c.subcommand = std::string(trim(v)); };
        t.push_back(sub);
        t.push_back(opt("freq", "--freq", &RunConfig::freq));
        t.push_back(opt("lambda", "--lambda", &RunConfig::lambda));
        t.push_back(list("lambda_grid", "--lambda-grid", &RunConfig::lambda_grid));
        t.push_back(opt("delta", "--delta", &RunConfig::delta));
        t.push_back(opt("K", "--K,--k,--k-max", &RunConfig::K));
        t.push_back(opt("tol", "--tol", &RunConfig::tol));
        t.push_back(opt("seed", "--seed", &RunConfig::seed));
        t.push_back(opt("samples", "--samples", &RunConfig::samples));
        t.push_back(opt("output", "-o,--output", &RunConfig::output));
        Field format{"format", "--format", false, nullptr, nullptr};
        format.get = [](const RunConfig& c) -> std::optional<std::string> { return c.format; };
        format.set = [](RunConfig& c, std::string_view v) {
            v = trim(v);
            if (v != "csv" && v != "json") bad_value("format", v, "expected csv or json");
            c.format = std::string(v);
        };
        t.push_back(format);
        Field threads{"threads", "--threads", false, nullptr, nullptr};
        threads.get = [](const RunConfig& c) -> std::optional<std::string> {
            if (c.threads == 0) return std::nullopt;
            return std::to_string(c.threads);
        };
        threads.set = [](RunConfig& c, std::string_view v) { c.threads = to_int<unsigned>("threads", v); };
        t.push_back(threads);
        t.push_back(flag("blocks", "--blocks", &RunConfig::blocks));
        t.push_back(opt("z", "--z", &RunConfig::z));
        t.push_back(opt("z_min", "--z-min", &RunConfig::z_min));
        t.push_back(opt("z_max", "--z-max", &RunConfig::z_max));
        t.push_back(opt("z_points", "--z-points", &RunConfig::z_points));
        t.push_back(opt("omega", "--omega", &RunConfig::omega));
        t.push_back(opt("L", "--L", &RunConfig::L));
        t.push_back(list("T_grid", "--T-grid", &RunConfig::T_grid));
        t.push_back(list("p_grid", "--p-grid", &RunConfig::p_grid));
        t.push_back(opt("plot", "--plot", &RunConfig::plot));
        t.push_back(opt("max_bands", "--max-bands", &RunConfig::max_bands));
        t.push_back(opt("prune_ratio", "--prune-ratio", &RunConfig::prune_ratio));
        t.push_back(flag("evidence", "--evidence", &RunConfig::evidence));
        t.push_back(opt("max_coeff", "--max-coeff", &RunConfig::max_coeff));
        t.push_back(opt("beam", "--beam", &RunConfig::beam));
        return t;
    }();
    return table;
}

const std::vector<std::string> kSubcommands{"cf", "bands", "exponent", "escape", "mc", "dynamics"};

// ---------------------------------------------------------------- commands

struct Result {
    std::string main;
    std::vector<std::pair<std::string, std::string>> extras; // path, content
};

std::string csv_header(const RunConfig& cfg) {
    std::string cfg_line = emit_config(cfg);
    for (auto& ch : cfg_line)
        if (ch == '\n') ch = ';';
    if (!cfg_line.empty() && cfg_line.back() == ';') cfg_line.pop_back();
    return "# sturmian " + std::string(kToolVersion) + "\n# config: " + cfg_line + "\n";
}

FrequencySpec freq_of(const RunConfig& cfg) { return FrequencySpec::parse(*cfg.freq); }

HierarchyOptions hierarchy_options(const RunConfig& cfg) {
    HierarchyOptions o;
    if (cfg.tol) o.tol = *cfg.tol;
    o.threads = cfg.threads;
    if (cfg.max_bands) o.max_bands = *cfg.max_bands;
    if (cfg.prune_ratio) o.prune_ratio = *cfg.prune_ratio;
    return o;
}

Result cmd_cf(const RunConfig& cfg) {
    auto f = freq_of(cfg);
    const int K = *cfg.K;
    if (cfg.blocks) {
        auto d = block_decompose(f.coefficients(static_cast<std::size_t>(K)));
        if (cfg.format == "json") {
            json j{{"freq", f.to_string()}, {"K", K}, {"s", d.s()}, {"exponent_sum", d.exponent_sum},
                   {"runs", d.runs}, {"segments", d.segments}};
            return {j.dump(2) + "\n", {}};
        }
        std::ostringstream os;
        os << csv_header(cfg) << "s,exponent_sum,runs,segments\n" << d.s() << ',' << d.exponent_sum << ',';
        for (std::size_t i = 0; i < d.runs.size(); ++i) os << (i ? " " : "") << d.runs[i];
        os << ',';
        for (std::size_t i = 0; i < d.segments.size(); ++i) {
            os << (i ? "|" : "") << '[';
            for (std::size_t j = 0; j < d.segments[i].size(); ++j) os << (j ? " " : "") << d.segments[i][j];
            os << ']';
        }
        os << '\n';
        return {os.str(), {}};
    }
    auto conv = convergents(f, K);
    if (cfg.format == "json") {
        json rows = json::array();
        for (int k = -1; k <= conv.max_index(); ++k)
            rows.push_back({{"k", k}, {"p", conv.p(k).get_str()}, {"q", conv.q(k).get_str()}});
        json j{{"freq", f.to_string()}, {"K", K}, {"convergents", rows}};
        return {j.dump(2) + "\n", {}};
    }
    return {csv_header(cfg) + conv.to_csv(), {}};
}

Result cmd_bands(const RunConfig& cfg) {
    auto h = build_hierarchy(freq_of(cfg), *cfg.lambda, *cfg.K, hierarchy_options(cfg));
    if (cfg.format == "json") return {bands_to_json(h) + "\n", {}};
    std::ostringstream os;
    os.precision(12);
    os << csv_header(cfg);
    for (const auto& lv : h.levels)
        os << "# level " << lv.order << " n_I=" << lv.counts[0] << " n_II=" << lv.counts[1] << " n_III=" << lv.counts[2]
           << " max_length=" << lv.max_length << " min_deriv=" << lv.min_deriv << " measure=" << lv.measure
           << (lv.pruned ? " pruned" : "") << '\n';
    os << bands_to_csv(h);
    return {os.str(), {}};
}

Result cmd_exponent(const RunConfig& cfg) {
    auto f = freq_of(cfg);
    const int K = *cfg.K;
    auto conv = convergents(f, K);
    std::vector<double> grid = cfg.lambda_grid.empty() ? std::vector<double>{*cfg.lambda} : cfg.lambda_grid;
    std::vector<ExponentReport> rows;
    for (double lambda : grid) rows.push_back(exponent_estimate(build_hierarchy(f, lambda, K, hierarchy_options(cfg)), conv, K));
    std::optional<Asymptote> target;
    try {
        target = constant_type_asymptote(f);
    } catch (const ValidationError&) {
    }
    if (cfg.format == "json") {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(json::parse(r.to_json()));
        json j{{"freq", f.to_string()}, {"K", K}, {"rows", arr}};
        if (target)
            j["asymptote"] = {{"value", target->value},
                              {"log_q_rate", target->log_q_rate},
                              {"run_density", target->run_density},
                              {"conjectural", target->conjectural}};
        return {j.dump(2) + "\n", {}};
    }
    std::ostringstream os;
    os << csv_header(cfg);
    if (target)
        os << "# lambda->inf limit of alpha_hat*log(lambda): " << fmt(target->value)
           << (target->conjectural ? " (conjectural)" : "") << '\n';
    os << exponent_sweep_csv(rows);
    return {os.str(), {}};
}

Result cmd_escape(const RunConfig& cfg) {
    auto f = freq_of(cfg);
    std::vector<double> zs;
    if (cfg.z) {
        zs = {*cfg.z};
    } else {
        const std::size_t n = *cfg.z_points;
        for (std::size_t i = 0; i < n; ++i)
            zs.push_back(n == 1 ? *cfg.z_min
                                : *cfg.z_min + (*cfg.z_max - *cfg.z_min) * static_cast<double>(i) /
                                                   static_cast<double>(n - 1));
    }
    std::vector<EscapeReport> reps;
    for (double z : zs) reps.push_back(escape_classify(f, *cfg.lambda, Complex(z, 0.0), *cfg.delta, *cfg.K));
    auto verdict = [](const EscapeReport& r) {
        return r.verdict == EscapeVerdict::escaped ? std::string("escaped") : std::string("bounded_up_to");
    };
    if (cfg.format == "json") {
        json arr = json::array();
        for (std::size_t i = 0; i < zs.size(); ++i)
            arr.push_back({{"z", zs[i]},
                           {"verdict", verdict(reps[i])},
                           {"k0", reps[i].k0},
                           {"running_max", reps[i].running_max}});
        json j{{"freq", f.to_string()}, {"lambda", *cfg.lambda}, {"delta", *cfg.delta}, {"k_max", *cfg.K},
               {"rows", arr}};
        return {j.dump(2) + "\n", {}};
    }
    std::ostringstream os;
    os << csv_header(cfg) << "z,verdict,k0,k_max,delta,running_max\n";
    for (std::size_t i = 0; i < zs.size(); ++i)
        os << fmt(zs[i]) << ',' << verdict(reps[i]) << ',' << reps[i].k0 << ',' << reps[i].k_max << ','
           << fmt(reps[i].delta) << ',' << fmt(reps[i].running_max) << '\n';
    return {os.str(), {}};
}

Result cmd_mc(const RunConfig& cfg) {
    const auto seed = *cfg.seed;
    if (cfg.evidence) {
        EvidenceOptions o;
        if (cfg.max_coeff) o.max_coeff = *cfg.max_coeff;
        if (cfg.beam) o.beam = *cfg.beam;
        if (cfg.prune_ratio) o.prune_ratio = *cfg.prune_ratio;
        o.threads = cfg.threads;
        auto t = ae_evidence(seed, *cfg.samples, *cfg.lambda, *cfg.K, o);
        if (cfg.format == "json") return {t.to_json() + "\n", {}};
        std::ostringstream os;
        os << csv_header(cfg) << "# finite-k evidence, not a proof; rejected=" << t.rejected
           << " mean=" << fmt(t.alpha_hat_band_loglambda.mean) << " se=" << fmt(t.alpha_hat_band_loglambda.se)
           << " reference=" << fmt(t.reference) << '\n'
           << t.to_csv();
        return {os.str(), {}};
    }
    auto r = gauss_monte_carlo(seed, *cfg.samples, static_cast<std::size_t>(*cfg.K), cfg.threads);
    if (cfg.format == "json") return {r.to_json() + "\n", {}};
    const auto c = ae_constants();
    std::ostringstream os;
    os << csv_header(cfg) << "# reference digit1_freq=" << fmt(c.digit1_freq) << " log_qk_over_k=" << fmt(c.levy)
       << " combined_slope=" << fmt(c.ae_band_slope) << " odd_run_density=" << fmt(c.odd_run_density) << '\n'
       << "seed,samples,k,digit1_freq,digit1_freq_se,odd_run_density,odd_run_density_se,combined_slope,"
          "combined_slope_se,log_qk_over_k,log_qk_over_k_se\n"
       << r.seed << ',' << r.samples << ',' << r.k;
    for (const Estimate* e : {&r.digit1_freq, &r.odd_run_density, &r.combined_slope, &r.log_qk_over_k})
        os << ',' << fmt(e->mean) << ',' << fmt(e->se);
    os << '\n';
    return {os.str(), {}};
}

Result cmd_dynamics(const RunConfig& cfg) {
    PotentialSpec spec{freq_of(cfg), *cfg.lambda, *cfg.omega, *cfg.L};
    EvolveOptions eo;
    eo.tol = *cfg.tol;
    auto states = evolve(spec, fit_times(cfg.T_grid), eo);
    auto fits = fit_beta_from_states(states, cfg.p_grid, cfg.T_grid);
    const std::string fit_json = fits_to_json(spec, fits) + "\n";
    if (cfg.format == "json") return {fit_json, {}};

    std::ostringstream ts;
    ts << csv_header(cfg) << "t,norm";
    for (double p : cfg.p_grid) ts << ",moment_p" << fmt(p);
    ts << '\n';
    for (const auto& s : states) {
        ts << fmt(s.time) << ',' << fmt(s.norm2());
        for (double p : cfg.p_grid) ts << ',' << fmt(s.time == 0.0 ? 0.0 : moments(s, p).value);
        ts << '\n';
    }
    std::ostringstream avg;
    avg << "T,p,averaged\n";
    for (const auto& f : fits)
        for (std::size_t i = 0; i < f.T_grid.size(); ++i)
            avg << fmt(f.T_grid[i]) << ',' << fmt(f.p) << ',' << fmt(f.averaged[i]) << '\n';

    Result r;
    if (cfg.output) {
        r.main = ts.str();
        r.extras.emplace_back(*cfg.output + ".avg.csv", csv_header(cfg) + avg.str());
        r.extras.emplace_back(*cfg.output + ".fit.json", fit_json);
    } else {
        std::string commented;
        std::istringstream in(fit_json);
        for (std::string line; std::getline(in, line);) commented += "# " + line + "\n";
        r.main = ts.str() + "# averaged series\n" + avg.str() + "# fit\n" + commented;
    }
    return r;
}

std::string plot_script(const RunConfig& cfg) {
    const std::string& data = *cfg.output;
    std::string using_clause = "1:2", extra;
    if (cfg.subcommand == "cf") using_clause = "1:(log($3))";
    else if (cfg.subcommand == "bands") using_clause = "4:1";
    else if (cfg.subcommand == "exponent") { using_clause = "1:5"; extra = "set logscale x\n"; }
    else if (cfg.subcommand == "escape") { using_clause = "1:6"; extra = "set logscale y\n"; }
    else if (cfg.subcommand == "mc") using_clause = "1:3";
    else if (cfg.subcommand == "dynamics") { using_clause = "1:3"; extra = "set logscale xy\n"; }
    return "# gnuplot script for " + data + "\nset datafile separator ','\nset datafile commentschars '#'\n"
           "set key autotitle columnhead\n" + extra + "plot '" + data + "' using " + using_clause +
           " with linespoints\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ValidationError("output: cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw NumericError("output: write to '" + path + "' failed");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

} // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    for (const auto& f : fields())
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    throw ValidationError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
}

std::string emit_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields())
        if (auto v = f.get(cfg)) out += f.key + "=" + *v + "\n";
    return out;
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ValidationError("config line '" + std::string(line) + "' lacks '='");
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

void validate_config(RunConfig& cfg) {
    const auto& sc = cfg.subcommand;
    require(std::find(kSubcommands.begin(), kSubcommands.end(), sc) != kSubcommands.end(),
            "subcommand: unknown '" + sc + "'");
    std::optional<FrequencySpec> f;
    if (sc != "mc") {
        require(cfg.freq.has_value(), "freq: required for " + sc);
        f = FrequencySpec::parse(*cfg.freq);
    }
    if (cfg.tol) require(*cfg.tol > 0.0, "tol: must be > 0");
    if (cfg.prune_ratio) require(*cfg.prune_ratio >= 0.0 && *cfg.prune_ratio < 1.0, "prune_ratio: must lie in [0, 1)");
    if (cfg.plot) {
        require(cfg.output.has_value(), "plot: needs --output so the script can reference the data file");
        require(cfg.format == "csv", "plot: only available with --format csv");
    }
    auto need_lambda = [&](double lo, bool strict) {
        require(cfg.lambda.has_value(), "lambda: required for " + sc);
        require(strict ? *cfg.lambda > lo : *cfg.lambda >= lo,
                "lambda: must be " + std::string(strict ? "> " : ">= ") + fmt(lo) + " for " + sc);
    };

    if (sc == "cf") {
        if (!cfg.K) {
            require(!f->has_tail(), "K: required when the frequency has an infinite tail");
            cfg.K = static_cast<int>(f->prefix().size());
        }
        require(*cfg.K >= 0, "K: must be >= 0");
        if (auto n = f->available()) require(static_cast<std::size_t>(*cfg.K) <= *n, "K: exceeds the explicit prefix");
    } else if (sc == "bands") {
        need_lambda(4.0, true);
        require(cfg.K.has_value(), "K: required for bands");
        require(*cfg.K >= 0, "K: must be >= 0");
    } else if (sc == "exponent") {
        require(cfg.K.has_value(), "K: required for exponent");
        require(*cfg.K >= 1, "K: must be >= 1");
        require(cfg.lambda.has_value() != !cfg.lambda_grid.empty(), "lambda: give exactly one of lambda or lambda_grid");
        if (cfg.lambda) need_lambda(4.0, true);
        for (double l : cfg.lambda_grid) require(l > 4.0, "lambda_grid: every value must be > 4");
    } else if (sc == "escape") {
        need_lambda(0.0, true);
        require(cfg.K.has_value(), "K: required for escape (k_max)");
        require(*cfg.K >= 0, "K: must be >= 0");
        if (!cfg.delta) cfg.delta = 0.1;
        require(*cfg.delta > 0.0, "delta: must be > 0");
        if (!cfg.z) {
            require(cfg.z_min && cfg.z_max && cfg.z_points, "z: give z, or z_min, z_max and z_points");
            require(*cfg.z_points >= 1, "z_points: must be >= 1");
            require(*cfg.z_min <= *cfg.z_max, "z_min: must not exceed z_max");
        }
    } else if (sc == "mc") {
        require(cfg.samples.has_value(), "samples: required for mc");
        require(*cfg.samples >= 1, "samples: must be >= 1");
        require(cfg.K.has_value(), "K: required for mc (depth k)");
        if (!cfg.seed) cfg.seed = 1;
        if (cfg.evidence) {
            need_lambda(20.0, false);
            require(*cfg.K >= 1, "K: must be >= 1");
            if (cfg.beam) require(*cfg.beam >= 1, "beam: must be >= 1");
            if (cfg.max_coeff) require(*cfg.max_coeff >= 1, "max_coeff: must be >= 1");
        } else {
            require(*cfg.K >= 100, "K: must be >= 100 for Monte Carlo statistics");
        }
    } else if (sc == "dynamics") {
        need_lambda(0.0, false);
        if (!cfg.omega) cfg.omega = 0.0;
        require(*cfg.omega >= 0.0 && *cfg.omega < 1.0, "omega: must lie in [0, 1)");
        require(cfg.T_grid.size() >= 8, "T_grid: needs at least 8 geometric points");
        if (cfg.p_grid.empty()) cfg.p_grid = {2.0};
        for (double p : cfg.p_grid) require(p > 0.0, "p_grid: every p must be > 0");
        if (!cfg.tol) cfg.tol = 1e-8;
        require(*cfg.tol >= 1e-12, "tol: tol-unachievable below 1e-12");
        if (!cfg.L) cfg.L = required_window(*cfg.lambda, fit_times(cfg.T_grid).back());
        require(*cfg.L >= 1, "L: must be >= 1");
    }
}

int run_config(RunConfig cfg, std::ostream& out, std::ostream& err) {
    try {
        validate_config(cfg);
        Result r;
        const auto& sc = cfg.subcommand;
        if (sc == "cf") r = cmd_cf(cfg);
        else if (sc == "bands") r = cmd_bands(cfg);
        else if (sc == "exponent") r = cmd_exponent(cfg);
        else if (sc == "escape") r = cmd_escape(cfg);
        else if (sc == "mc") r = cmd_mc(cfg);
        else r = cmd_dynamics(cfg);
        if (cfg.output) write_file(*cfg.output, r.main);
        else out << r.main;
        for (const auto& [path, content] : r.extras) write_file(path, content);
        if (cfg.plot) write_file(*cfg.plot, plot_script(cfg));
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return 3;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral band hierarchies, trace maps and transport for Sturmian Hamiltonians"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::map<std::string, std::string> values;
    std::map<std::string, std::optional<std::string>> slots;
    std::map<std::string, bool> switches;
    std::string config_path;
    std::vector<std::string> settings;
    const std::map<std::string, std::string> about{
        {"cf", "convergents or block decomposition of a frequency"},
        {"bands", "spectral generating band hierarchy"},
        {"exponent", "finite-k transport exponent estimates over a lambda grid"},
        {"escape", "trace escape classification over an energy grid"},
        {"mc", "Gauss-measure Monte Carlo statistics, or the a.e. evidence table with --evidence"},
        {"dynamics", "wave packet propagation, moments and exponent fits"}};
    for (const auto& f : fields()) {
        if (f.flags.empty()) continue;
        if (f.is_switch) switches[f.key] = false;
        else slots[f.key];
    }
    for (const auto& name : kSubcommands) {
        auto* sub = app.add_subcommand(name, about.at(name));
        for (const auto& f : fields()) {
            if (f.flags.empty()) continue;
            if (f.is_switch) sub->add_flag(f.flags, switches[f.key]);
            else sub->add_option(f.flags, slots[f.key]);
        }
        sub->add_option("--config", config_path, "key=value file; flags override it");
        sub->add_option("settings", settings, "extra key=value settings");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ValidationError("config: cannot read '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            cfg = parse_config(ss.str());
        }
        for (const auto& s : settings) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw ValidationError("setting '" + s + "' is not key=value");
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [key, v] : slots)
            if (v) apply_setting(cfg, key, *v);
        for (const auto& [key, on] : switches)
            if (on) apply_setting(cfg, key, "true");
        cfg.subcommand = app.get_subcommands().front()->get_name();
        return run_config(std::move(cfg), out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace sturmian
