#include "sturmian/bands.hpp"

#include "sturmian/detail/trace_kernel.hpp"
#include "sturmian/errors.hpp"
#include "sturmian/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace sturmian {

std::string to_string(BandType t) {
    switch (t) {
    case BandType::I: return "I";
    case BandType::II: return "II";
    case BandType::III: return "III";
    }
    return "?";
}

std::string to_string(Edge e) {
    switch (e) {
    case Edge::e12: return "e12";
    case Edge::e21: return "e21";
    case Edge::e23: return "e23";
    case Edge::e31: return "e31";
    case Edge::e33: return "e33";
    }
    return "?";
}

Coeff tau_of(Edge e, Coeff n) {
    if (n < 1) throw ValidationError("tau: n must be >= 1");
    switch (e) {
    case Edge::e12: return 1;
    case Edge::e21: return n + 1;
    case Edge::e23: return n;
    case Edge::e31: return n;
    case Edge::e33: return n - 1;
    }
    return 0;
}

Edge edge_between(BandType from, BandType to) {
    using T = BandType;
    if (from == T::I && to == T::II) return Edge::e12;
    if (from == T::II && to == T::I) return Edge::e21;
    if (from == T::II && to == T::III) return Edge::e23;
    if (from == T::III && to == T::I) return Edge::e31;
    if (from == T::III && to == T::III) return Edge::e33;
    throw ValidationError("no admissible edge " + to_string(from) + " -> " + to_string(to));
}

BandType edge_source(Edge e) {
    switch (e) {
    case Edge::e12: return BandType::I;
    case Edge::e21:
    case Edge::e23: return BandType::II;
    default: return BandType::III;
    }
}

BandType edge_target(Edge e) {
    switch (e) {
    case Edge::e12: return BandType::II;
    case Edge::e21:
    case Edge::e31: return BandType::I;
    default: return BandType::III;
    }
}

bool admissible(const Letter& a, const Letter& b) { return edge_target(a.e) == edge_source(b.e); }

std::string word_to_string(const BandWord& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += '-';
        out += to_string(w[i].e) + "/" + std::to_string(w[i].tau) + "/" + std::to_string(w[i].l);
    }
    return out;
}

void BandLevel::refresh_stats() {
    counts = {0, 0, 0};
    max_length = 0.0;
    min_deriv = std::numeric_limits<double>::infinity();
    measure = 0.0;
    for (const auto& b : bands) {
        ++counts[static_cast<std::size_t>(b.type)];
        max_length = std::max(max_length, b.length);
        min_deriv = std::min(min_deriv, b.deriv);
        measure += b.length;
    }
}

LevelStats level_stats(const BandLevel& level) {
    if (level.bands.empty()) throw ValidationError("level_stats: empty level");
    BandLevel copy;
    copy.bands = level.bands;
    copy.refresh_stats();
    return {copy.max_length, copy.min_deriv, copy.measure};
}

std::array<std::size_t, 3> next_counts(const std::array<std::size_t, 3>& c, Coeff a) {
    return {(a + 1) * c[1] + a * c[2], c[0], a * c[1] + (a - 1) * c[2]};
}

BandLevel level0(double lambda) {
    if (!(lambda > 4.0)) throw ValidationError("level0: lambda must be > 4");
    BandLevel lvl;
    lvl.order = 0;
    Band i;
    i.type = BandType::I;
    i.left = BigReal(lambda - 2.0, 64);
    i.right = BigReal(lambda + 2.0, 64);
    i.zero = BigReal(lambda, 64);
    i.length = 4.0;
    i.deriv = 1.0;
    Band iii;
    iii.type = BandType::III;
    iii.left = BigReal(-2.0, 64);
    iii.right = BigReal(2.0, 64);
    iii.zero = BigReal(0.0, 64);
    iii.length = 4.0;
    iii.deriv = 1.0;
    lvl.bands.push_back(std::move(iii));
    lvl.bands.push_back(std::move(i));
    lvl.refresh_stats();
    return lvl;
}

GeneratorValue eval_generator(std::span<const Coeff> coeffs, double lambda, BandType type, const BigReal& z) {
    detail::TraceWork<BigReal> w(z.precision());
    w.seed(z, lambda);
    w.run(coeffs, true);
    if (type == BandType::I) return {w.y, w.dy};
    return {w.x_cur, w.dx_cur};
}

namespace {

constexpr int kMaxRefinements = 6;
// Double arithmetic is used while |z| / (child length) stays below 2^kDoubleScale.
constexpr double kDoubleScale = 28.0;
constexpr double kOutMargin = 2.0 + 2e-9;

double to_d(double v) { return v; }
double to_d(const BigReal& v) { return v.to_double(); }

template <class S>
S from_big(const BigReal& v, mpfr_prec_t bits) {
    if constexpr (std::is_same_v<S, BigReal>) {
        BigReal r(bits);
        mpfr_set(r.raw(), v.raw(), MPFR_RNDN);
        return r;
    } else {
        return v.to_double();
    }
}

template <class S>
BigReal to_big(const S& v, mpfr_prec_t bits) {
    if constexpr (std::is_same_v<S, BigReal>) return v;
    else return BigReal(v, std::max<mpfr_prec_t>(bits, 53));
}

template <class S>
S mid_of(const S& a, const S& b) {
    if constexpr (std::is_same_v<S, BigReal>) return midpoint(a, b);
    else return a + 0.5 * (b - a);
}

template <class S>
struct Found {
    S left, right, zero;
    double deriv;
    bool y;
};

// Searches one parent interval for the components of {|x_{k+1}| <= 2} and
// {|y_{k+1}| <= 2}. Returns nullopt when a bisection ran out of precision.
template <class S>
class ChildSearch {
public:
    ChildSearch(const S& pl, const S& pr, std::span<const Coeff> coeffs, double lambda, mpfr_prec_t bits, double tol)
        : pl_(pl), pr_(pr), width_(pr - pl), coeffs_(coeffs), lambda_(lambda), tol_(tol),
          work_(make_work(bits)) {}

    // Throws NumericError on count mismatch after all refinements.
    std::optional<std::vector<Found<S>>> run(std::size_t nx, std::size_t ny, const std::string& where) {
        std::size_t n = 8 * std::max<std::size_t>(nx + ny, 1);
        for (int attempt = 0; attempt <= kMaxRefinements; ++attempt, n *= 4) {
            std::vector<double> gx(n + 1), gy(n + 1);
            for (std::size_t j = 0; j <= n; ++j) {
                eval(node(j, n), false);
                gx[j] = to_d(work_.x_cur);
                gy[j] = to_d(work_.y);
            }
            std::vector<Bracket> bx, by;
            if (!brackets(gx, nx, bx) || !brackets(gy, ny, by)) continue;
            std::vector<Found<S>> out;
            for (auto* set : {&bx, &by}) {
                const bool y = set == &by;
                for (const auto& b : *set) {
                    auto f = locate(b, n, y);
                    if (!f) return std::nullopt;
                    out.push_back(std::move(*f));
                }
            }
            std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.left < b.left; });
            return out;
        }
        throw NumericError("child-count-mismatch: expected " + std::to_string(nx) + " x-branch and " +
                           std::to_string(ny) + " y-branch children after " + std::to_string(kMaxRefinements) +
                           " refinements inside band " + where);
    }

private:
    struct Bracket {
        std::size_t i;  // sign change between nodes i and i+1
        std::size_t jl; // last node <= i outside [-2,2]
        std::size_t jr; // first node >= i+1 outside [-2,2]
    };

    static detail::TraceWork<S> make_work(mpfr_prec_t bits) {
        if constexpr (std::is_same_v<S, BigReal>) return detail::TraceWork<S>(bits);
        else return {};
    }

    void eval(const S& z, bool derivs) {
        work_.seed(z, lambda_);
        work_.run(coeffs_, derivs);
    }
    const S& gen(bool y) const { return y ? work_.y : work_.x_cur; }

    // Chebyshev-spaced nodes, computed with sin^2 so they stay distinct near the ends.
    S node(std::size_t j, std::size_t n) const {
        if (j == 0) return pl_;
        if (j == n) return pr_;
        const bool low = 2 * j <= n;
        const double s = std::sin(std::numbers::pi * static_cast<double>(low ? j : n - j) / (2.0 * static_cast<double>(n)));
        S off = width_;
        off *= s * s;
        if (low) return pl_ + off;
        return pr_ - off;
    }

    static bool brackets(const std::vector<double>& g, std::size_t expected, std::vector<Bracket>& out) {
        out.clear();
        if (expected == 0) return true; // generator not used for this parent type
        const std::size_t n = g.size() - 1;
        for (std::size_t i = 0; i < n; ++i)
            if ((g[i] < 0.0) != (g[i + 1] < 0.0)) out.push_back({i, 0, 0});
        if (out.size() != expected) return false;
        std::size_t floor_idx = 0;
        for (std::size_t b = 0; b < out.size(); ++b) {
            auto& br = out[b];
            std::optional<std::size_t> jl, jr;
            for (std::size_t j = br.i + 1; j-- > floor_idx;)
                if (std::abs(g[j]) > kOutMargin) { jl = j; break; }
            const std::size_t ceil_idx = b + 1 < out.size() ? out[b + 1].i : n;
            for (std::size_t j = br.i + 1; j <= ceil_idx; ++j)
                if (std::abs(g[j]) > kOutMargin) { jr = j; break; }
            if (!jl || !jr) return false;
            br.jl = *jl;
            br.jr = *jr;
            floor_idx = *jr;
        }
        return true;
    }

    bool narrow_enough(const S& lo, const S& hi) const { return to_d(hi - lo) <= tol_; }
    static bool stalled(const S& m, const S& lo, const S& hi) { return m == lo || m == hi; }

    std::optional<Found<S>> locate(const Bracket& b, std::size_t n, bool y) {
        // zero of the generator
        S lo = node(b.i, n), hi = node(b.i + 1, n);
        eval(lo, false);
        const bool lo_neg = std::signbit(to_d(gen(y)));
        while (!narrow_enough(lo, hi)) {
            S m = mid_of(lo, hi);
            if (stalled(m, lo, hi)) return std::nullopt;
            eval(m, false);
            const double v = to_d(gen(y));
            if (v == 0.0) { lo = m; hi = m; break; }
            (std::signbit(v) == lo_neg ? lo : hi) = m;
        }
        S zero = mid_of(lo, hi);
        eval(zero, false);
        if (!(std::abs(to_d(gen(y))) <= 2.0)) return std::nullopt; // zero not resolved at this tolerance

        auto edge = [&](S out, S in) -> std::optional<S> {
            while (true) {
                const bool done = out < in ? narrow_enough(out, in) : narrow_enough(in, out);
                if (done) break;
                S m = mid_of(out, in);
                if (stalled(m, out, in)) return std::nullopt;
                eval(m, false);
                (std::abs(to_d(gen(y))) <= 2.0 ? in : out) = m;
            }
            return mid_of(out, in);
        };
        auto left = edge(node(b.jl, n), zero);
        auto right = edge(node(b.jr, n), zero);
        if (!left || !right) return std::nullopt;
        eval(zero, true);
        const double d = std::abs(to_d(y ? work_.dy : work_.dx_cur));
        return Found<S>{std::move(*left), std::move(*right), std::move(zero), d, y};
    }

    S pl_, pr_, width_;
    std::span<const Coeff> coeffs_;
    double lambda_;
    double tol_;
    detail::TraceWork<S> work_;
};

double magnitude_of(const Band& b) {
    return std::max({std::abs(b.left.to_double()), std::abs(b.right.to_double()), 1.0});
}

template <class S>
std::optional<std::vector<Band>> search(const Band& parent, std::span<const Coeff> coeffs, double lambda,
                                        mpfr_prec_t bits, double tol, std::size_t nx, std::size_t ny,
                                        BandType x_type) {
    ChildSearch<S> cs(from_big<S>(parent.left, bits), from_big<S>(parent.right, bits), coeffs, lambda, bits, tol);
    auto found = cs.run(nx, ny, "'" + word_to_string(parent.word) + "' (order " + std::to_string(parent.order) + ")");
    if (!found) return std::nullopt;
    std::vector<Band> out;
    std::array<Coeff, 3> l_index{0, 0, 0};
    const Coeff a = coeffs.back();
    for (auto& f : *found) {
        Band c;
        c.type = f.y ? BandType::I : x_type;
        c.order = parent.order + 1;
        c.left = to_big(f.left, bits);
        c.right = to_big(f.right, bits);
        c.zero = to_big(f.zero, bits);
        c.length = (c.right - c.left).to_double();
        c.deriv = f.deriv;
        const Edge e = edge_between(parent.type, c.type);
        c.word = parent.word;
        c.word.push_back({e, tau_of(e, a), ++l_index[static_cast<std::size_t>(c.type)]});
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace

std::vector<Band> children(const Band& parent, std::span<const Coeff> coeffs, double lambda, double tol) {
    if (coeffs.size() != static_cast<std::size_t>(parent.order) + 1)
        throw ValidationError("children: need coefficients a_1..a_{k+1}");
    if (!(tol > 0.0)) throw ValidationError("children: tol must be > 0");
    const Coeff a = coeffs.back();
    if (a < 1) throw ValidationError("children: a_next must be >= 1");

    std::size_t nx = 0, ny = 0;
    BandType x_type = BandType::III;
    switch (parent.type) {
    case BandType::I: nx = 1; x_type = BandType::II; break;
    case BandType::II: ny = a + 1; nx = a; break;
    case BandType::III: ny = a; nx = a - 1; break;
    }

    // x_{k+1} = y_k when a = 1: the single child is the parent interval itself.
    if (parent.type == BandType::I && a == 1) {
        Band c = parent;
        c.type = BandType::II;
        c.order = parent.order + 1;
        c.parent = kNoParent;
        c.word.push_back({Edge::e12, 1, 1});
        return {c};
    }

    // Conservative child length from the derivative-ratio bounds, in log2.
    const double mag = magnitude_of(parent) + lambda;
    const double ad = static_cast<double>(a) + 2.0;
    double log2_est = std::log2(parent.length) - std::log2(3.0 * (lambda + 5.0) * ad * ad * ad);
    if (parent.type == BandType::I)
        log2_est = std::log2(parent.length) - static_cast<double>(a - 1) * std::log2(2.0 * (lambda + 5.0)) -
                   std::log2(24.0 * (lambda + 5.0));
    if (!(log2_est > -1000.0))
        throw NumericError("children: bands inside '" + word_to_string(parent.word) +
                           "' are below double range");
    double scale = std::log2(mag) - log2_est;
    double tol_eff = std::min(tol, std::exp2(log2_est - 32.0));
    for (int attempt = 0; attempt < 6; ++attempt) {
        std::optional<std::vector<Band>> got;
        mpfr_prec_t used = 53;
        if (scale <= kDoubleScale) {
            got = search<double>(parent, coeffs, lambda, 53, tol_eff, nx, ny, x_type);
        } else {
            used = static_cast<mpfr_prec_t>((static_cast<int>(std::ceil(scale)) + 64 + 31) / 32 * 32);
            got = search<BigReal>(parent, coeffs, lambda, used, tol_eff, nx, ny, x_type);
        }
        if (got) {
            double min_len = std::numeric_limits<double>::infinity();
            for (const auto& c : *got) min_len = std::min(min_len, c.length);
            const bool precise = min_len > 0.0 && std::log2(mag / min_len) <= static_cast<double>(used) - 20.0;
            const bool fine = tol_eff <= min_len * 0x1p-20;
            if (precise && fine) return std::move(*got);
            if (min_len > 0.0) {
                scale = std::max(scale + 32.0, std::log2(mag / min_len) + 8.0);
                tol_eff = std::min(tol_eff, min_len * 0x1p-32);
                continue;
            }
        }
        scale += 64.0;
        tol_eff *= 0x1p-32;
    }
    throw NumericError("children: precision escalation failed inside band '" + word_to_string(parent.word) + "'");
}

namespace {

void verify_level(const BandLevel& prev, const BandLevel& cur, Coeff a, bool check_counts) {
    if (check_counts && cur.counts != next_counts(prev.counts, a))
        throw NumericError("level " + std::to_string(cur.order) + ": counts violate the child recursion");
    for (std::size_t i = 0; i < cur.bands.size(); ++i) {
        const auto& b = cur.bands[i];
        if (!(b.left < b.right)) throw NumericError("band '" + word_to_string(b.word) + "' has left >= right");
        if (!(b.left < b.zero && b.zero < b.right))
            throw NumericError("band '" + word_to_string(b.word) + "' has z_B outside its interval");
        if (i + 1 < cur.bands.size() && !(b.right < cur.bands[i + 1].left))
            throw NumericError("level " + std::to_string(cur.order) + ": bands '" + word_to_string(b.word) + "' and '" +
                               word_to_string(cur.bands[i + 1].word) + "' overlap");
        const auto& p = prev.bands.at(b.parent);
        if (!(p.left <= b.left && b.right <= p.right))
            throw NumericError("band '" + word_to_string(b.word) + "' is not nested in its parent");
    }
}

void prune(BandLevel& lvl, const HierarchyOptions& opts) {
    if (opts.max_bands == 0 || lvl.bands.empty()) return;
    const double floor_len = lvl.max_length * opts.prune_ratio;
    std::vector<std::size_t> idx(lvl.bands.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](auto a, auto b) { return lvl.bands[a].length > lvl.bands[b].length; });
    std::vector<bool> keep(lvl.bands.size(), false);
    for (std::size_t r = 0; r < idx.size() && r < opts.max_bands; ++r)
        if (lvl.bands[idx[r]].length >= floor_len) keep[idx[r]] = true;
    if (std::all_of(keep.begin(), keep.end(), [](bool k) { return k; })) return;
    std::vector<Band> kept;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) kept.push_back(std::move(lvl.bands[i]));
    lvl.bands = std::move(kept);
    lvl.pruned = true;
    lvl.refresh_stats();
}

} // namespace

Hierarchy build_hierarchy(const FrequencySpec& freq, double lambda, int K, const HierarchyOptions& opts) {
    if (!(lambda > 4.0)) throw ValidationError("build_hierarchy: lambda must be > 4");
    if (K < 0) throw ValidationError("build_hierarchy: K must be >= 0");
    if (!(opts.tol > 0.0)) throw ValidationError("build_hierarchy: tol must be > 0");
    if (opts.max_bands > 0 && !(opts.prune_ratio >= 0.0 && opts.prune_ratio <= 1.0))
        throw ValidationError("build_hierarchy: prune_ratio must lie in [0, 1]");
    Hierarchy h{freq, lambda, {}, freq.coefficients(static_cast<std::size_t>(K))};
    h.levels.push_back(level0(lambda));
    for (int k = 0; k < K; ++k) {
        const auto& prev = h.levels.back();
        auto coeffs = h.coeffs(k + 1);
        std::vector<std::vector<Band>> kids(prev.bands.size());
        parallel_for(prev.bands.size(), opts.threads,
                     [&](std::size_t i) { kids[i] = children(prev.bands[i], coeffs, lambda, opts.tol); });
        BandLevel next;
        next.order = k + 1;
        for (std::size_t i = 0; i < kids.size(); ++i)
            for (auto& c : kids[i]) {
                c.parent = i;
                next.bands.push_back(std::move(c));
            }
        next.refresh_stats();
        verify_level(prev, next, coeffs.back(), !prev.pruned);
        prune(next, opts);
        h.levels.push_back(std::move(next));
    }
    return h;
}

std::string bands_to_csv(const Hierarchy& h) {
    std::ostringstream os;
    os << "order,type,word,left,right,z_B,deriv\n";
    os.precision(17);
    for (const auto& lvl : h.levels)
        for (const auto& b : lvl.bands)
            os << b.order << ',' << to_string(b.type) << ',' << word_to_string(b.word) << ',' << b.left.str() << ','
               << b.right.str() << ',' << b.zero.str() << ',' << b.deriv << '\n';
    return os.str();
}

std::string bands_to_json(const Hierarchy& h) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lvl : h.levels) {
        nlohmann::json bands = nlohmann::json::array();
        for (const auto& b : lvl.bands)
            bands.push_back({{"order", b.order},
                             {"type", to_string(b.type)},
                             {"word", word_to_string(b.word)},
                             {"left", b.left.str()},
                             {"right", b.right.str()},
                             {"z_B", b.zero.str()},
                             {"deriv", b.deriv},
                             {"parent", b.parent == kNoParent ? nlohmann::json(nullptr) : nlohmann::json(b.parent)}});
        levels.push_back({{"order", lvl.order},
                          {"counts", lvl.counts},
                          {"max_length", lvl.max_length},
                          {"min_deriv", lvl.min_deriv},
                          {"measure", lvl.measure},
                          {"pruned", lvl.pruned},
                          {"bands", std::move(bands)}});
    }
    nlohmann::json out{{"freq", h.freq.to_string()}, {"lambda", h.lambda}, {"levels", std::move(levels)}};
    return out.dump(2);
}

} // namespace sturmian
