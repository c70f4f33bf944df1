#include "sturmian/contfrac.hpp"

#include "sturmian/errors.hpp"
#include "sturmian/parallel.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace sturmian {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

Coeff parse_coeff(std::string_view s, std::string_view field) {
    auto t = trim(s);
    Coeff v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ValidationError("frequency spec: bad integer '" + t + "' in field " + std::string(field));
    return v;
}

std::vector<Coeff> parse_list(std::string_view s, std::string_view field) {
    auto t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ValidationError("frequency spec: field " + std::string(field) + " must be a bracketed list");
    std::vector<Coeff> out;
    auto body = std::string_view(t).substr(1, t.size() - 2);
    if (trim(body).empty()) return out;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto comma = body.find(',', pos);
        auto piece = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        out.push_back(parse_coeff(piece, field));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

Tail parse_tail(std::string_view s) {
    auto t = trim(s);
    if (t == "none") return NoTail{};
    if (t.rfind("const:", 0) == 0) return ConstantTail{parse_coeff(std::string_view(t).substr(6), "tail")};
    if (t.rfind("periodic:", 0) == 0) return PeriodicTail{parse_list(std::string_view(t).substr(9), "tail")};
    throw ValidationError("frequency spec: field tail must be const:m, periodic:[...] or none, got '" + t + "'");
}

std::string join(const std::vector<Coeff>& v) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
    return os.str();
}

// splitmix64 finalizer; derives independent per-sample seeds.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

FrequencySpec::FrequencySpec(std::vector<Coeff> prefix, Tail tail) : prefix_(std::move(prefix)), tail_(std::move(tail)) {
    for (auto c : prefix_)
        if (c < 1) throw ValidationError("frequency spec: prefix coefficients must be >= 1");
    if (auto* c = std::get_if<ConstantTail>(&tail_); c && c->m < 1)
        throw ValidationError("frequency spec: constant tail must be >= 1");
    if (auto* p = std::get_if<PeriodicTail>(&tail_)) {
        if (p->period.empty()) throw ValidationError("frequency spec: periodic tail must be nonempty");
        for (auto c : p->period)
            if (c < 1) throw ValidationError("frequency spec: periodic tail coefficients must be >= 1");
    }
}

FrequencySpec FrequencySpec::parse(std::string_view text) {
    auto t = trim(text);
    if (t.rfind("prefix=", 0) != 0) {
        if (t.rfind("const:", 0) == 0 || t.rfind("periodic:", 0) == 0) return FrequencySpec({}, parse_tail(t));
        throw ValidationError("frequency spec: expected 'prefix=[...];tail=...', got '" + t + "'");
    }
    auto semi = t.find(';');
    if (semi == std::string::npos) throw ValidationError("frequency spec: missing field tail");
    auto prefix = parse_list(std::string_view(t).substr(7, semi - 7), "prefix");
    auto rest = trim(std::string_view(t).substr(semi + 1));
    if (rest.rfind("tail=", 0) != 0) throw ValidationError("frequency spec: missing field tail");
    return FrequencySpec(std::move(prefix), parse_tail(std::string_view(rest).substr(5)));
}

std::string FrequencySpec::to_string() const {
    std::string out = "prefix=" + join(prefix_) + ";tail=";
    if (std::holds_alternative<NoTail>(tail_)) return out + "none";
    if (auto* c = std::get_if<ConstantTail>(&tail_)) return out + "const:" + std::to_string(c->m);
    return out + "periodic:" + join(std::get<PeriodicTail>(tail_).period);
}

Coeff FrequencySpec::a(std::size_t k) const {
    if (k == 0) throw ValidationError("coefficient index is 1-based");
    if (k <= prefix_.size()) return prefix_[k - 1];
    auto j = k - prefix_.size() - 1;
    if (auto* c = std::get_if<ConstantTail>(&tail_)) return c->m;
    if (auto* p = std::get_if<PeriodicTail>(&tail_)) return p->period[j % p->period.size()];
    throw CoefficientUndefined(k);
}

std::vector<Coeff> FrequencySpec::coefficients(std::size_t k) const {
    std::vector<Coeff> out;
    out.reserve(k);
    for (std::size_t j = 1; j <= k; ++j) out.push_back(a(j));
    return out;
}

std::optional<std::size_t> FrequencySpec::available() const {
    if (has_tail()) return std::nullopt;
    return prefix_.size();
}

std::string Convergents::to_csv() const {
    std::ostringstream os;
    os << "k,p_k,q_k\n";
    for (int k = -1; k <= max_index(); ++k) os << k << ',' << p(k).get_str() << ',' << q(k).get_str() << '\n';
    return os.str();
}

Convergents convergents(const FrequencySpec& freq, int K) {
    if (K < 0) throw ValidationError("convergents: K must be >= 0");
    std::vector<mpz_class> p{1, 0}, q{0, 1};
    p.reserve(static_cast<std::size_t>(K) + 2);
    q.reserve(static_cast<std::size_t>(K) + 2);
    for (int k = 0; k < K; ++k) {
        mpz_class a = freq.a(static_cast<std::size_t>(k + 1));
        p.push_back(a * p.back() + p[p.size() - 2]);
        q.push_back(a * q.back() + q[q.size() - 2]);
    }
    return {std::move(p), std::move(q)};
}

BigReal frequency_value(const FrequencySpec& freq, int bits) {
    if (bits < 64) throw ValidationError("frequency_value: bits must be >= 64");
    mpz_class p_prev = 1, p = 0, q_prev = 0, q = 1;
    for (std::size_t k = 1;; ++k) {
        mpz_class a = freq.a(k);
        mpz_class pn = a * p + p_prev, qn = a * q + q_prev;
        p_prev = p; p = pn;
        q_prev = q; q = qn;
        // q >= 2^e, so |alpha - p/q| < 1/q^2 <= 2^(-2e).
        auto e = static_cast<long>(mpz_sizeinbase(q.get_mpz_t(), 2)) - 1;
        if (2 * e >= bits + 3) return BigReal::ratio(p, q, static_cast<mpfr_prec_t>(bits) + 8);
    }
}

double log_geometric_mean_delta(const FrequencySpec& freq, std::size_t k) {
    if (k < 1) throw ValidationError("geometric_mean_delta: k must be >= 1");
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += std::log(static_cast<double>(freq.a(j)));
    return s / static_cast<double>(k);
}

double geometric_mean_delta(const FrequencySpec& freq, std::size_t k) {
    return std::exp(log_geometric_mean_delta(freq, k));
}

std::vector<Coeff> BlockDecomposition::reassemble() const {
    std::vector<Coeff> out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        out.insert(out.end(), segments[i].begin(), segments[i].end());
        if (i < runs.size()) out.insert(out.end(), runs[i], Coeff{1});
    }
    return out;
}

BlockDecomposition block_decompose(const std::vector<Coeff>& coeffs) {
    BlockDecomposition d;
    d.segments.emplace_back();
    std::size_t i = 0;
    while (i < coeffs.size()) {
        if (coeffs[i] != 1) {
            d.segments.back().push_back(coeffs[i++]);
            continue;
        }
        std::size_t m = 0;
        while (i < coeffs.size() && coeffs[i] == 1) { ++m; ++i; }
        d.runs.push_back(m);
        d.exponent_sum += (m + 1) / 2;
        d.segments.emplace_back();
    }
    return d;
}

BlockDecomposition block_decompose(const FrequencySpec& freq, std::size_t k) {
    if (k < 1) throw ValidationError("block_decompose: k must be >= 1");
    return block_decompose(freq.coefficients(k));
}

std::vector<Coeff> sample_gauss_one(std::uint64_t seed, std::size_t index, std::size_t k) {
    constexpr int kRetryCap = 10000;
    const std::size_t bits = 64 + static_cast<std::size_t>(std::ceil(3.5 * static_cast<double>(k)));
    const std::size_t words = (bits + 63) / 64;
    std::mt19937_64 rng(mix(mix(seed) ^ index));
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, bits);
    std::vector<std::uint64_t> buf(words);
    mpz_class num, n, d, qt, r;
    for (int attempt = 0; attempt < kRetryCap; ++attempt) {
        for (auto& w : buf) w = rng();
        mpz_import(num.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
        mpz_fdiv_r_2exp(num.get_mpz_t(), num.get_mpz_t(), bits);
        if (num == 0) continue;
        // alpha = num/den; a = floor(den/num), (num, den) <- (den mod num, num)
        n = num;
        d = den;
        std::vector<Coeff> out;
        out.reserve(k);
        bool ok = true;
        while (out.size() < k && n != 0) {
            mpz_fdiv_qr(qt.get_mpz_t(), r.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
            if (!mpz_fits_ulong_p(qt.get_mpz_t())) { ok = false; break; }
            out.push_back(mpz_get_ui(qt.get_mpz_t()));
            d = n;
            n = r;
        }
        if (ok && out.size() == k) return out;
    }
    throw NumericError("sample_gauss: retry cap exhausted");
}

std::vector<std::vector<Coeff>> sample_gauss(std::uint64_t seed, std::size_t count, std::size_t k, unsigned threads) {
    if (count < 1 || k < 1) throw ValidationError("sample_gauss: count and k must be >= 1");
    std::vector<std::vector<Coeff>> out(count);
    parallel_for(count, threads, [&](std::size_t i) { out[i] = sample_gauss_one(seed, i, k); });
    return out;
}

double cesaro_average(const FrequencySpec& freq, std::size_t k) {
    if (k < 1) throw ValidationError("cesaro_average: k must be >= 1");
    long double s = 0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<long double>(freq.a(j));
    return static_cast<double>(s / static_cast<long double>(k));
}

} // namespace sturmian
