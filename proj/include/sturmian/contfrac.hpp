#pragma once

#include "sturmian/bigfloat.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sturmian {

using Coeff = std::uint64_t;

struct ConstantTail {
    Coeff m;
};
struct PeriodicTail {
    std::vector<Coeff> period;
};
struct NoTail {};

using Tail = std::variant<NoTail, ConstantTail, PeriodicTail>;

// A frequency alpha = [a_1, a_2, ...] given by a finite prefix and a tail rule.
// a(k) is 1-based and total whenever a tail rule exists.
class FrequencySpec {
public:
    FrequencySpec(std::vector<Coeff> prefix, Tail tail);

    static FrequencySpec constant(Coeff m) { return {{}, ConstantTail{m}}; }
    static FrequencySpec periodic(std::vector<Coeff> period) { return {{}, PeriodicTail{std::move(period)}}; }
    static FrequencySpec explicit_only(std::vector<Coeff> prefix) { return {std::move(prefix), NoTail{}}; }

    // Accepts `prefix=[a1,...];tail=const:m|periodic:[b1,...]|none`, or a bare
    // tail (`const:m`, `periodic:[...]`) meaning an empty prefix.
    static FrequencySpec parse(std::string_view text);
    std::string to_string() const;

    Coeff a(std::size_t k) const;
    std::vector<Coeff> coefficients(std::size_t k) const;
    // Number of defined coefficients, or nullopt if infinite.
    std::optional<std::size_t> available() const;

    const std::vector<Coeff>& prefix() const { return prefix_; }
    const Tail& tail() const { return tail_; }
    bool has_tail() const { return !std::holds_alternative<NoTail>(tail_); }

    friend bool operator==(const FrequencySpec& a, const FrequencySpec& b) { return a.to_string() == b.to_string(); }

private:
    std::vector<Coeff> prefix_;
    Tail tail_;
};

// Convergents p_k/q_k for k = -1..K, exact.
class Convergents {
public:
    Convergents() = default;
    Convergents(std::vector<mpz_class> p, std::vector<mpz_class> q) : p_(std::move(p)), q_(std::move(q)) {}

    const mpz_class& p(int k) const { return p_.at(static_cast<std::size_t>(k + 1)); }
    const mpz_class& q(int k) const { return q_.at(static_cast<std::size_t>(k + 1)); }
    int max_index() const { return static_cast<int>(q_.size()) - 2; }

    std::string to_csv() const;

private:
    std::vector<mpz_class> p_;
    std::vector<mpz_class> q_;
};

Convergents convergents(const FrequencySpec& freq, int K);

// alpha to within 2^-bits, using the first convergent with 1/q_k^2 < 2^(-bits-2).
BigReal frequency_value(const FrequencySpec& freq, int bits);

// delta_k = (a_1 ... a_k)^(1/k), evaluated in log space.
double geometric_mean_delta(const FrequencySpec& freq, std::size_t k);
double log_geometric_mean_delta(const FrequencySpec& freq, std::size_t k);

// a_1..a_k = A_1 1^{m_1} A_2 ... A_s 1^{m_s} A_{s+1}, each A_i free of 1's.
struct BlockDecomposition {
    std::vector<std::vector<Coeff>> segments; // s+1 entries, first/last may be empty
    std::vector<std::size_t> runs;            // m_1..m_s
    std::size_t exponent_sum = 0;             // sum_j floor((m_j+1)/2)

    std::size_t s() const { return runs.size(); }
    std::vector<Coeff> reassemble() const;
};

BlockDecomposition block_decompose(const std::vector<Coeff>& coeffs);
BlockDecomposition block_decompose(const FrequencySpec& freq, std::size_t k);

// Coefficient prefixes of Gauss-typical frequencies: alpha = N / 2^B with N
// uniform in [1, 2^B), B = 64 + ceil(3.5 k), expanded by exact Euclid.
// Sample i depends only on (seed, i).
std::vector<std::vector<Coeff>> sample_gauss(std::uint64_t seed, std::size_t count, std::size_t k,
                                             unsigned threads = 1);
std::vector<Coeff> sample_gauss_one(std::uint64_t seed, std::size_t index, std::size_t k);

// Running Cesaro average (1/k) sum a_j; a statistic, not a bounded-density verdict.
double cesaro_average(const FrequencySpec& freq, std::size_t k);

} // namespace sturmian
