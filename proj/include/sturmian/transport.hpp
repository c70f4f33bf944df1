#pragma once

#include "sturmian/bands.hpp"
#include "sturmian/contfrac.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sturmian {

struct ExponentReport {
    int k = 0;
    double lambda = 0.0;
    double log_qk_over_k = 0.0;
    double log_min_deriv_over_k = 0.0;
    double log_maxband_over_k = 0.0;
    double alpha_hat_deriv = 0.0; // log q_k / log min |t_B'(z_B)|
    double alpha_hat_band = 0.0;  // log q_k / (-log |B_max,k|)
    bool degenerate = false;      // k = 0 or a non-positive denominator
    bool below_lambda_20 = false; // the derivative/length bridge is only proven for lambda >= 20
    bool pruned = false;          // level built with beam pruning

    std::string to_json() const;
};

ExponentReport exponent_estimate(const Hierarchy& h, const Convergents& conv, int k);

// CSV with columns lambda,k,alpha_hat_band,alpha_hat_deriv,alpha_hat_band_loglambda.
std::string exponent_sweep_csv(const std::vector<ExponentReport>& rows);

struct MaxBandBounds {
    int k = 0;
    double lambda = 0.0;
    double delta_k = 0.0;
    std::size_t exponent_sum = 0;
    double lower = 0.0; // natural log
    double upper = 0.0;
};

MaxBandBounds maxband_bounds(const FrequencySpec& freq, double lambda, int k);

struct MaxBandCheck {
    bool ok = false;
    double log_max = 0.0;
    double lower_margin = 0.0; // log_max - lower
    double upper_margin = 0.0; // upper - log_max
};

MaxBandCheck verify_maxband(const Hierarchy& h, const MaxBandBounds& bounds);

struct KoebeRadii {
    double inv_R_lower;
    double inv_r_upper;
};

KoebeRadii koebe_radii_bounds(double min_deriv, double delta);

struct Asymptote {
    double value = 0.0;        // limit of alpha_u * log(lambda) as lambda -> infinity
    double log_q_rate = 0.0;   // lim (1/k) log q_k
    double run_density = 0.0;  // lim (1/k) sum floor((m_j+1)/2)
    bool conjectural = false;  // true outside the closed forms worked out in the literature
};

Asymptote constant_type_asymptote(const FrequencySpec& freq);

struct AeConstants {
    double levy;            // pi^2 / (12 log 2)
    double bound_thm1;      // pi^2 / (12 log phi)
    double ae_band_slope;   // -log phi / log 2
    double digit1_freq;     // log(4/3) / log 2
    double odd_run_density; // -log((3+sqrt 5)/6) / log 2, per coefficient
};

AeConstants ae_constants();

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

struct MonteCarloReport {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::size_t k = 0;
    Estimate digit1_freq;
    Estimate odd_run_density;
    Estimate combined_slope;
    Estimate log_qk_over_k;

    std::string to_json() const;
};

MonteCarloReport gauss_monte_carlo(std::uint64_t seed, std::size_t samples, std::size_t k, unsigned threads = 0);

struct EvidenceOptions {
    Coeff max_coeff = 64;       // samples with a larger coefficient are redrawn and counted as rejected
    std::size_t beam = 16;      // bands kept per level
    double prune_ratio = 1e-6;  // relative to the longest band of the level
    unsigned threads = 0;
};

struct EvidenceRow {
    std::size_t sample_index;
    std::vector<Coeff> coeffs;
    double alpha_hat_band_loglambda;
    double log_qk_over_k;
    double log_maxband_over_k;
};

// Distribution of alpha_hat_band * log(lambda) over Gauss-typical frequencies
// at finite k. Evidence only: the underlying statement is a k, lambda -> infinity limit.
struct EvidenceTable {
    double lambda = 0.0;
    int k = 0;
    std::size_t rejected = 0;
    EvidenceOptions options;
    std::vector<EvidenceRow> rows;
    Estimate alpha_hat_band_loglambda;
    double reference = 0.0; // pi^2 / (12 log phi)

    std::string to_json() const;
    std::string to_csv() const;
};

EvidenceTable ae_evidence(std::uint64_t seed, std::size_t samples, double lambda, int k,
                          const EvidenceOptions& opts = {});

} // namespace sturmian
