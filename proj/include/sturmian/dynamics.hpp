#pragma once

#include "sturmian/contfrac.hpp"

#include <complex>
#include <string>
#include <vector>

namespace sturmian {

using Amplitude = std::complex<double>;

struct PotentialSpec {
    FrequencySpec freq;
    double lambda = 1.0;
    double omega = 0.0;
    long L = 1; // window [-L, L]
};

void validate(const PotentialSpec& spec);

// V(n) for n = -L..L, stored at index n + L. Values are exactly 0 or lambda.
std::vector<double> potential(const PotentialSpec& spec);

struct WaveState {
    long L = 0;
    double time = 0.0;
    double error_bound = 0.0; // certified l2 bound on the polynomial truncation error so far
    std::vector<Amplitude> amp; // index n + L

    const Amplitude& at(long n) const { return amp[static_cast<std::size_t>(n + L)]; }
    double norm2() const;
};

WaveState delta0(long L);

// (H psi)(n) = psi(n+1) + psi(n-1) + V(n) psi(n), Dirichlet outside the window.
std::vector<Amplitude> apply_hamiltonian(const std::vector<double>& V, const std::vector<Amplitude>& psi);
Amplitude expectation(const std::vector<double>& V, const std::vector<Amplitude>& psi);

// Smallest window admitted for propagation up to time T.
long required_window(double lambda, double T);

struct EvolveOptions {
    double tol = 1e-8;
    double max_step_arg = 256.0; // substeps keep R*dt below this
};

// States at the requested (sorted, non-negative) times, starting from delta_0.
std::vector<WaveState> evolve(const PotentialSpec& spec, const std::vector<double>& times,
                              const EvolveOptions& opts = {});

struct MomentValue {
    double value = 0.0;
    double error_bar = 0.0;
};

MomentValue moments(const WaveState& state, double p);

struct Sample {
    double t;
    double f;
};

// Envelope f(t) <= coeff * t^power used to bound the integral beyond the last sample.
// coeff < 0 means: the smallest coeff consistent with the samples in [t_cut/2, t_cut].
struct TailEnvelope {
    double coeff = -1.0;
    double power = 0.0;
};

struct AbelAverage {
    double value = 0.0; // quadrature plus tail bound
    double tail = 0.0;  // contribution beyond the last sample used
};

// (2/T) int_0^inf e^{-2t/T} f(t) dt from samples starting at t = 0 and reaching 8T.
AbelAverage time_average(const std::vector<Sample>& samples, double T, const TailEnvelope& env = {});

// 0, then 16 points per octave from t_lo to at least t_hi.
std::vector<double> abel_grid(double t_lo, double t_hi);
inline std::vector<double> abel_grid(double T) { return abel_grid(T / 100.0, 8.0 * T); }

// Abel-averaged mass at |n| >= N.
double outside_probability(const std::vector<WaveState>& states, long N, double T);

// Least-squares slope of log f against log t, divided by p.
double loglog_slope(const std::vector<double>& t, const std::vector<double>& f, double p);

struct TransportFit {
    double p = 0.0;
    std::vector<double> T_grid;
    std::vector<double> averaged; // <<|X|^p>>(T)
    std::vector<double> window_slopes;
    double beta_plus_hat = 0.0;
    double beta_minus_hat = 0.0;
    double max_norm_drift = 0.0;
};

// Fits for several p from one propagation.
std::vector<TransportFit> fit_beta(const PotentialSpec& spec, const std::vector<double>& ps,
                                   const std::vector<double>& T_grid, double tol = 1e-8);
// Output times used by fit_beta: the Abel grid from T_min/100 to 8 T_max.
std::vector<double> fit_times(const std::vector<double>& T_grid);
// Fits from states already propagated over fit_times(T_grid).
std::vector<TransportFit> fit_beta_from_states(const std::vector<WaveState>& states, const std::vector<double>& ps,
                                               const std::vector<double>& T_grid);
TransportFit fit_beta(const PotentialSpec& spec, double p, const std::vector<double>& T_grid, double tol = 1e-8);

std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

std::string fits_to_json(const PotentialSpec& spec, const std::vector<TransportFit>& fits);

} // namespace sturmian
