#pragma once

#include "sturmian/contfrac.hpp"

#include <gmpxx.h>

#include <complex>
#include <optional>
#include <vector>

namespace sturmian {

using Complex = std::complex<double>;

inline constexpr double kDefaultMagnitudeCap = 1e150;

struct TraceDerivatives {
    Complex dx_prev, dx_cur, dy_cur;
};

// (x_{k-1}, x_k, y_k) at level k, with optional d/dz of each entry.
struct TraceState {
    int k = 0;
    Complex x_prev, x_cur, y_cur;
    std::optional<TraceDerivatives> deriv;

    static TraceState seed(Complex z, double lambda, bool with_derivative = false);
};

struct TraceStep {
    TraceState state; // the advanced state, or the input state if diverged
    bool diverged = false;
};

// Advances (x_{k-1}, x_k, y_k) -> (x_k, x_{k+1}, y_{k+1}) with a_next = a_{k+1}.
TraceStep trace_step(const TraceState& state, Coeff a_next, double cap = kDefaultMagnitudeCap);

// t_{(k,p)} for p = 0..a_next+1 within level k. Entries past a divergence are absent.
std::vector<Complex> level_traces(const TraceState& state, Coeff a_next, double cap = kDefaultMagnitudeCap);

// Lambda(x, y, w) = x^2 + y^2 + w^2 - x y w - 4.
Complex fricke(Complex x, Complex y, Complex w);

// Largest |Lambda(x_k, t_{(k,p)}, t_{(k,p-1)}) - lambda^2| / lambda^2 over all
// intermediate triples of levels 0..K-1 at a real energy, evaluated with
// `bits` of precision. Stops at the magnitude cap.
struct FrickeAudit {
    double max_rel_dev = 0.0;
    std::size_t triples = 0;
    int levels = 0;        // levels completed
    bool diverged = false; // stopped at the cap
};
FrickeAudit fricke_audit(const FrequencySpec& freq, double lambda, double z, int K, long bits = 2048,
                         double cap = kDefaultMagnitudeCap);

// x_k(z) for k = -1..K (index k+1); stops early at divergence.
std::vector<Complex> trace_sequence(const FrequencySpec& freq, double lambda, Complex z, int K,
                                    double cap = kDefaultMagnitudeCap);

// G_0 = 1, G_1 = a_{k0+1}, G_{j+1} = a_{k0+j+1} G_j + G_{j-1}, for j = 0..J.
std::vector<mpz_class> growth_sequence(const FrequencySpec& freq, int k0, int J);

enum class EscapeVerdict { escaped, bounded_up_to };

struct EscapeReport {
    EscapeVerdict verdict = EscapeVerdict::bounded_up_to;
    int k0 = -1;    // first escape index when escaped
    int k_max = 0;
    double delta = 0.0;
    std::vector<mpz_class> growth;  // G^{(k0)}_0..G^{(k0)}_{k_max-k0} when escaped
    std::vector<double> abs_x;      // |x_k| for k = -1.. (index k+1), +inf past the cap
    double running_max = 0.0;       // max |x_k|, k <= k_max (empirical C_{lambda,delta})
};

// First k0 in [0, k_max] with |x_{k0-1}| <= 2+delta < |x_{k0}| and |x_{k0+1}| > 2+delta.
EscapeReport escape_classify(const FrequencySpec& freq, double lambda, Complex z, double delta, int k_max,
                             double cap = kDefaultMagnitudeCap);

} // namespace sturmian
