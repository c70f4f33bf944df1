#pragma once

#include "sturmian/bigfloat.hpp"
#include "sturmian/contfrac.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sturmian {

enum class BandType { I, II, III };
enum class Edge { e12, e21, e23, e31, e33 };

std::string to_string(BandType t);
std::string to_string(Edge e);

// tau_e(n): 1, n+1, n, n, n-1 for e12, e21, e23, e31, e33.
Coeff tau_of(Edge e, Coeff n);
Edge edge_between(BandType from, BandType to);
BandType edge_target(Edge e);
BandType edge_source(Edge e);

struct Letter {
    Edge e;
    Coeff tau;
    Coeff l; // 1-based position among same-type siblings, left to right

    friend bool operator==(const Letter&, const Letter&) = default;
};
using BandWord = std::vector<Letter>;

// The end point of a.e is the initial point of b.e.
bool admissible(const Letter& a, const Letter& b);
std::string word_to_string(const BandWord& w);

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

// One spectral generating band. The generator t_B is y_k for type I and x_k
// for types II and III, where k is the band's order.
struct Band {
    BandWord word;
    BandType type = BandType::I;
    int order = 0;
    BigReal left, right, zero;
    double length = 0.0;
    double deriv = 0.0; // |t_B'(z_B)|
    std::size_t parent = kNoParent;

    bool y_branch() const { return type == BandType::I; }
};

struct BandLevel {
    int order = 0;
    std::vector<Band> bands; // sorted by left endpoint, pairwise disjoint
    std::array<std::size_t, 3> counts{}; // (n_I, n_II, n_III)
    double max_length = 0.0;
    double min_deriv = 0.0;
    double measure = 0.0;
    bool pruned = false; // true if only a beam of the largest bands was kept

    void refresh_stats();
};

struct LevelStats {
    double max_length;
    double min_deriv;
    double measure;
};
LevelStats level_stats(const BandLevel& level);

struct HierarchyOptions {
    double tol = 1e-12;     // absolute edge tolerance (tightened for small parents)
    unsigned threads = 0;   // 0 = auto
    // Beam pruning for exploratory runs. When max_bands > 0 only the largest
    // bands of each level (at most max_bands, and not shorter than
    // prune_ratio times the longest) are expanded further.
    std::size_t max_bands = 0;
    double prune_ratio = 0.0;
};

struct Hierarchy {
    FrequencySpec freq;
    double lambda = 0.0;
    std::vector<BandLevel> levels;

    std::span<const Coeff> coeffs(int k) const { return {all_coeffs.data(), static_cast<std::size_t>(k)}; }
    std::vector<Coeff> all_coeffs; // a_1..a_K
};

BandLevel level0(double lambda);

// Children of `parent` (order k) at order k+1. coeffs holds a_1..a_{k+1}.
std::vector<Band> children(const Band& parent, std::span<const Coeff> coeffs, double lambda, double tol);

Hierarchy build_hierarchy(const FrequencySpec& freq, double lambda, int K, const HierarchyOptions& opts = {});

// Count recursion n_II' = n_I, n_I' = (a+1) n_II + a n_III, n_III' = a n_II + (a-1) n_III.
std::array<std::size_t, 3> next_counts(const std::array<std::size_t, 3>& c, Coeff a);

// Generator of a band of the given type and order at z, and its derivative.
// coeffs holds a_1..a_order.
struct GeneratorValue {
    BigReal value;
    BigReal deriv;
};
GeneratorValue eval_generator(std::span<const Coeff> coeffs, double lambda, BandType type, const BigReal& z);

std::string bands_to_csv(const Hierarchy& h);
std::string bands_to_json(const Hierarchy& h);

} // namespace sturmian
