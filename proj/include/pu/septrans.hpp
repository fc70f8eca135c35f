#pragma once

#include <cstdint>
#include <vector>

#include "pu/params.hpp"
#include "pu/word.hpp"

namespace pu {

// min over coefficient vectors (c_0..c_n) in {-1,0,1}^(n+1) \ {0} of
// |sum c_i lambda^i|. Meet-in-the-middle: the smaller index half is enumerated
// and sorted, the larger half streamed with a binary search and a +-3 neighbor
// window; winners are re-evaluated canonically (ascending-index summation with
// a shared power table), which is also how the value is defined. exact_zero is
// set when the minimum is <= 1e-13 (an admissible polynomial vanishes to
// within binary64 at this lambda).
struct MinPolyResult {
    double min_value = 0.0;
    std::vector<signed char> coeffs;  // c_0..c_n of a minimizer
    bool exact_zero = false;
};
MinPolyResult min_poly_value(double lambda, int n);

// Profile entry for degree cap n: the minimum, its normalized log, timing.
struct ProfileEntry {
    int n = 0;
    double min_value = 0.0;
    double log_min_over_n = 0.0;  // (1/n) log min; -inf when exact_zero
    bool exact_zero = false;
    double seconds = 0.0;
};
std::vector<ProfileEntry> separation_profile(double lambda, int n_max);

// Sign-change roots of s(l) = coeffs[0] + coeffs[1] l + ... on [lo, hi],
// located on a uniform grid (4096 cells) and polished by bisection to 1e-12.
// Reports |s'| at each root.
struct SeriesRoot {
    double root = 0.0;
    double deriv_abs = 0.0;
};
std::vector<SeriesRoot> series_roots(const std::vector<double>& coeffs, double lo,
                                     double hi);

// Draws `samples` random power series 1 + sum_{n=1..degree} b_n lambda^n with
// iid b_n uniform on {-1,0,1}, scans [lo, hi] for sign-change roots, and
// records every root whose |derivative| < delta (a near-double zero).
struct DoubleZeroReport {
    std::uint64_t samples = 0;
    std::uint64_t roots_seen = 0;
    struct Violation {
        std::uint64_t sample_index;
        double root;
        double deriv_abs;
    };
    std::vector<Violation> violations;
};
DoubleZeroReport double_zero_scan(double lo, double hi, int degree, double delta,
                                  std::uint64_t samples, std::uint64_t seed);

// Lebesgue measure of {lambda in [lo, hi] : |sum_{k=1..d} (i_k - j_k) lambda^k| < rho},
// by adaptive interval bisection to resolution 1e-8. Requires i_1 != j_1 and a
// truncation depth d = min(|i|,|j|) deep enough that the dropped tail
// lambda_hi^(d+1)/(1-lambda_hi) < rho/10, else std::invalid_argument.
// implied_c = measure / rho.
struct TransversalityMeasure {
    double measure = 0.0;
    double implied_c = 0.0;
};
TransversalityMeasure transversality_measure(const SymbolWord& i, const SymbolWord& j,
                                             double rho, double lo, double hi);

}  // namespace pu
