#pragma once

#include "pu/params.hpp"

namespace pu {

// Integer scale functions. Each is "smallest (or largest) integer such that a
// power inequality holds". Strategy: logarithm-based guess, then verification
// by direct binary64 power comparison stepping +-1. When exponents are large
// enough that powers would leave the binary64 range (|exponent * log2(base)| >
// 980) the log-space comparison is trusted as-is. Near-integer log ratios are
// snapped with a 1e-9 slack so that exact real-arithmetic ties (for example
// lambda = 2^-1/2, where lambda^10 = 2^-5 exactly) resolve to the tie reading.

// Smallest l >= 1 with (1/2)^l <= gamma^n.
int ell1(long long n, const Params& p);
// Smallest l >= 1 with lambda^l <= gamma^n.
int ell2(long long n, const Params& p);
// Smallest k >= 1 with lambda^k <= (1/2)^r.
int k_of_r(long long r, const Params& p);

// Threshold radii around a return time n_m (n_next = the following return):
//   r_minus1 = largest r with 2^-r >= lambda^n_m
//   r_0      = smallest r with k_of_r(r_0) >= n_m + ell2(n_m)
//   r_1      = largest r with 2^-r >= lambda^n_next
struct ScaleTable {
    long long n_m = 0;
    long long n_next = 0;
    int ell1_n = 0;
    int ell2_n = 0;
    long long r_minus1 = 0;
    long long r_0 = 0;
    long long r_1 = 0;
};
ScaleTable thresholds(long long n_m, long long n_next, const Params& p);

// Hausdorff dimension of the shrinking-target set, by case:
//   1: -log2 / log(lambda*gamma)                  (lambda < 1/(2 gamma))
//   2: 2 + log(lambda)/log2 - log(gamma)/log(gamma*lambda)
//   3: (2 log2 + log(lambda)) / log(2/gamma)
// All three equal 1 on the boundary lambda = 1/(2 gamma).
double dim_formula(int which_case, const Params& p);

// Dimension of the attractor itself: 2 + log(lambda)/log2.
double dim_attractor(double lambda);

// |case-2 formula - its alternate closed form|; identically 0 in exact
// arithmetic. Alternate form:
//   [log2*(2 + log g/log l) + log(g l)] / [log2*(1 + log g/log l)].
double t_gamma_identity_gap(const Params& p);

// Constants for the typical-parameter analysis on [lambda0, lambda1]:
//   xi  = log(gamma) log(2 lambda0) / (log(lambda0) log 2)
//   s   = (2 log2 + log lambda0) / log(2/gamma)
//   eta = (log l0/log l1 - 1) + (s+1)(log g/log l1 - log g/log l0)
// Requires 1/(2 gamma) < lambda0 <= lambda1 <= 0.668.
struct Case3Constants {
    double xi = 0.0;
    double s = 0.0;
    double eta = 0.0;
};
Case3Constants case3_constants(double lambda0, double lambda1, double gamma);

// Target-window length for the dynamical returns: ceil(n log(lambda)/log(gamma)).
long long ell_n_dynamical(long long n, const Params& p);

// Largest r >= 0 with 2^-r >= base^exp, for base in (0,1), exp >= 1.
long long largest_halving_exponent(double base, long long exp);

}  // namespace pu
