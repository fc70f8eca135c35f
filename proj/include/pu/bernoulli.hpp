#pragma once

#include <cstdint>
#include <vector>

#include "pu/params.hpp"
#include "pu/word.hpp"

namespace pu {

// Fixed-point histogram of the balanced self-similar measure of
//   g0(x) = lambda x, g1(x) = lambda x + (1 - lambda)
// on 2^level dyadic bins over [0,1]. residual = L1 distance between the last
// iterate and one more operator application.
struct DyadicHistogram {
    double lambda = 0.0;
    int level = 0;
    std::vector<double> mass;
    double residual = 0.0;
    int iterations = 0;
};

// Iterates the transfer operator from the uniform start until the L1 residual
// drops below `tol` or `max_iterations` passes (0 picks 10*level). level <= 24,
// max_iterations >= 4*level required. Throws on non-convergence.
DyadicHistogram build_histogram(double lambda, int level, int max_iterations = 0,
                                double tol = 1e-9);

// Mass of [a,b] ∩ [0,1]: full bins plus linear fractions of boundary bins.
double measure_interval(const DyadicHistogram& h, double a, double b);

// Count of depth-k words w whose interval [pi_I(w), pi_I(w)+lambda^k] meets the
// closed interval [x - rho*lambda^k, x + rho*lambda^k]. Pruned DFS; subtrees
// whose whole prefix interval lies inside the target aggregate as 2^(k-d).
// Counts are exact while below 2^53. node_budget 0 = default (1e8);
// exceeding the budget throws WorkBudgetError.
struct BranchCount {
    double count = 0.0;
    std::uint64_t nodes_visited = 0;
};
BranchCount count_Nk(double x, double rho, int k, double lambda,
                     std::uint64_t node_budget = 0);

// Count of length-m words j with |sum_{i=1..m} (j_i - center_i) lambda^i| < rho
// (strict). center provides the first m digits. Pruned DFS on partial sums with
// one-sided tail bounds.
BranchCount count_D(const SymbolWord& center, double rho, int m, double lambda,
                    std::uint64_t node_budget = 0);

// Count of depth-k words whose interval contains x (closed); the number of
// lambda-expansions of x at depth k.
BranchCount count_expansions(double x, double lambda, int k,
                             std::uint64_t node_budget = 0);

// Least-squares slope of log mass(B(x,2^-j)) against log 2^-j over integer j in
// [j_lo, j_hi]. Scales whose ball carries zero mass are flagged and skipped.
struct LocalDimFit {
    double slope = 0.0;
    int scales_used = 0;
    int scales_empty = 0;
};
LocalDimFit local_dim_estimate(const DyadicHistogram& h, double x, int j_lo, int j_hi);

// min over dyadic intervals I at the histogram's finest level with mass(I) > 0
// of log mass(I) / log |I|: the empirical uniform lower exponent. Only the
// finest level is scanned; coarser levels measure the multiplicative constant
// of the mass bound rather than its exponent (any non-uniform measure has some
// coarse interval with mass > |I|, capping an all-levels minimum well below
// the true decay rate). Uniform -> 1 exactly, point mass -> 0.
double frostman_exponent(const DyadicHistogram& h);

}  // namespace pu
