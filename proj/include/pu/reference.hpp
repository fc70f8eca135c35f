#pragma once

#include <vector>

#include "pu/bernoulli.hpp"
#include "pu/septrans.hpp"
#include "pu/targets.hpp"

// Serial reference implementations: straight enumerations with none of the
// pruning, aggregation, or meet-in-the-middle machinery of the main kernels.
// They exist as independent oracles for the tests and as baselines for the
// benchmark binary. Deliberately small-input only.
namespace pu::ref {

// Full 2^k enumeration of count_Nk. k <= 26.
double count_Nk(double x, double rho, int k, double lambda);

// Full 2^m enumeration of count_D. m <= 26.
double count_D(const SymbolWord& center, double rho, int m, double lambda);

// Full 2^k enumeration of count_expansions. k <= 26.
double count_expansions(double x, double lambda, int k);

// Full 3^(n+1) enumeration of min_poly_value. n <= 16.
MinPolyResult min_poly_value(double lambda, int n);

// Smallest l with base^l <= rhs_base^rhs_exp by linear scan of binary64 powers.
int smallest_exponent(double base, double rhs_base, long long rhs_exp);

// Ball mass by full enumeration of the measure's support tree at the given
// depth (no geometric pruning): sum of weights of support words whose cylinder
// box intersects the square of radius R around pi_2d(xbar).
double mu_ball(const MeasureSpec& ms, const SymbolWord& xbar, double R, int depth);

// Box count by scanning every grid cell against every rect. r <= 10.
std::uint64_t box_count(const std::vector<CylinderRect>& rects, int r);

// Monte Carlo energy with the same RNG streams as pu::energy_estimate but a
// single serial accumulation loop.
double energy_mean(const MeasureSpec& ms, double t, std::uint64_t pairs, int depth,
                   std::uint64_t seed);

}  // namespace pu::ref
