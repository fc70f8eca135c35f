#pragma once

#include <stdexcept>

namespace pu {

// Work-budget exhaustion (node caps, table caps). The CLI maps this to exit 3.
class WorkBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Regime { Case1, Boundary, Case23 };

// Contraction pair for the self-affine system
//   f0(x,y) = (lambda*x, y/2),  f1(x,y) = (lambda*x + 1-lambda, y/2 + 1/2)
// plus the target shrink rate gamma. Valid range: 1/2 < lambda < 1, 0 < gamma < 1.
struct Params {
    double lambda = 0.0;
    double gamma = 0.0;

    Params() = default;
    Params(double lam, double gam) : lambda(lam), gamma(gam) { validate(); }

    void validate() const {
        if (!(lambda > 0.5) || !(lambda < 1.0))
            throw std::invalid_argument("Params: lambda must lie in (1/2, 1)");
        if (!(gamma > 0.0) || !(gamma < 1.0))
            throw std::invalid_argument("Params: gamma must lie in (0, 1)");
    }

    // Case1 when lambda < 1/(2 gamma); Case23 when lambda > 1/(2 gamma).
    Regime regime() const {
        double p = 2.0 * lambda * gamma;
        if (p < 1.0) return Regime::Case1;
        if (p > 1.0) return Regime::Case23;
        return Regime::Boundary;
    }
};

}  // namespace pu
