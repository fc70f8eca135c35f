#include "pu/scales.hpp"

#include <cmath>
#include <stdexcept>

namespace pu {

namespace {

constexpr double kTieSlack = 1e-9;

// True when base^l <= limit_base^limit_exp, with a relative tie slack so exact
// real-arithmetic power coincidences land on the <= side. Falls back to the
// log comparison when either power leaves binary64 range.
bool power_le(double base, long long l, double limit_base, long long limit_exp) {
    double lhs_log2 = static_cast<double>(l) * std::log2(base);
    double rhs_log2 = static_cast<double>(limit_exp) * std::log2(limit_base);
    if (lhs_log2 > -980.0 && rhs_log2 > -980.0) {
        double lhs = std::pow(base, static_cast<double>(l));
        double rhs = std::pow(limit_base, static_cast<double>(limit_exp));
        return lhs <= rhs * (1.0 + kTieSlack);
    }
    double slack = std::max(kTieSlack, std::fabs(rhs_log2) * 1e-12);
    return lhs_log2 <= rhs_log2 + slack;
}

// Smallest l >= 1 with base^l <= limit_base^limit_exp.
int smallest_exponent(double base, double limit_base, long long limit_exp) {
    double q = static_cast<double>(limit_exp) * std::log(limit_base) / std::log(base);
    long long l = static_cast<long long>(std::ceil(q - kTieSlack));
    if (l < 1) l = 1;
    while (!power_le(base, l, limit_base, limit_exp)) ++l;
    while (l > 1 && power_le(base, l - 1, limit_base, limit_exp)) --l;
    if (l > 1000000000LL) throw std::invalid_argument("scale exponent out of range");
    return static_cast<int>(l);
}

// Largest r >= 0 with (1/2)^r >= base^exp  (i.e. 2^-r >= base^exp).
long long largest_halving(double base, long long exp) {
    double q = static_cast<double>(exp) * std::log(base) / std::log(0.5);
    long long r = static_cast<long long>(std::floor(q + kTieSlack));
    if (r < 0) r = 0;
    while (r > 0 && !power_le(base, exp, 0.5, r)) --r;       // need base^exp <= 2^-r
    while (power_le(base, exp, 0.5, r + 1)) ++r;
    return r;
}

void check_n(long long n) {
    if (n < 1) throw std::invalid_argument("scale functions need n >= 1");
}

}  // namespace

int ell1(long long n, const Params& p) {
    p.validate();
    check_n(n);
    return smallest_exponent(0.5, p.gamma, n);
}

int ell2(long long n, const Params& p) {
    p.validate();
    check_n(n);
    return smallest_exponent(p.lambda, p.gamma, n);
}

int k_of_r(long long r, const Params& p) {
    p.validate();
    if (r < 1) throw std::invalid_argument("k_of_r needs r >= 1");
    return smallest_exponent(p.lambda, 0.5, r);
}

ScaleTable thresholds(long long n_m, long long n_next, const Params& p) {
    p.validate();
    check_n(n_m);
    if (n_next <= n_m) throw std::invalid_argument("thresholds: n_next must exceed n_m");
    ScaleTable t;
    t.n_m = n_m;
    t.n_next = n_next;
    t.ell1_n = ell1(n_m, p);
    t.ell2_n = ell2(n_m, p);
    t.r_minus1 = largest_halving(p.lambda, n_m);
    t.r_1 = largest_halving(p.lambda, n_next);

    // Smallest r with k_of_r(r) >= n_m + ell2(n_m): guess from logs, repair
    // against k_of_r itself.
    long long target = n_m + t.ell2_n;
    double q = static_cast<double>(target - 1) * std::log(p.lambda) / std::log(0.5);
    long long r0 = static_cast<long long>(std::floor(q + kTieSlack)) + 1;
    if (r0 < 1) r0 = 1;
    while (k_of_r(r0, p) < target) ++r0;
    while (r0 > 1 && k_of_r(r0 - 1, p) >= target) --r0;
    t.r_0 = r0;
    return t;
}

double dim_formula(int which_case, const Params& p) {
    p.validate();
    const double l2 = std::log(2.0);
    const double ll = std::log(p.lambda);
    const double lg = std::log(p.gamma);
    switch (which_case) {
        case 1:
            return -l2 / (ll + lg);
        case 2:
            return 2.0 + ll / l2 - lg / (lg + ll);
        case 3:
            return (2.0 * l2 + ll) / (l2 - lg);
        default:
            throw std::invalid_argument("dim_formula: case must be 1, 2 or 3");
    }
}

double dim_attractor(double lambda) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("dim_attractor: lambda must lie in (1/2, 1)");
    return 2.0 + std::log(lambda) / std::log(2.0);
}

double t_gamma_identity_gap(const Params& p) {
    const double l2 = std::log(2.0);
    const double ll = std::log(p.lambda);
    const double lg = std::log(p.gamma);
    double direct = 2.0 + ll / l2 - lg / (lg + ll);
    double ratio = lg / ll;
    double alternate = (l2 * (2.0 + ratio) + (lg + ll)) / (l2 * (1.0 + ratio));
    return std::fabs(direct - alternate);
}

Case3Constants case3_constants(double lambda0, double lambda1, double gamma) {
    Params check0(lambda0, gamma), check1(lambda1, gamma);
    if (!(lambda0 <= lambda1))
        throw std::invalid_argument("case3_constants: need lambda0 <= lambda1");
    if (!(lambda1 <= 0.668))
        throw std::invalid_argument("case3_constants: interval must stay within (1/2, 0.668]");
    if (!(lambda0 * 2.0 * gamma > 1.0))
        throw std::invalid_argument("case3_constants: need lambda0 > 1/(2 gamma)");
    const double l2 = std::log(2.0);
    const double ll0 = std::log(lambda0);
    const double ll1 = std::log(lambda1);
    const double lg = std::log(gamma);
    Case3Constants c;
    c.xi = lg * std::log(2.0 * lambda0) / (ll0 * l2);
    c.s = (2.0 * l2 + ll0) / (l2 - lg);
    c.eta = (ll0 / ll1 - 1.0) + (c.s + 1.0) * (lg / ll1 - lg / ll0);
    return c;
}

long long ell_n_dynamical(long long n, const Params& p) {
    p.validate();
    if (n < 0) throw std::invalid_argument("ell_n_dynamical: n >= 0");
    double v = static_cast<double>(n) * std::log(p.lambda) / std::log(p.gamma);
    return static_cast<long long>(std::ceil(v));
}

long long largest_halving_exponent(double base, long long exp) {
    if (!(base > 0.0) || !(base < 1.0))
        throw std::invalid_argument("largest_halving_exponent: base in (0,1)");
    if (exp < 1) throw std::invalid_argument("largest_halving_exponent: exp >= 1");
    return largest_halving(base, exp);
}

}  // namespace pu
