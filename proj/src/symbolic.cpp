#include "pu/symbolic.hpp"

#include <cmath>
#include <stdexcept>

namespace pu {

namespace {
void check_lambda(double lambda) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (1/2, 1)");
}
}  // namespace

ValueWithError pi_I(const SymbolWord& w, double lambda) {
    check_lambda(lambda);
    double v = 0.0;
    double pw = 1.0;  // lambda^(k-1)
    const double one_minus = 1.0 - lambda;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w.bit(k)) v += one_minus * pw;
        pw *= lambda;
    }
    return {v, pw};  // pw = lambda^|w|
}

Point2 pi_2d(const SymbolWord& w, double lambda) {
    check_lambda(lambda);
    double x = pi_I(w, lambda).value;
    double y = 0.0;
    double q = 1.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        q *= 0.5;
        if (w.bit(k)) y += q;
    }
    return {x, y};
}

CylinderRect cylinder_box(const SymbolWord& w, double lambda) {
    Point2 c = pi_2d(w, lambda);
    double wx = std::pow(lambda, static_cast<double>(w.size()));
    double wy = std::pow(0.5, static_cast<double>(w.size()));
    return {c.x, c.x + wx, c.y, c.y + wy};
}

SeparationConstant separation_constant(double lambda) {
    check_lambda(lambda);
    const double gap = lambda - 0.5;
    SeparationConstant s;
    double pw = 1.0;
    int n = 0;
    while (true) {
        ++n;
        pw *= lambda;
        if (pw < gap) break;
        if (n > 100000) throw std::runtime_error("separation_constant: no n found");
    }
    s.n = n;
    s.c1 = 2.0 * lambda * lambda - lambda - 2.0 * pw * lambda;  // 2l^2 - l - 2l^(n+1)
    s.c = std::min(std::pow(0.5, n), s.c1);
    return s;
}

Point2 expand_orbit(const SymbolWord& w, std::size_t n, double lambda) {
    if (n > w.size()) throw std::out_of_range("expand_orbit: shift beyond word length");
    return pi_2d(w.shift(n), lambda);
}

double sup_dist(const Point2& a, const Point2& b) {
    return std::max(std::fabs(a.x - b.x), std::fabs(a.y - b.y));
}

}  // namespace pu
