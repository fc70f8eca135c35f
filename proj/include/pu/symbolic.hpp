#pragma once

#include "pu/params.hpp"
#include "pu/word.hpp"

namespace pu {

struct ValueWithError {
    double value = 0.0;
    double tail_bound = 0.0;  // sup distance to any infinite extension
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned closed rectangle [xlo,xhi] x [ylo,yhi].
struct CylinderRect {
    double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
    double width() const { return xhi - xlo; }
    double height() const { return yhi - ylo; }
};

// Horizontal coding value sum_k w_k (1-lambda) lambda^(k-1) (digits 1-based in
// the formula). Lies in [0,1]; tail_bound = lambda^|w| dominates any extension.
ValueWithError pi_I(const SymbolWord& w, double lambda);

// Planar coding: x as above, y = sum_k w_k 2^-k.
Point2 pi_2d(const SymbolWord& w, double lambda);

// Image of the unit square under the composition f_{w_1} o ... o f_{w_n}:
// [pi_I(w), pi_I(w)+lambda^n] x [y(w), y(w)+2^-n].
CylinderRect cylinder_box(const SymbolWord& w, double lambda);

// Separation constant C(lambda) with d(pi(i),pi(j)) >= C 2^-wedge(i,j) in the
// sup metric, for distinct infinite codings. Construction: n = smallest integer
// with lambda^n < lambda - 1/2; C1 = 2 lambda^2 - lambda - 2 lambda^(n+1);
// C = min(2^-n, C1). Requires lambda > 1/2.
struct SeparationConstant {
    int n = 0;
    double c1 = 0.0;
    double c = 0.0;
};
SeparationConstant separation_constant(double lambda);

// pi_2d of the n-fold shifted word (the orbit of the expanding dynamics, which
// applies f_i^{-1} according to the coding; the overlap strip resolves to the
// 0-branch, which is invisible at the coding level).
Point2 expand_orbit(const SymbolWord& w, std::size_t n, double lambda);

// Sup-metric distance between pi_2d images.
double sup_dist(const Point2& a, const Point2& b);

}  // namespace pu
