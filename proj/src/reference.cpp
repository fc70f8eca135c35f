#include "pu/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pu/scales.hpp"
#include "pu/symbolic.hpp"

namespace pu::ref {

namespace {

std::vector<double> lambda_powers(double lambda, int k) {
    std::vector<double> p(static_cast<std::size_t>(k) + 1);
    p[0] = 1.0;
    for (int i = 1; i <= k; ++i) p[i] = p[i - 1] * lambda;
    return p;
}

void check_lambda(double lambda) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (1/2, 1)");
}

}  // namespace

double count_Nk(double x, double rho, int k, double lambda) {
    check_lambda(lambda);
    if (k < 0 || k > 26) throw std::invalid_argument("ref::count_Nk: k in [0, 26]");
    const auto lpow = lambda_powers(lambda, k);
    const double lo = x - rho * lpow[static_cast<std::size_t>(k)];
    const double hi = x + rho * lpow[static_cast<std::size_t>(k)];
    double count = 0.0;
    struct Rec {
        const std::vector<double>& lpow;
        double lambda, lo, hi;
        int k;
        double& count;
        void go(int d, double v) {
            if (d == k) {
                if (v <= hi && v + lpow[static_cast<std::size_t>(k)] >= lo) count += 1.0;
                return;
            }
            go(d + 1, v);
            go(d + 1, v + (1.0 - lambda) * lpow[static_cast<std::size_t>(d)]);
        }
    } rec{lpow, lambda, lo, hi, k, count};
    rec.go(0, 0.0);
    return count;
}

double count_D(const SymbolWord& center, double rho, int m, double lambda) {
    check_lambda(lambda);
    if (m < 0 || m > 26) throw std::invalid_argument("ref::count_D: m in [0, 26]");
    if (static_cast<int>(center.size()) < m)
        throw std::invalid_argument("ref::count_D: center shorter than m");
    const auto lpow = lambda_powers(lambda, m);
    double count = 0.0;
    struct Rec {
        const std::vector<double>& lpow;
        const SymbolWord& center;
        double rho;
        int m;
        double& count;
        void go(int d, double s) {
            if (d == m) {
                if (std::fabs(s) < rho) count += 1.0;
                return;
            }
            const int c = center.bit(d);
            for (int b = 0; b <= 1; ++b) {
                const double s2 =
                    b == c ? s
                           : s + static_cast<double>(b - c) *
                                     lpow[static_cast<std::size_t>(d) + 1];
                go(d + 1, s2);
            }
        }
    } rec{lpow, center, rho, m, count};
    rec.go(0, 0.0);
    return count;
}

double count_expansions(double x, double lambda, int k) {
    check_lambda(lambda);
    if (k < 0 || k > 26)
        throw std::invalid_argument("ref::count_expansions: k in [0, 26]");
    const auto lpow = lambda_powers(lambda, k);
    double count = 0.0;
    struct Rec {
        const std::vector<double>& lpow;
        double lambda, x;
        int k;
        double& count;
        void go(int d, double v) {
            if (d == k) {
                if (v <= x && x <= v + lpow[static_cast<std::size_t>(k)]) count += 1.0;
                return;
            }
            go(d + 1, v);
            go(d + 1, v + (1.0 - lambda) * lpow[static_cast<std::size_t>(d)]);
        }
    } rec{lpow, lambda, x, k, count};
    rec.go(0, 0.0);
    return count;
}

MinPolyResult min_poly_value(double lambda, int n) {
    check_lambda(lambda);
    if (n < 0 || n > 16) throw std::invalid_argument("ref::min_poly_value: n in [0, 16]");
    const auto lpow = lambda_powers(lambda, n);
    MinPolyResult best;
    best.min_value = std::numeric_limits<double>::infinity();
    std::vector<signed char> cur(static_cast<std::size_t>(n) + 1, 0);
    // Full scan in ascending trit-code order (coefficient -1, 0, +1 at each
    // index); ties keep the first (smallest code), matching the streamed
    // kernel's tie-break.
    struct Rec {
        const std::vector<double>& lpow;
        int n;
        std::vector<signed char>& cur;
        MinPolyResult& best;
        void go(int i, double s, bool nonzero) {
            if (i == n + 1) {
                if (!nonzero) return;
                const double v = std::fabs(s);
                if (v < best.min_value) {
                    best.min_value = v;
                    best.coeffs = cur;
                }
                return;
            }
            for (int t = 0; t < 3; ++t) {
                const int c = t - 1;
                cur[static_cast<std::size_t>(i)] = static_cast<signed char>(c);
                const double s2 =
                    c == 0 ? s
                           : s + static_cast<double>(c) * lpow[static_cast<std::size_t>(i)];
                go(i + 1, s2, nonzero || c != 0);
            }
            cur[static_cast<std::size_t>(i)] = 0;
        }
    } rec{lpow, n, cur, best};
    rec.go(0, 0.0, false);
    best.exact_zero = best.min_value <= 1e-13;
    return best;
}

int smallest_exponent(double base, double rhs_base, long long rhs_exp) {
    if (!(base > 0.0) || !(base < 1.0))
        throw std::invalid_argument("ref::smallest_exponent: base in (0,1)");
    if (!(rhs_base > 0.0) || !(rhs_base < 1.0))
        throw std::invalid_argument("ref::smallest_exponent: rhs_base in (0,1)");
    if (rhs_exp < 1) throw std::invalid_argument("ref::smallest_exponent: rhs_exp >= 1");
    // Both sides go through std::pow: evaluating one side by iterated
    // multiplication shifts exact ties (e.g. base == rhs_base) by an ulp.
    const double rhs = std::pow(rhs_base, static_cast<double>(rhs_exp));
    int l = 1;
    while (std::pow(base, static_cast<double>(l)) > rhs) {
        ++l;
        if (l > 10'000'000)
            throw std::runtime_error("ref::smallest_exponent: no exponent within 1e7");
    }
    return l;
}

double mu_ball(const MeasureSpec& ms, const SymbolWord& xbar, double R, int depth) {
    if (!(R > 0.0)) throw std::invalid_argument("ref::mu_ball: R > 0");
    if (depth < 0 || depth > 24)
        throw std::invalid_argument("ref::mu_ball: depth in [0, 24]");
    if (depth > ms.schedule().coverage_depth())
        throw std::invalid_argument("ref::mu_ball: depth beyond schedule coverage");
    const double lambda = ms.params().lambda;
    const Point2 c = pi_2d(xbar, lambda);
    const auto lpow = lambda_powers(lambda, depth);
    double total = 0.0;
    SymbolWord w;
    // Support-tree enumeration: descend wherever the prefix carries weight,
    // test the box only at the leaves.
    struct Rec {
        const MeasureSpec& ms;
        const std::vector<double>& lpow;
        double lambda, R;
        Point2 c;
        int depth;
        double& total;
        SymbolWord& w;
        void go(int d) {
            if (weight(ms, w) == 0.0) return;
            if (d == depth) {
                const Point2 p = pi_2d(w, lambda);
                const double width = lpow[static_cast<std::size_t>(depth)];
                const double height = std::ldexp(1.0, -depth);
                const bool hit = p.x <= c.x + R && p.x + width >= c.x - R &&
                                 p.y <= c.y + R && p.y + height >= c.y - R;
                if (hit) total += weight(ms, w);
                return;
            }
            for (int b = 0; b <= 1; ++b) {
                w.push_back(b);
                go(d + 1);
                w.pop_back();
            }
        }
    } rec{ms, lpow, lambda, R, c, depth, total, w};
    rec.go(0);
    return total;
}

std::uint64_t box_count(const std::vector<CylinderRect>& rects, int r) {
    if (r < 0 || r > 10) throw std::invalid_argument("ref::box_count: r in [0, 10]");
    const long long s = 1LL << r;
    std::uint64_t total = 0;
    for (long long j = 0; j < s; ++j) {
        for (long long i = 0; i < s; ++i) {
            const double cx_lo = static_cast<double>(i) / static_cast<double>(s);
            const double cx_hi = static_cast<double>(i + 1) / static_cast<double>(s);
            const double cy_lo = static_cast<double>(j) / static_cast<double>(s);
            const double cy_hi = static_cast<double>(j + 1) / static_cast<double>(s);
            bool hit = false;
            for (const CylinderRect& rc : rects) {
                bool x_ok;
                if (rc.xhi < rc.xlo) continue;
                if (rc.xhi == rc.xlo)
                    x_ok = rc.xlo >= 0.0 && rc.xlo <= 1.0 &&
                           ((rc.xlo >= cx_lo && rc.xlo < cx_hi) ||
                            (rc.xlo == 1.0 && i == s - 1));
                else
                    x_ok = rc.xlo < cx_hi && rc.xhi > cx_lo;
                if (!x_ok) continue;
                bool y_ok;
                if (rc.yhi < rc.ylo) continue;
                if (rc.yhi == rc.ylo)
                    y_ok = rc.ylo >= 0.0 && rc.ylo <= 1.0 &&
                           ((rc.ylo >= cy_lo && rc.ylo < cy_hi) ||
                            (rc.ylo == 1.0 && j == s - 1));
                else
                    y_ok = rc.ylo < cy_hi && rc.yhi > cy_lo;
                if (y_ok) {
                    hit = true;
                    break;
                }
            }
            if (hit) ++total;
        }
    }
    return total;
}

double energy_mean(const MeasureSpec& ms, double t, std::uint64_t pairs, int depth,
                   std::uint64_t seed) {
    if (pairs < 1) throw std::invalid_argument("ref::energy_mean: pairs >= 1");
    const double lambda = ms.params().lambda;
    const double floor_dist = separation_constant(lambda).c * std::ldexp(1.0, -depth);
    const long long want = static_cast<long long>(
        std::ceil(std::log(floor_dist / 128.0) / std::log(lambda)));
    const int len = static_cast<int>(
        std::min({want, ms.schedule().coverage_depth(),
                  static_cast<long long>(SymbolWord::kMaxLength)}));
    double sum = 0.0;
    for (std::uint64_t q = 0; q < pairs; ++q) {
        const std::uint64_t sa = seed ^ (0x9E3779B97F4A7C15ULL * (2 * q + 1));
        const std::uint64_t sb = seed ^ (0x9E3779B97F4A7C15ULL * (2 * q + 2));
        const SymbolWord wa = sample_path(ms, len, sa);
        const SymbolWord wb = sample_path(ms, len, sb);
        const double dist = sup_dist(pi_2d(wa, lambda), pi_2d(wb, lambda));
        sum += std::pow(std::max(dist, floor_dist), -t);
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace pu::ref
