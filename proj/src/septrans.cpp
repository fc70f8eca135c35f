#include "pu/septrans.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pu {

namespace {

constexpr std::uint64_t kMaxTableEntries = std::uint64_t{1} << 27;

void check_lambda(double lambda) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (1/2, 1)");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<double> lambda_powers(double lambda, int n) {
    std::vector<double> p(static_cast<std::size_t>(n) + 1);
    p[0] = 1.0;
    for (int i = 1; i <= n; ++i) p[i] = p[i - 1] * lambda;
    return p;
}

// Trit digit t at index i of `code` encodes coefficient t-1 at position
// base+i. Canonical evaluation: ascending index, zero coefficients skipped.
void decode_trits(std::uint64_t code, int count, int base, signed char* out) {
    for (int i = 0; i < count; ++i) {
        out[base + i] = static_cast<signed char>(static_cast<int>(code % 3) - 1);
        code /= 3;
    }
}

double canonical_eval(const signed char* coeffs, int n, const std::vector<double>& lpow) {
    double v = 0.0;
    for (int i = 0; i <= n; ++i) {
        const int c = coeffs[i];
        if (c != 0) v += static_cast<double>(c) * lpow[static_cast<std::size_t>(i)];
    }
    return v;
}

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t hcode = 0;
    std::uint64_t lcode = 0;
    bool valid = false;
};

bool better(const Candidate& a, const Candidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.value != b.value) return a.value < b.value;
    if (a.hcode != b.hcode) return a.hcode < b.hcode;
    return a.lcode < b.lcode;
}

double horner(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

double horner_deriv(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * x + c[i] * static_cast<double>(i);
    return v;
}

}  // namespace

MinPolyResult min_poly_value(double lambda, int n) {
    check_lambda(lambda);
    if (n < 0 || n > 40) throw std::invalid_argument("min_poly_value: n in [0, 40]");
    const int nlow = (n + 1) / 2;
    const int nhigh = n + 1 - nlow;

    std::uint64_t pow3_low = 1;
    for (int i = 0; i < nlow; ++i) pow3_low *= 3;
    if (pow3_low > kMaxTableEntries)
        throw WorkBudgetError("min_poly_value: half-table exceeds entry budget");
    std::uint64_t pow3_high = 1;
    for (int i = 0; i < nhigh; ++i) pow3_high *= 3;

    const auto lpow = lambda_powers(lambda, n);
    const std::uint64_t zlow = (pow3_low - 1) / 2;    // all-zero low coefficients
    const std::uint64_t zhigh = (pow3_high - 1) / 2;  // all-zero high coefficients

    // Low-half sums indexed by code, then sorted by (value, code). The sums
    // accumulate ascending powers, the same order canonical evaluation uses.
    std::vector<std::pair<double, std::uint32_t>> lows(pow3_low);
    lows[0] = {0.0, 0};
    std::uint64_t filled = 1;
    for (int i = 0; i < nlow; ++i) {
        const double p = lpow[static_cast<std::size_t>(i)];
        for (std::uint64_t c = 0; c < filled; ++c) {
            const double s = lows[c].first;
            lows[c + filled] = {s, 0};
            lows[c + 2 * filled] = {s + p, 0};
            lows[c] = {s - p, 0};
        }
        filled *= 3;
    }
    for (std::uint64_t c = 0; c < pow3_low; ++c)
        lows[c].second = static_cast<std::uint32_t>(c);

    // Best pairing of a nonzero low half with the zero high half, found by a
    // direct scan; the streamed search below can legitimately skip it when
    // other candidates dominate.
    Candidate seed;
    for (std::uint64_t c = 0; c < pow3_low; ++c) {
        if (c == zlow) continue;
        const double v = std::fabs(lows[c].first);
        Candidate cand{v, zhigh, c, true};
        if (better(cand, seed)) seed = cand;
    }

    std::sort(lows.begin(), lows.end());

    const std::uint64_t chunk = 4096;
    const std::uint64_t nchunks = (pow3_high + chunk - 1) / chunk;
    std::vector<Candidate> chunk_best(nchunks);

#pragma omp parallel for schedule(dynamic, 1)
    for (long long ci = 0; ci < static_cast<long long>(nchunks); ++ci) {
        const std::uint64_t h_lo = static_cast<std::uint64_t>(ci) * chunk;
        const std::uint64_t h_hi = std::min(pow3_high, h_lo + chunk);
        Candidate best;
        double approx_best = std::numeric_limits<double>::infinity();
        std::vector<signed char> coeffs(static_cast<std::size_t>(n) + 1, 0);
        for (std::uint64_t h = h_lo; h < h_hi; ++h) {
            double hs = 0.0;
            {
                std::uint64_t code = h;
                for (int i = 0; i < nhigh; ++i) {
                    const int t = static_cast<int>(code % 3) - 1;
                    code /= 3;
                    if (t != 0)
                        hs += static_cast<double>(t) *
                              lpow[static_cast<std::size_t>(nlow + i)];
                }
            }
            const auto it = std::lower_bound(
                lows.begin(), lows.end(), std::make_pair(-hs, std::uint32_t{0}));
            const long long center = it - lows.begin();
            for (long long d = -3; d <= 3; ++d) {
                const long long idx = center + d;
                if (idx < 0 || idx >= static_cast<long long>(pow3_low)) continue;
                const std::uint64_t lcode = lows[static_cast<std::size_t>(idx)].second;
                if (h == zhigh && lcode == zlow) continue;  // the zero vector
                const double approx =
                    std::fabs(lows[static_cast<std::size_t>(idx)].first + hs);
                if (approx > approx_best * (1.0 + 1e-9) + 1e-11) continue;
                decode_trits(lcode, nlow, 0, coeffs.data());
                decode_trits(h, nhigh, nlow, coeffs.data());
                const double v = std::fabs(canonical_eval(coeffs.data(), n, lpow));
                approx_best = std::min(approx_best, approx);
                Candidate cand{v, h, lcode, true};
                if (better(cand, best)) best = cand;
            }
        }
        chunk_best[static_cast<std::size_t>(ci)] = best;
    }

    Candidate overall = seed;
    for (const Candidate& c : chunk_best)
        if (better(c, overall)) overall = c;
    if (!overall.valid) throw std::logic_error("min_poly_value: no candidate found");

    MinPolyResult r;
    r.coeffs.assign(static_cast<std::size_t>(n) + 1, 0);
    decode_trits(overall.lcode, nlow, 0, r.coeffs.data());
    decode_trits(overall.hcode, nhigh, nlow, r.coeffs.data());
    r.min_value = std::fabs(canonical_eval(r.coeffs.data(), n, lpow));
    r.exact_zero = r.min_value <= 1e-13;
    return r;
}

std::vector<ProfileEntry> separation_profile(double lambda, int n_max) {
    check_lambda(lambda);
    if (n_max < 1 || n_max > 40)
        throw std::invalid_argument("separation_profile: n_max in [1, 40]");
    std::vector<ProfileEntry> out;
    out.reserve(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        const MinPolyResult r = min_poly_value(lambda, n);
        const auto t1 = std::chrono::steady_clock::now();
        ProfileEntry e;
        e.n = n;
        e.min_value = r.min_value;
        e.exact_zero = r.exact_zero;
        e.log_min_over_n = r.exact_zero
                               ? -std::numeric_limits<double>::infinity()
                               : std::log(r.min_value) / static_cast<double>(n);
        e.seconds = std::chrono::duration<double>(t1 - t0).count();
        out.push_back(e);
    }
    return out;
}

std::vector<SeriesRoot> series_roots(const std::vector<double>& coeffs, double lo,
                                     double hi) {
    if (coeffs.empty()) throw std::invalid_argument("series_roots: empty coefficients");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("series_roots: need finite lo < hi");
    constexpr int kCells = 4096;
    std::vector<SeriesRoot> roots;
    double fa = horner(coeffs, lo);
    for (int i = 0; i < kCells; ++i) {
        const double a = lo + (hi - lo) * static_cast<double>(i) / kCells;
        const double b = lo + (hi - lo) * static_cast<double>(i + 1) / kCells;
        const double fb = horner(coeffs, b);
        if (fa == 0.0) {
            roots.push_back({a, std::fabs(horner_deriv(coeffs, a))});
        } else if (fa * fb < 0.0) {
            double x0 = a, x1 = b, f0 = fa;
            for (int it = 0; it < 100 && x1 - x0 > 1e-12; ++it) {
                const double m = 0.5 * (x0 + x1);
                const double fm = horner(coeffs, m);
                if (fm == 0.0) {
                    x0 = x1 = m;
                    break;
                }
                if ((f0 < 0.0) == (fm < 0.0)) {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            const double r = 0.5 * (x0 + x1);
            roots.push_back({r, std::fabs(horner_deriv(coeffs, r))});
        }
        fa = fb;
    }
    if (fa == 0.0) roots.push_back({hi, std::fabs(horner_deriv(coeffs, hi))});
    return roots;
}

DoubleZeroReport double_zero_scan(double lo, double hi, int degree, double delta,
                                  std::uint64_t samples, std::uint64_t seed) {
    if (!(lo > 0.0) || !(lo < hi) || !(hi < 1.0))
        throw std::invalid_argument("double_zero_scan: need 0 < lo < hi < 1");
    if (degree < 1 || degree > 64)
        throw std::invalid_argument("double_zero_scan: degree in [1, 64]");
    if (!(delta > 0.0)) throw std::invalid_argument("double_zero_scan: delta > 0");
    if (samples == 0) throw std::invalid_argument("double_zero_scan: samples >= 1");

    std::vector<std::uint32_t> per_roots(samples, 0);
    std::vector<std::vector<DoubleZeroReport::Violation>> per_viol(samples);

#pragma omp parallel for schedule(dynamic, 16)
    for (long long s = 0; s < static_cast<long long>(samples); ++s) {
        // One generator per sample, keyed by (seed, sample index), so results
        // do not depend on how samples are assigned to threads.
        std::uint64_t state =
            splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(s) + 1)));
        std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1, 0.0);
        coeffs[0] = 1.0;
        for (int k = 1; k <= degree; ++k) {
            state = splitmix64(state);
            coeffs[static_cast<std::size_t>(k)] =
                static_cast<double>(static_cast<int>(state % 3) - 1);
        }
        const auto roots = series_roots(coeffs, lo, hi);
        per_roots[static_cast<std::size_t>(s)] = static_cast<std::uint32_t>(roots.size());
        for (const SeriesRoot& r : roots)
            if (r.deriv_abs < delta)
                per_viol[static_cast<std::size_t>(s)].push_back(
                    {static_cast<std::uint64_t>(s), r.root, r.deriv_abs});
    }

    DoubleZeroReport rep;
    rep.samples = samples;
    for (std::uint64_t s = 0; s < samples; ++s) {
        rep.roots_seen += per_roots[static_cast<std::size_t>(s)];
        for (const auto& v : per_viol[static_cast<std::size_t>(s)])
            rep.violations.push_back(v);
    }
    return rep;
}

TransversalityMeasure transversality_measure(const SymbolWord& i, const SymbolWord& j,
                                             double rho, double lo, double hi) {
    const int d = static_cast<int>(std::min(i.size(), j.size()));
    if (d < 1) throw std::invalid_argument("transversality_measure: empty words");
    if (i.bit(0) == j.bit(0))
        throw std::invalid_argument("transversality_measure: words must differ at position 1");
    if (!(rho > 0.0)) throw std::invalid_argument("transversality_measure: rho > 0");
    if (!(lo > 0.5) || !(lo < hi) || !(hi <= 0.668 + 1e-12))
        throw std::invalid_argument("transversality_measure: [lo, hi] within (1/2, 0.668]");
    const double tail = std::pow(hi, d + 1) / (1.0 - hi);
    if (!(tail < rho / 10.0))
        throw std::invalid_argument(
            "transversality_measure: truncation too shallow for this rho");

    std::vector<double> coeffs(static_cast<std::size_t>(d) + 1, 0.0);
    for (int k = 1; k <= d; ++k)
        coeffs[static_cast<std::size_t>(k)] =
            static_cast<double>(i.bit(k - 1) - j.bit(k - 1));

    constexpr double kResolution = 1e-8;
    double measure = 0.0;
    std::vector<std::pair<double, double>> stack;
    stack.push_back({lo, hi});
    while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        // Range of the truncated series over [a, b]: each monomial c_k l^k is
        // monotone, so its range endpoints are at a and b.
        double m_lo = 0.0, m_hi = 0.0;
        double pa = 1.0, pb = 1.0;
        for (int k = 1; k <= d; ++k) {
            pa *= a;
            pb *= b;
            const double c = coeffs[static_cast<std::size_t>(k)];
            if (c > 0.0) {
                m_lo += c * pa;
                m_hi += c * pb;
            } else if (c < 0.0) {
                m_lo += c * pb;
                m_hi += c * pa;
            }
        }
        if (m_lo >= rho || m_hi <= -rho) continue;
        if (m_lo > -rho && m_hi < rho) {
            measure += b - a;
            continue;
        }
        if (b - a <= kResolution) {
            const double mid = 0.5 * (a + b);
            if (std::fabs(horner(coeffs, mid)) < rho) measure += b - a;
            continue;
        }
        const double mid = 0.5 * (a + b);
        stack.push_back({mid, b});
        stack.push_back({a, mid});
    }
    TransversalityMeasure out;
    out.measure = measure;
    out.implied_c = measure / rho;
    return out;
}

}  // namespace pu
