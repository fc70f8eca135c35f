#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "pu/params.hpp"
#include "pu/scales.hpp"
#include "pu/symbolic.hpp"
#include "pu/word.hpp"

namespace pu {

// Shrinking-target family Q(z, gamma^n): closed squares of SIDE 2*gamma^n
// (radius gamma^n) centered at pi_2d(z).
struct TargetSpec {
    SymbolWord z;
    Params p;

    TargetSpec() = default;
    TargetSpec(SymbolWord z_, Params p_) : z(std::move(z_)), p(p_) {}
    Point2 center() const { return pi_2d(z, p.lambda); }
    // Closed square of side 2r around the center, clipped to [0,1]^2 on request.
    CylinderRect cube(double r, bool clip = false) const;
};

// Return times n_1 < n_2 < ... < n_M with the gap law
// n_{m+1} = max(ceil(c*n_m), n_m + ell2(n_m) + 1). Explicit lists are accepted
// if they satisfy n_{m+1} > n_m + ell2(n_m). coverage_depth = the depth where a
// hypothetical next return would start; weights are defined through it.
class Schedule {
public:
    static Schedule from_rule(long long n1, double c, int returns, const Params& p);
    static Schedule from_returns(std::vector<long long> ns, const Params& p);

    const std::vector<long long>& returns() const { return ns_; }
    int ell1_at(int m) const { return ell1_[m]; }   // m is 0-based return index
    int ell2_at(int m) const { return ell2_[m]; }
    // L_m = sum of ell2 over returns 0..m-1 (so lsum(0) = 0 = L before n_1).
    long long lsum(int m) const { return lsum_[m]; }
    long long coverage_depth() const { return coverage_; }
    const Params& params() const { return p_; }

private:
    Schedule() = default;
    void finalize();
    std::vector<long long> ns_;
    std::vector<int> ell1_, ell2_;
    std::vector<long long> lsum_;
    long long coverage_ = 0;
    Params p_;
};

// Mass distribution on coding space supporting the return behavior. Cases 1
// and 2 share the same weights (split evenly outside return blocks, follow the
// target coding for ell2(n_m) digits after each return); they differ only in
// the parameter regime they are valid for. Case 3 pins only ell1(n_m) digits,
// then distributes evenly over the ambiguous window up to ell2(n_m) among the
// words whose signed power sum stays within lambda^(ell2-ell1).
class MeasureSpec {
public:
    MeasureSpec(int which_case, TargetSpec target, Schedule sched);

    int which_case() const { return case_; }
    const TargetSpec& target() const { return target_; }
    const Schedule& schedule() const { return sched_; }
    const Params& params() const { return target_.p; }

    // Total D-count of the ambiguous window at return m (case 3); cached.
    double window_total(int m) const;

    // Lexicographically sorted admissible window words at return m (case 3);
    // cached. Used by path sampling; exposed so the split can be inspected.
    const std::vector<SymbolWord>& window_members(int m) const;

private:
    int case_;
    TargetSpec target_;
    Schedule sched_;
    mutable std::vector<double> window_totals_;
    mutable std::vector<std::vector<SymbolWord>> window_members_;
    mutable std::vector<unsigned char> members_built_;
    mutable std::unique_ptr<std::mutex> cache_mutex_;
};

// Weight of the cylinder [w]. 0 when w violates a pinned digit or falls outside
// an ambiguous window. Throws when |w| exceeds the schedule's coverage depth.
double weight(const MeasureSpec& ms, const SymbolWord& w);

// Mass bracket of the square Q(pi_2d(x), R): weights of depth-d words whose
// cylinder box intersects (upper) or is contained in (lower) the square, with
// d = k_of_r(ceil(-log2 R)) + 4. Pruned DFS guided by both coordinates and by
// weight positivity. node_budget 0 = 1e8; exhaustion yields complete = false.
struct MassBracket {
    double lower = 0.0;
    double upper = 0.0;
    int depth = 0;
    std::uint64_t nodes_visited = 0;
    bool complete = true;
};
MassBracket mu_ball(const MeasureSpec& ms, const SymbolWord& xbar, double R,
                    std::uint64_t node_budget = 0);

// Per-radius mass decay log2(mu)/log2(R) for r in [r_lo, r_hi] (R = 2^-r),
// with three window summaries. window_slope, the headline one, is the secant
// of log2(mu) across the window endpoints (the two-scale dimension estimate;
// insensitive to where inside a mass plateau the endpoints land). min_ratio is
// the liminf-style minimum of the per-r ratios; with finitely many returns at
// a fixed spacing factor it sits below the asymptotic dimension by the
// accumulated pinned-block overhead, so it reads as a bias diagnostic, not an
// estimate. ls_slope is the least-squares slope over all window points; it
// overshoots on plateau/ramp profiles and is kept for completeness.
struct ProbeEntry {
    int r = 0;
    double log2_mu_upper = 0.0;
    double log2_mu_lower = 0.0;
    double ratio = 0.0;  // log2(mu_upper)/(-r)
    bool complete = true;
};
struct ProbeResult {
    std::vector<ProbeEntry> entries;
    double window_slope = 0.0;
    double min_ratio = 0.0;
    double ls_slope = 0.0;
};
ProbeResult local_dim_probe(const MeasureSpec& ms, const SymbolWord& x, int r_lo,
                            int r_hi);

// Random coding drawn from the measure: one uniform draw per level, digit
// chosen by the conditional child weights. Deterministic in (seed).
SymbolWord sample_path(const MeasureSpec& ms, int depth, std::uint64_t seed);

// Monte Carlo mean of sup_dist(pi(i), pi(j))^-t over independent path pairs.
// `depth` sets the resolution: distances are floored at C(lambda)*2^-depth.
// Paths are sampled long enough (capped at schedule coverage) that the
// truncation error lambda^len sits two orders below the floor; otherwise a
// pair of paths identical to the sampled length would read as coincident and
// be floored even though its true separation is ~lambda^len >> 2^-len.
// Per-pair RNG streams keyed by (seed, pair), so raising `depth` refines the
// same pairs and results do not depend on the thread count.
struct EnergyStats {
    double t = 0.0;
    int depth = 0;
    std::uint64_t pairs = 0;
    double mean = 0.0;
};
EnergyStats energy_estimate(const MeasureSpec& ms, double t, std::uint64_t pairs,
                            int depth, std::uint64_t seed);

// True when digits n+1..n+ell_n of i (1-based) equal the first ell_n digits of
// the target coding, ell_n = ell_n_dynamical(n).
bool dynamical_membership(const SymbolWord& i, const TargetSpec& t, long long n);

// f_w(Q(z, gamma^n)) for all |w| = n, clipped to [0,1]^2. n <= 20.
std::vector<CylinderRect> preimage_rects(const TargetSpec& t, int n);

// Covering cost of the n-th target stage under three strategies:
//   A: one cube per depth-n preimage, side 2^-r0 (largest r0 with
//      2^-r0 >= lambda^(n+ell2(n))), count 2^n.
//   B: cubes of side (gamma/2)^n, count 2^n * ceil((2 lambda)^n).
//   C: cubes of side 2^-(n+ell2(n)), count 2^n * N * ceil((2 lambda)^(n+ell2(n)))
//      where N counts depth-ell2(n) branches near proj1(z) (measured via
//      count_Nk unless log2_N_override >= 0 supplies it).
// Logs are the authoritative fields; side/count are their exponentials and may
// under/overflow for extreme n.
struct CoverCount {
    char strategy = 'A';
    double side_log2 = 0.0;
    double count_log2 = 0.0;
    double side = 0.0;
    double count = 0.0;
    double exponent() const { return count_log2 / -side_log2; }
};
CoverCount cover_count(char strategy, const TargetSpec& t, long long n,
                       double log2_N_override = -1.0);

// Cylinder boxes of every depth-`depth` word: a covering approximation of the
// attractor. depth <= 24.
std::vector<CylinderRect> attractor_rects(double lambda, int depth);

// Number of grid squares of side 2^-r (anchored at 0, restricted to [0,1]^2)
// meeting the union of rects. Rectangles are treated half-open on the right/top
// except degenerate edges, so unions of grid-aligned cells count exactly.
// Throws WorkBudgetError when the projected count exceeds 1e8.
std::uint64_t box_count(const std::vector<CylinderRect>& rects, int r);

// Least-squares slope of log N(2^-r) against r log 2 over r in [r_lo, r_hi].
// Requires at least 3 scales.
struct BoxDimFit {
    double slope = 0.0;
    std::vector<std::pair<int, std::uint64_t>> counts;
};
BoxDimFit dim_box_estimate(const std::vector<CylinderRect>& rects, int r_lo, int r_hi);

// Pixel raster of the rect union on a px-by-px grid over [0,1]^2 (row 0 = top).
// Same cell convention as box_count, so px = 2^r reproduces its count.
std::vector<std::uint8_t> raster_rects(const std::vector<CylinderRect>& rects, int px);

}  // namespace pu
