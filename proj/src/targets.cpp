#include "pu/targets.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <utility>

#include "pu/bernoulli.hpp"

namespace pu {

namespace {

constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;
constexpr std::uint64_t kMaxWindowMembers = 20'000'000;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-free uniform stream: one state advance per draw.
struct UnitStream {
    std::uint64_t s;
    double next() {
        s = splitmix64(s);
        return std::ldexp(static_cast<double>(s >> 11), -53);
    }
};

std::vector<double> lambda_powers(double lambda, long long k) {
    std::vector<double> p(static_cast<std::size_t>(k) + 1);
    p[0] = 1.0;
    for (long long i = 1; i <= k; ++i)
        p[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i) - 1] * lambda;
    return p;
}

// Ambiguous-window data for one return (case 3): center digits, power table,
// one-sided completion tails, and the admission radius lambda^W.
struct WindowData {
    int w = 0;
    double rho = 1.0;
    std::vector<int> center;        // digits 1..W of the window center
    std::vector<double> lpow;       // lambda^0..lambda^W
    std::vector<double> pos, neg;   // completion tails by consumed offset 0..W
};

WindowData build_window(const Schedule& sched, const SymbolWord& z, int m) {
    WindowData wd;
    wd.w = sched.ell2_at(m) - sched.ell1_at(m);
    const double lambda = sched.params().lambda;
    wd.lpow = lambda_powers(lambda, wd.w);
    wd.rho = wd.lpow[static_cast<std::size_t>(wd.w)];
    wd.center.resize(static_cast<std::size_t>(wd.w));
    const int ell1 = sched.ell1_at(m);
    for (int q = 1; q <= wd.w; ++q)
        wd.center[static_cast<std::size_t>(q - 1)] = z.bit(ell1 + q - 1);
    wd.pos.assign(static_cast<std::size_t>(wd.w) + 1, 0.0);
    wd.neg.assign(static_cast<std::size_t>(wd.w) + 1, 0.0);
    for (int q = wd.w - 1; q >= 0; --q) {
        wd.pos[static_cast<std::size_t>(q)] = wd.pos[static_cast<std::size_t>(q) + 1];
        wd.neg[static_cast<std::size_t>(q)] = wd.neg[static_cast<std::size_t>(q) + 1];
        if (wd.center[static_cast<std::size_t>(q)] == 0)
            wd.pos[static_cast<std::size_t>(q)] += wd.lpow[static_cast<std::size_t>(q) + 1];
        else
            wd.neg[static_cast<std::size_t>(q)] += wd.lpow[static_cast<std::size_t>(q) + 1];
    }
    return wd;
}

// Exact count of admissible completions of a window state: offset digits
// consumed, partial signed sum s. Counts toward the caller's node budget;
// sets `over` instead of throwing so it can run inside parallel sections.
double window_count_from(const WindowData& wd, int offset, double s,
                         std::uint64_t& nodes, std::uint64_t budget, bool& over) {
    if (over) return 0.0;
    ++nodes;
    if (nodes > budget) {
        over = true;
        return 0.0;
    }
    const double nt = wd.neg[static_cast<std::size_t>(offset)];
    const double pt = wd.pos[static_cast<std::size_t>(offset)];
    if (!(s - nt < wd.rho) || !(s + pt > -wd.rho)) return 0.0;
    if (s - nt > -wd.rho && s + pt < wd.rho)
        return std::ldexp(1.0, wd.w - offset);
    if (offset == wd.w) return std::fabs(s) < wd.rho ? 1.0 : 0.0;
    const int c = wd.center[static_cast<std::size_t>(offset)];
    double total = 0.0;
    for (int b = 0; b <= 1; ++b) {
        const double s2 =
            b == c ? s
                   : s + static_cast<double>(b - c) *
                             wd.lpow[static_cast<std::size_t>(offset) + 1];
        total += window_count_from(wd, offset + 1, s2, nodes, budget, over);
    }
    return total;
}

// Immutable per-call snapshot of everything the digit walker needs. Built
// before any parallel section so window totals and member lists are fetched
// (and cached) without locking on the hot path.
struct WalkContext {
    int case_ = 1;
    const SymbolWord* z = nullptr;
    std::vector<long long> ns;
    long long coverage = 0;
    std::vector<int> pin_len;
    std::vector<WindowData> win;                      // empty center => unused
    std::vector<double> totals;                       // NaN when not fetched
    std::vector<const std::vector<SymbolWord>*> members;
};

WalkContext make_context(const MeasureSpec& ms, long long needed_depth,
                         bool want_members) {
    WalkContext ctx;
    ctx.case_ = ms.which_case();
    ctx.z = &ms.target().z;
    ctx.ns = ms.schedule().returns();
    ctx.coverage = ms.schedule().coverage_depth();
    const int nret = static_cast<int>(ctx.ns.size());
    ctx.pin_len.resize(static_cast<std::size_t>(nret));
    ctx.win.resize(static_cast<std::size_t>(nret));
    ctx.totals.assign(static_cast<std::size_t>(nret),
                      std::numeric_limits<double>::quiet_NaN());
    ctx.members.assign(static_cast<std::size_t>(nret), nullptr);
    for (int m = 0; m < nret; ++m) {
        const bool ambiguous = ms.which_case() == 3;
        ctx.pin_len[static_cast<std::size_t>(m)] =
            ambiguous ? ms.schedule().ell1_at(m) : ms.schedule().ell2_at(m);
        if (!ambiguous) continue;
        const long long window_start =
            ctx.ns[static_cast<std::size_t>(m)] + ctx.pin_len[static_cast<std::size_t>(m)];
        if (needed_depth <= window_start) continue;
        ctx.win[static_cast<std::size_t>(m)] = build_window(ms.schedule(), *ctx.z, m);
        ctx.totals[static_cast<std::size_t>(m)] = ms.window_total(m);
        if (want_members)
            ctx.members[static_cast<std::size_t>(m)] = &ms.window_members(m);
    }
    return ctx;
}

// Phase 0: free halving. Phase 1: pinned to the target coding. Phase 2:
// inside an ambiguous window.
struct PathState {
    long long t = 0;
    int next_ret = 0;
    int phase = 0;
    int block = -1;
    int off = 0;
    double w = 1.0;
    double wsum = 0.0;
};

void advance_phase(const WalkContext& ctx, PathState& st) {
    if (st.phase == 0 && st.next_ret < static_cast<int>(ctx.ns.size()) &&
        st.t == ctx.ns[static_cast<std::size_t>(st.next_ret)]) {
        st.phase = 1;
        st.block = st.next_ret++;
        st.off = 0;
    }
}

bool apply_digit(const WalkContext& ctx, PathState& st, int b) {
    switch (st.phase) {
        case 1: {
            if (b != ctx.z->bit(st.off)) return false;
            ++st.off;
            if (st.off == ctx.pin_len[static_cast<std::size_t>(st.block)]) {
                const WindowData& wd = ctx.win[static_cast<std::size_t>(st.block)];
                if (ctx.case_ == 3 && wd.w > 0) {
                    st.phase = 2;
                    st.off = 0;
                    st.wsum = 0.0;
                } else {
                    st.phase = 0;
                }
            }
            break;
        }
        case 2: {
            const WindowData& wd = ctx.win[static_cast<std::size_t>(st.block)];
            const int c = wd.center[static_cast<std::size_t>(st.off)];
            if (b != c)
                st.wsum += static_cast<double>(b - c) *
                           wd.lpow[static_cast<std::size_t>(st.off) + 1];
            ++st.off;
            if (st.off == wd.w) {
                if (!(std::fabs(st.wsum) < wd.rho)) return false;
                st.w /= ctx.totals[static_cast<std::size_t>(st.block)];
                st.phase = 0;
            } else {
                if (!(st.wsum - wd.neg[static_cast<std::size_t>(st.off)] < wd.rho))
                    return false;
                if (!(st.wsum + wd.pos[static_cast<std::size_t>(st.off)] > -wd.rho))
                    return false;
            }
            break;
        }
        default:
            st.w *= 0.5;
            break;
    }
    ++st.t;
    return true;
}

bool walk_step(const WalkContext& ctx, PathState& st, int b) {
    advance_phase(ctx, st);
    return apply_digit(ctx, st, b);
}

// Measure of the current cylinder. Mid-window states weigh the exact count of
// admissible completions against the window total.
double node_mass(const WalkContext& ctx, const PathState& st, std::uint64_t& nodes,
                 std::uint64_t budget, bool& over) {
    if (st.phase != 2) return st.w;
    const WindowData& wd = ctx.win[static_cast<std::size_t>(st.block)];
    const double cnt = window_count_from(wd, st.off, st.wsum, nodes, budget, over);
    return st.w * cnt / ctx.totals[static_cast<std::size_t>(st.block)];
}

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// log2 of ceil(base^e): exact ceiling while base^e fits comfortably in the
// integer range of binary64, the plain exponent beyond.
double log2_ceil_pow(double base, long long e) {
    double v = 1.0;
    for (long long i = 0; i < e; ++i) {
        v *= base;
        if (v > 4.5e15) return static_cast<double>(e) * std::log2(base);
    }
    return std::log2(std::ceil(v));
}

// Grid cells of [lo, hi] (half-open on the right except degenerate edges) on
// an S-cell axis over [0,1]. False when the span misses [0,1] entirely.
bool span_cells(double lo, double hi, long long s, long long& i0, long long& i1) {
    if (hi < lo) return false;
    if (hi == lo) {
        if (lo < 0.0 || lo > 1.0) return false;
        long long i = static_cast<long long>(std::floor(lo * static_cast<double>(s)));
        i = std::max<long long>(0, std::min(i, s - 1));
        i0 = i1 = i;
        return true;
    }
    i0 = static_cast<long long>(std::floor(lo * static_cast<double>(s)));
    i1 = static_cast<long long>(std::ceil(hi * static_cast<double>(s))) - 1;
    i0 = std::max<long long>(i0, 0);
    i1 = std::min<long long>(i1, s - 1);
    return i0 <= i1;
}

}  // namespace

CylinderRect TargetSpec::cube(double r, bool clip) const {
    if (!(r > 0.0)) throw std::invalid_argument("TargetSpec::cube: r > 0");
    const Point2 c = center();
    CylinderRect q{c.x - r, c.x + r, c.y - r, c.y + r};
    if (clip) {
        q.xlo = std::max(q.xlo, 0.0);
        q.xhi = std::min(q.xhi, 1.0);
        q.ylo = std::max(q.ylo, 0.0);
        q.yhi = std::min(q.yhi, 1.0);
    }
    return q;
}

Schedule Schedule::from_rule(long long n1, double c, int returns, const Params& p) {
    p.validate();
    if (n1 < 1) throw std::invalid_argument("Schedule: n1 >= 1");
    if (!(c >= 3.0)) throw std::invalid_argument("Schedule: c >= 3");
    if (returns < 1 || returns > 16)
        throw std::invalid_argument("Schedule: returns in [1, 16]");
    Schedule s;
    s.p_ = p;
    long long n = n1;
    for (int m = 0; m < returns; ++m) {
        s.ns_.push_back(n);
        const long long by_ratio =
            static_cast<long long>(std::ceil(c * static_cast<double>(n)));
        const long long by_gap = n + ell2(n, p) + 1;
        n = std::max(by_ratio, by_gap);
    }
    s.coverage_ = n;
    s.finalize();
    return s;
}

Schedule Schedule::from_returns(std::vector<long long> ns, const Params& p) {
    p.validate();
    if (ns.empty() || ns.size() > 16)
        throw std::invalid_argument("Schedule: 1 to 16 returns");
    Schedule s;
    s.p_ = p;
    s.ns_ = std::move(ns);
    const long long last = s.ns_.back();
    s.coverage_ = last + ell2(last, p) + 1;
    s.finalize();
    return s;
}

void Schedule::finalize() {
    const int m = static_cast<int>(ns_.size());
    ell1_.resize(static_cast<std::size_t>(m));
    ell2_.resize(static_cast<std::size_t>(m));
    lsum_.assign(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 0; i < m; ++i) {
        const long long n = ns_[static_cast<std::size_t>(i)];
        if (n < 1) throw std::invalid_argument("Schedule: return times >= 1");
        if (i > 0 && n <= ns_[static_cast<std::size_t>(i) - 1])
            throw std::invalid_argument("Schedule: return times must increase");
        ell1_[static_cast<std::size_t>(i)] = static_cast<int>(ell1(n, p_));
        ell2_[static_cast<std::size_t>(i)] = static_cast<int>(ell2(n, p_));
        lsum_[static_cast<std::size_t>(i) + 1] =
            lsum_[static_cast<std::size_t>(i)] + ell2_[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i + 1 < m; ++i) {
        if (ns_[static_cast<std::size_t>(i) + 1] <=
            ns_[static_cast<std::size_t>(i)] + ell2_[static_cast<std::size_t>(i)])
            throw std::invalid_argument(
                "Schedule: gap rule violated (next return inside a pinned block)");
    }
    if (coverage_ <= ns_.back())
        throw std::invalid_argument("Schedule: coverage must exceed the last return");
}

MeasureSpec::MeasureSpec(int which_case, TargetSpec target, Schedule sched)
    : case_(which_case), target_(std::move(target)), sched_(std::move(sched)) {
    if (case_ < 1 || case_ > 3)
        throw std::invalid_argument("MeasureSpec: case must be 1, 2 or 3");
    target_.p.validate();
    if (target_.p.lambda != sched_.params().lambda ||
        target_.p.gamma != sched_.params().gamma)
        throw std::invalid_argument("MeasureSpec: schedule/target parameter mismatch");
    const Regime reg = target_.p.regime();
    if (case_ == 1 && reg != Regime::Case1)
        throw std::invalid_argument("MeasureSpec: case 1 needs 2*lambda*gamma < 1");
    if (case_ != 1 && reg != Regime::Case23)
        throw std::invalid_argument("MeasureSpec: cases 2 and 3 need 2*lambda*gamma > 1");
    int max_ell2 = 0;
    for (std::size_t m = 0; m < sched_.returns().size(); ++m)
        max_ell2 = std::max(max_ell2, sched_.ell2_at(static_cast<int>(m)));
    if (static_cast<int>(target_.z.size()) < max_ell2)
        throw std::invalid_argument(
            "MeasureSpec: target coding shorter than the deepest pinned block");
    window_totals_.assign(sched_.returns().size(),
                          std::numeric_limits<double>::quiet_NaN());
    window_members_.resize(sched_.returns().size());
    members_built_.assign(sched_.returns().size(), 0);
    cache_mutex_ = std::make_unique<std::mutex>();
}

double MeasureSpec::window_total(int m) const {
    if (m < 0 || m >= static_cast<int>(sched_.returns().size()))
        throw std::invalid_argument("window_total: return index out of range");
    if (case_ != 3) return 1.0;
    std::lock_guard<std::mutex> lock(*cache_mutex_);
    double& slot = window_totals_[static_cast<std::size_t>(m)];
    if (!std::isnan(slot)) return slot;
    const WindowData wd = build_window(sched_, target_.z, m);
    if (wd.w == 0) {
        slot = 1.0;
        return slot;
    }
    std::uint64_t nodes = 0;
    bool over = false;
    const double total =
        window_count_from(wd, 0, 0.0, nodes, kDefaultNodeBudget, over);
    if (over) throw WorkBudgetError("window_total: node budget exceeded");
    if (!(total >= 1.0))
        throw std::logic_error("window_total: window excludes its own center");
    slot = total;
    return slot;
}

const std::vector<SymbolWord>& MeasureSpec::window_members(int m) const {
    if (m < 0 || m >= static_cast<int>(sched_.returns().size()))
        throw std::invalid_argument("window_members: return index out of range");
    if (case_ != 3)
        throw std::invalid_argument("window_members: only case 3 has windows");
    std::lock_guard<std::mutex> lock(*cache_mutex_);
    auto& slot = window_members_[static_cast<std::size_t>(m)];
    if (members_built_[static_cast<std::size_t>(m)]) return slot;
    const WindowData wd = build_window(sched_, target_.z, m);
    std::vector<SymbolWord> out;
    SymbolWord scratch;
    // Lexicographic DFS; members come out sorted.
    struct Rec {
        const WindowData& wd;
        std::vector<SymbolWord>& out;
        SymbolWord& word;
        void go(int offset, double s) {
            const double nt = wd.neg[static_cast<std::size_t>(offset)];
            const double pt = wd.pos[static_cast<std::size_t>(offset)];
            if (!(s - nt < wd.rho) || !(s + pt > -wd.rho)) return;
            if (offset == wd.w) {
                if (std::fabs(s) < wd.rho) {
                    if (out.size() >= kMaxWindowMembers)
                        throw WorkBudgetError("window_members: member budget exceeded");
                    out.push_back(word);
                }
                return;
            }
            const int c = wd.center[static_cast<std::size_t>(offset)];
            for (int b = 0; b <= 1; ++b) {
                const double s2 =
                    b == c ? s
                           : s + static_cast<double>(b - c) *
                                     wd.lpow[static_cast<std::size_t>(offset) + 1];
                word.push_back(b);
                go(offset + 1, s2);
                word.pop_back();
            }
        }
    } rec{wd, out, scratch};
    if (wd.w > 0) rec.go(0, 0.0);
    slot = std::move(out);
    members_built_[static_cast<std::size_t>(m)] = 1;
    return slot;
}

double weight(const MeasureSpec& ms, const SymbolWord& w) {
    const long long len = static_cast<long long>(w.size());
    if (len > ms.schedule().coverage_depth())
        throw std::invalid_argument("weight: word deeper than the schedule covers");
    const WalkContext ctx = make_context(ms, len, false);
    PathState st;
    for (long long i = 0; i < len; ++i)
        if (!walk_step(ctx, st, w.bit(static_cast<std::size_t>(i)))) return 0.0;
    std::uint64_t nodes = 0;
    bool over = false;
    const double mass = node_mass(ctx, st, nodes, kDefaultNodeBudget, over);
    if (over) throw WorkBudgetError("weight: node budget exceeded");
    return mass;
}

namespace {

struct BallNode {
    int depth;
    double v, y;
    PathState st;
};

struct BallAccum {
    double lower = 0.0;
    double upper = 0.0;
    std::uint64_t nodes = 0;
    bool over = false;
};

}  // namespace

MassBracket mu_ball(const MeasureSpec& ms, const SymbolWord& xbar, double R,
                    std::uint64_t node_budget) {
    if (!(R > 0.0) || !(R <= 1.0)) throw std::invalid_argument("mu_ball: R in (0, 1]");
    if (node_budget == 0) node_budget = kDefaultNodeBudget;
    const Params& p = ms.params();
    const long long r_int =
        std::max<long long>(1, static_cast<long long>(std::ceil(-std::log2(R) - 1e-12)));
    const long long depth = k_of_r(r_int, p) + 4;
    if (depth > ms.schedule().coverage_depth())
        throw std::invalid_argument("mu_ball: schedule too short for this radius");
    if (depth > SymbolWord::kMaxLength)
        throw std::invalid_argument("mu_ball: radius needs words beyond the length cap");

    const Point2 c = pi_2d(xbar, p.lambda);
    const CylinderRect q{c.x - R, c.x + R, c.y - R, c.y + R};
    const auto lpow = lambda_powers(p.lambda, depth);
    const WalkContext ctx = make_context(ms, depth, false);
    const double lam_step = 1.0 - p.lambda;

    const int leaf_depth = static_cast<int>(depth);
    const int frontier_depth = std::min(leaf_depth, 14);

    // Serial descent to the frontier, identical pruning/aggregation to the
    // full search, then one parallel job per surviving frontier node.
    BallAccum serial;
    std::vector<BallNode> frontier;
    {
        std::vector<BallNode> stack;
        BallNode root{0, 0.0, 0.0, PathState{}};
        stack.push_back(root);
        while (!stack.empty()) {
            const BallNode e = stack.back();
            stack.pop_back();
            ++serial.nodes;
            if (serial.nodes > node_budget) {
                serial.over = true;
                break;
            }
            const double w = lpow[static_cast<std::size_t>(e.depth)];
            const double h = std::ldexp(1.0, -e.depth);
            if (e.v > q.xhi || e.v + w < q.xlo || e.y > q.yhi || e.y + h < q.ylo)
                continue;
            if (e.v >= q.xlo && e.v + w <= q.xhi && e.y >= q.ylo && e.y + h <= q.yhi) {
                const double mass =
                    node_mass(ctx, e.st, serial.nodes, node_budget, serial.over);
                if (serial.over) break;
                serial.lower += mass;
                serial.upper += mass;
                continue;
            }
            if (e.depth == leaf_depth) {
                const double mass =
                    node_mass(ctx, e.st, serial.nodes, node_budget, serial.over);
                if (serial.over) break;
                serial.upper += mass;
                continue;
            }
            if (e.depth == frontier_depth) {
                frontier.push_back(e);
                continue;
            }
            for (int b = 1; b >= 0; --b) {
                BallNode child;
                child.depth = e.depth + 1;
                child.st = e.st;
                if (!walk_step(ctx, child.st, b)) continue;
                child.v = b == 0 ? e.v : e.v + lam_step * w;
                child.y = b == 0 ? e.y : e.y + std::ldexp(1.0, -(e.depth + 1));
                stack.push_back(child);
            }
        }
    }

    MassBracket out;
    out.depth = leaf_depth;
    if (serial.over) {
        out.lower = serial.lower;
        out.upper = serial.upper;
        out.nodes_visited = serial.nodes;
        out.complete = false;
        return out;
    }

    const std::size_t fcount = frontier.size();
    const std::uint64_t remaining =
        node_budget > serial.nodes ? node_budget - serial.nodes : 0;
    const std::uint64_t per_budget =
        std::max<std::uint64_t>(4096, fcount ? remaining / fcount : remaining);
    std::vector<BallAccum> partial(fcount);

#pragma omp parallel for schedule(dynamic, 1)
    for (long long fi = 0; fi < static_cast<long long>(fcount); ++fi) {
        BallAccum acc;
        std::vector<BallNode> stack;
        stack.push_back(frontier[static_cast<std::size_t>(fi)]);
        while (!stack.empty()) {
            const BallNode e = stack.back();
            stack.pop_back();
            ++acc.nodes;
            if (acc.nodes > per_budget) {
                acc.over = true;
                break;
            }
            const double w = lpow[static_cast<std::size_t>(e.depth)];
            const double h = std::ldexp(1.0, -e.depth);
            if (e.v > q.xhi || e.v + w < q.xlo || e.y > q.yhi || e.y + h < q.ylo)
                continue;
            if (e.v >= q.xlo && e.v + w <= q.xhi && e.y >= q.ylo && e.y + h <= q.yhi) {
                const double mass = node_mass(ctx, e.st, acc.nodes, per_budget, acc.over);
                if (acc.over) break;
                acc.lower += mass;
                acc.upper += mass;
                continue;
            }
            if (e.depth == leaf_depth) {
                const double mass = node_mass(ctx, e.st, acc.nodes, per_budget, acc.over);
                if (acc.over) break;
                acc.upper += mass;
                continue;
            }
            for (int b = 1; b >= 0; --b) {
                BallNode child;
                child.depth = e.depth + 1;
                child.st = e.st;
                if (!walk_step(ctx, child.st, b)) continue;
                child.v = b == 0 ? e.v : e.v + lam_step * w;
                child.y = b == 0 ? e.y : e.y + std::ldexp(1.0, -(e.depth + 1));
                stack.push_back(child);
            }
        }
        partial[static_cast<std::size_t>(fi)] = acc;
    }

    out.lower = serial.lower;
    out.upper = serial.upper;
    out.nodes_visited = serial.nodes;
    out.complete = true;
    for (const BallAccum& a : partial) {
        out.lower += a.lower;
        out.upper += a.upper;
        out.nodes_visited += a.nodes;
        if (a.over) out.complete = false;
    }
    return out;
}

ProbeResult local_dim_probe(const MeasureSpec& ms, const SymbolWord& x, int r_lo,
                            int r_hi) {
    if (r_lo < 1 || r_hi < r_lo)
        throw std::invalid_argument("local_dim_probe: need 1 <= r_lo <= r_hi");
    const Params& p = ms.params();
    const long long max_depth = k_of_r(r_hi, p) + 4;
    if (max_depth > ms.schedule().coverage_depth())
        throw std::invalid_argument("local_dim_probe: schedule too short for r_hi");
    if (static_cast<long long>(x.size()) < max_depth)
        throw std::invalid_argument("local_dim_probe: x shorter than the deepest probe");
    {
        const WalkContext ctx = make_context(ms, max_depth, false);
        PathState st;
        for (long long i = 0; i < max_depth; ++i)
            if (!walk_step(ctx, st, x.bit(static_cast<std::size_t>(i))))
                throw std::invalid_argument("local_dim_probe: x is outside the support");
    }
    ProbeResult res;
    std::vector<double> xs, ys;
    res.min_ratio = std::numeric_limits<double>::infinity();
    for (int r = r_lo; r <= r_hi; ++r) {
        const double R = std::ldexp(1.0, -r);
        const MassBracket mb = mu_ball(ms, x, R);
        ProbeEntry e;
        e.r = r;
        e.log2_mu_upper = std::log2(mb.upper);
        e.log2_mu_lower = std::log2(mb.lower);
        e.ratio = e.log2_mu_upper / -static_cast<double>(r);
        e.complete = mb.complete;
        res.entries.push_back(e);
        res.min_ratio = std::min(res.min_ratio, e.ratio);
        xs.push_back(-static_cast<double>(r));
        ys.push_back(e.log2_mu_upper);
    }
    res.ls_slope = xs.size() >= 2 ? ls_slope(xs, ys)
                                  : std::numeric_limits<double>::quiet_NaN();
    res.window_slope = xs.size() >= 2 && xs.back() != xs.front()
                           ? (ys.back() - ys.front()) / (xs.back() - xs.front())
                           : std::numeric_limits<double>::quiet_NaN();
    return res;
}

namespace {

SymbolWord sample_with_ctx(const WalkContext& ctx, int depth, std::uint64_t key) {
    UnitStream rng{key};
    SymbolWord w;
    PathState st;
    std::size_t mem_lo = 0, mem_hi = 0;
    for (int t = 0; t < depth; ++t) {
        advance_phase(ctx, st);
        if (st.phase == 2 && st.off == 0) {
            const auto* mem = ctx.members[static_cast<std::size_t>(st.block)];
            mem_lo = 0;
            mem_hi = mem->size();
        }
        const double u = rng.next();
        int digit;
        if (st.phase == 1) {
            digit = ctx.z->bit(st.off);
        } else if (st.phase == 2) {
            const auto& mem = *ctx.members[static_cast<std::size_t>(st.block)];
            // members are sorted, so the digit split is a contiguous boundary
            std::size_t a = mem_lo, b = mem_hi;
            while (a < b) {
                const std::size_t mid = a + (b - a) / 2;
                if (mem[mid].bit(st.off) == 0)
                    a = mid + 1;
                else
                    b = mid;
            }
            const std::size_t boundary = a;
            const double p0 = static_cast<double>(boundary - mem_lo) /
                              static_cast<double>(mem_hi - mem_lo);
            if (u < p0) {
                digit = 0;
                mem_hi = boundary;
            } else {
                digit = 1;
                mem_lo = boundary;
            }
        } else {
            digit = u < 0.5 ? 0 : 1;
        }
        if (!apply_digit(ctx, st, digit))
            throw std::logic_error("sample_path: sampled an inadmissible digit");
        w.push_back(digit);
    }
    return w;
}

}  // namespace

SymbolWord sample_path(const MeasureSpec& ms, int depth, std::uint64_t seed) {
    if (depth < 1 || depth > SymbolWord::kMaxLength)
        throw std::invalid_argument("sample_path: depth out of range");
    if (depth > ms.schedule().coverage_depth())
        throw std::invalid_argument("sample_path: depth beyond schedule coverage");
    const WalkContext ctx = make_context(ms, depth, true);
    return sample_with_ctx(ctx, depth, splitmix64(seed));
}

EnergyStats energy_estimate(const MeasureSpec& ms, double t, std::uint64_t pairs,
                            int depth, std::uint64_t seed) {
    if (!(t >= 0.0)) throw std::invalid_argument("energy_estimate: t >= 0");
    if (pairs < 1 || pairs > 10'000'000)
        throw std::invalid_argument("energy_estimate: pairs in [1, 1e7]");
    if (depth < 1 || depth > SymbolWord::kMaxLength)
        throw std::invalid_argument("energy_estimate: depth out of range");
    if (depth > ms.schedule().coverage_depth())
        throw std::invalid_argument("energy_estimate: depth beyond schedule coverage");

    const Params& p = ms.params();
    const double floor_dist =
        separation_constant(p.lambda).c * std::ldexp(1.0, -depth);
    // Walk far enough that truncating the paths perturbs distances by well
    // under the floor (|pi(full) - pi(prefix)| <= lambda^len).
    const long long want = static_cast<long long>(
        std::ceil(std::log(floor_dist / 128.0) / std::log(p.lambda)));
    const int len = static_cast<int>(
        std::min({want, ms.schedule().coverage_depth(),
                  static_cast<long long>(SymbolWord::kMaxLength)}));
    const WalkContext ctx = make_context(ms, len, true);

    std::vector<double> vals(pairs, 0.0);
#pragma omp parallel for schedule(dynamic, 64)
    for (long long q = 0; q < static_cast<long long>(pairs); ++q) {
        const std::uint64_t base = static_cast<std::uint64_t>(q);
        const std::uint64_t ka =
            splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (2 * base + 1)));
        const std::uint64_t kb =
            splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (2 * base + 2)));
        const SymbolWord wa = sample_with_ctx(ctx, len, ka);
        const SymbolWord wb = sample_with_ctx(ctx, len, kb);
        const double dist =
            sup_dist(pi_2d(wa, p.lambda), pi_2d(wb, p.lambda));
        const double d = std::max(dist, floor_dist);
        vals[static_cast<std::size_t>(q)] = std::pow(d, -t);
    }
    double sum = 0.0;
    for (double v : vals) sum += v;

    EnergyStats out;
    out.t = t;
    out.depth = depth;
    out.pairs = pairs;
    out.mean = sum / static_cast<double>(pairs);
    return out;
}

bool dynamical_membership(const SymbolWord& i, const TargetSpec& t, long long n) {
    t.p.validate();
    if (n < 1) throw std::invalid_argument("dynamical_membership: n >= 1");
    const long long ell = ell_n_dynamical(n, t.p);
    if (static_cast<long long>(i.size()) < n + ell)
        throw std::invalid_argument("dynamical_membership: word shorter than n + ell_n");
    if (static_cast<long long>(t.z.size()) < ell)
        throw std::invalid_argument("dynamical_membership: target coding shorter than ell_n");
    for (long long k = 0; k < ell; ++k)
        if (i.bit(static_cast<std::size_t>(n + k)) != t.z.bit(static_cast<std::size_t>(k)))
            return false;
    return true;
}

std::vector<CylinderRect> preimage_rects(const TargetSpec& t, int n) {
    t.p.validate();
    if (n < 0 || n > 20) throw std::invalid_argument("preimage_rects: n in [0, 20]");
    const double lambda = t.p.lambda;
    const CylinderRect q = t.cube(std::pow(t.p.gamma, n));
    const auto lpow = lambda_powers(lambda, n);
    const double scale_y = std::ldexp(1.0, -n);
    std::vector<CylinderRect> out;
    out.reserve(std::size_t{1} << n);

    struct Rec {
        const std::vector<double>& lpow;
        double lambda;
        const CylinderRect& q;
        double scale_y;
        int n;
        std::vector<CylinderRect>& out;
        void go(int d, double a, double b) {
            if (d == n) {
                CylinderRect r{a + lpow[static_cast<std::size_t>(n)] * q.xlo,
                               a + lpow[static_cast<std::size_t>(n)] * q.xhi,
                               b + scale_y * q.ylo, b + scale_y * q.yhi};
                r.xlo = std::max(r.xlo, 0.0);
                r.xhi = std::min(r.xhi, 1.0);
                r.ylo = std::max(r.ylo, 0.0);
                r.yhi = std::min(r.yhi, 1.0);
                if (r.xhi >= r.xlo && r.yhi >= r.ylo) out.push_back(r);
                return;
            }
            go(d + 1, a, b);
            go(d + 1, a + (1.0 - lambda) * lpow[static_cast<std::size_t>(d)],
               b + std::ldexp(1.0, -(d + 1)));
        }
    } rec{lpow, lambda, q, scale_y, n, out};
    rec.go(0, 0.0, 0.0);
    return out;
}

CoverCount cover_count(char strategy, const TargetSpec& t, long long n,
                       double log2_N_override) {
    t.p.validate();
    if (n < 1) throw std::invalid_argument("cover_count: n >= 1");
    const double lambda = t.p.lambda;
    const double gamma = t.p.gamma;
    CoverCount out;
    out.strategy = strategy;
    switch (strategy) {
        case 'A': {
            const long long l2n = ell2(n, t.p);
            const long long r0 = largest_halving_exponent(lambda, n + l2n);
            out.side_log2 = -static_cast<double>(r0);
            out.count_log2 = static_cast<double>(n);
            break;
        }
        case 'B': {
            out.side_log2 = static_cast<double>(n) * (std::log2(gamma) - 1.0);
            out.count_log2 =
                static_cast<double>(n) + log2_ceil_pow(2.0 * lambda, n);
            break;
        }
        case 'C': {
            const long long l2n = ell2(n, t.p);
            double log2_n_branches = log2_N_override;
            if (log2_n_branches < 0.0) {
                const double rho =
                    std::exp2(static_cast<double>(n) * std::log2(gamma) -
                              static_cast<double>(l2n) * std::log2(lambda));
                const BranchCount bc =
                    count_Nk(pi_I(t.z, lambda).value, rho, static_cast<int>(l2n), lambda);
                log2_n_branches = std::log2(bc.count);
            }
            out.side_log2 = -static_cast<double>(n + l2n);
            out.count_log2 = static_cast<double>(n) + log2_n_branches +
                             log2_ceil_pow(2.0 * lambda, n + l2n);
            break;
        }
        default:
            throw std::invalid_argument("cover_count: strategy must be A, B or C");
    }
    out.side = std::exp2(out.side_log2);
    out.count = std::exp2(out.count_log2);
    return out;
}

std::vector<CylinderRect> attractor_rects(double lambda, int depth) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("attractor_rects: lambda in (1/2, 1)");
    if (depth < 0 || depth > 24)
        throw std::invalid_argument("attractor_rects: depth in [0, 24]");
    const auto lpow = lambda_powers(lambda, depth);
    std::vector<CylinderRect> out;
    out.reserve(std::size_t{1} << depth);
    struct Rec {
        const std::vector<double>& lpow;
        double lambda;
        int n;
        std::vector<CylinderRect>& out;
        void go(int d, double a, double b) {
            if (d == n) {
                out.push_back({a, a + lpow[static_cast<std::size_t>(n)], b,
                               b + std::ldexp(1.0, -n)});
                return;
            }
            go(d + 1, a, b);
            go(d + 1, a + (1.0 - lambda) * lpow[static_cast<std::size_t>(d)],
               b + std::ldexp(1.0, -(d + 1)));
        }
    } rec{lpow, lambda, depth, out};
    rec.go(0, 0.0, 0.0);
    return out;
}

std::uint64_t box_count(const std::vector<CylinderRect>& rects, int r) {
    if (r < 0 || r > 30) throw std::invalid_argument("box_count: r in [0, 30]");
    const long long s = 1LL << r;

    std::uint64_t projected = 0;
    for (const CylinderRect& rc : rects) {
        long long i0, i1, j0, j1;
        if (!span_cells(rc.xlo, rc.xhi, s, i0, i1)) continue;
        if (!span_cells(rc.ylo, rc.yhi, s, j0, j1)) continue;
        projected += static_cast<std::uint64_t>(i1 - i0 + 1) *
                     static_cast<std::uint64_t>(j1 - j0 + 1);
        if (projected > kDefaultNodeBudget)
            throw WorkBudgetError("box_count: projected cell visits exceed budget");
    }

    if (r <= 14) {
        const std::size_t nbits = std::size_t{1} << (2 * r);
        std::vector<std::uint64_t> bits((nbits + 63) / 64, 0);
        const long long nrects = static_cast<long long>(rects.size());
#pragma omp parallel for schedule(dynamic, 64)
        for (long long k = 0; k < nrects; ++k) {
            const CylinderRect& rc = rects[static_cast<std::size_t>(k)];
            long long i0, i1, j0, j1;
            if (!span_cells(rc.xlo, rc.xhi, s, i0, i1)) continue;
            if (!span_cells(rc.ylo, rc.yhi, s, j0, j1)) continue;
            for (long long j = j0; j <= j1; ++j) {
                const long long base = j * s;
                long long b0 = base + i0;
                const long long b1 = base + i1;
                while (b0 <= b1) {
                    const long long word = b0 >> 6;
                    const int lo_bit = static_cast<int>(b0 & 63);
                    const long long span = std::min<long long>(b1 - b0 + 1, 64 - lo_bit);
                    const std::uint64_t mask =
                        (span == 64 ? ~std::uint64_t{0}
                                    : ((std::uint64_t{1} << span) - 1))
                        << lo_bit;
#pragma omp atomic update
                    bits[static_cast<std::size_t>(word)] |= mask;
                    b0 += span;
                }
            }
        }
        std::uint64_t total = 0;
        const long long nwords = static_cast<long long>(bits.size());
#pragma omp parallel for schedule(static) reduction(+ : total)
        for (long long k = 0; k < nwords; ++k)
            total += static_cast<std::uint64_t>(
                std::popcount(bits[static_cast<std::size_t>(k)]));
        return total;
    }

    if (projected > 20'000'000)
        throw WorkBudgetError("box_count: sparse path capped at 2e7 cells; use r <= 14");
    std::vector<std::uint64_t> ids;
    ids.reserve(projected);
    for (const CylinderRect& rc : rects) {
        long long i0, i1, j0, j1;
        if (!span_cells(rc.xlo, rc.xhi, s, i0, i1)) continue;
        if (!span_cells(rc.ylo, rc.yhi, s, j0, j1)) continue;
        for (long long j = j0; j <= j1; ++j)
            for (long long i = i0; i <= i1; ++i)
                ids.push_back(static_cast<std::uint64_t>(j) << 32 |
                              static_cast<std::uint64_t>(i));
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids.size();
}

BoxDimFit dim_box_estimate(const std::vector<CylinderRect>& rects, int r_lo, int r_hi) {
    if (r_lo < 0 || r_hi - r_lo < 2)
        throw std::invalid_argument("dim_box_estimate: need at least 3 scales");
    BoxDimFit fit;
    std::vector<double> xs, ys;
    for (int r = r_lo; r <= r_hi; ++r) {
        const std::uint64_t n = box_count(rects, r);
        if (n == 0) throw std::invalid_argument("dim_box_estimate: empty rect union");
        fit.counts.push_back({r, n});
        xs.push_back(static_cast<double>(r) * std::log(2.0));
        ys.push_back(std::log(static_cast<double>(n)));
    }
    fit.slope = ls_slope(xs, ys);
    return fit;
}

std::vector<std::uint8_t> raster_rects(const std::vector<CylinderRect>& rects, int px) {
    if (px < 1 || px > 8192) throw std::invalid_argument("raster_rects: px in [1, 8192]");
    std::vector<std::uint8_t> img(static_cast<std::size_t>(px) *
                                      static_cast<std::size_t>(px),
                                  0);
    for (const CylinderRect& rc : rects) {
        long long i0, i1, j0, j1;
        if (!span_cells(rc.xlo, rc.xhi, px, i0, i1)) continue;
        if (!span_cells(rc.ylo, rc.yhi, px, j0, j1)) continue;
        for (long long j = j0; j <= j1; ++j) {
            const long long row = px - 1 - j;
            std::uint8_t* base = img.data() + row * px;
            std::memset(base + i0, 255, static_cast<std::size_t>(i1 - i0 + 1));
        }
    }
    return img;
}

}  // namespace pu
