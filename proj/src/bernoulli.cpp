#include "pu/bernoulli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pu {

namespace {

constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;
constexpr int kFrontierDepth = 12;

void check_lambda(double lambda) {
    if (!(lambda > 0.5) || !(lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (1/2, 1)");
}

std::vector<double> lambda_powers(double lambda, int k) {
    std::vector<double> p(static_cast<std::size_t>(k) + 1);
    p[0] = 1.0;
    for (int i = 1; i <= k; ++i) p[i] = p[i - 1] * lambda;
    return p;
}

// One transfer-operator application in gather form: each destination bin pulls
// from the few source bins whose image overlaps it, so the result does not
// depend on how destination bins are distributed over threads.
void apply_transfer(const std::vector<double>& src, std::vector<double>& dst,
                    double lambda, int level) {
    const long long n = 1LL << level;
    const double offset1 = (1.0 - lambda) * static_cast<double>(n);
#pragma omp parallel for schedule(static)
    for (long long j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int branch = 0; branch < 2; ++branch) {
            const double off = branch == 0 ? 0.0 : offset1;
            long long i = static_cast<long long>(
                              std::floor((static_cast<double>(j) - off) / lambda)) -
                          1;
            if (i < 0) i = 0;
            for (; i < n; ++i) {
                const double img_lo = lambda * static_cast<double>(i) + off;
                if (img_lo >= static_cast<double>(j + 1)) break;
                const double img_hi = img_lo + lambda;
                const double ov = std::min(img_hi, static_cast<double>(j + 1)) -
                                  std::max(img_lo, static_cast<double>(j));
                if (ov > 0.0) acc += src[static_cast<std::size_t>(i)] * ov;
            }
        }
        dst[static_cast<std::size_t>(j)] = 0.5 * acc / lambda;
    }
}

// L1 distance accumulated over fixed 8192-bin blocks, blocks combined in
// order, so the sum is identical for every thread count.
double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    const long long n = static_cast<long long>(a.size());
    const long long block = 8192;
    const long long nblocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
    for (long long bi = 0; bi < nblocks; ++bi) {
        const long long lo = bi * block;
        const long long hi = std::min(n, lo + block);
        double s = 0.0;
        for (long long i = lo; i < hi; ++i)
            s += std::fabs(a[static_cast<std::size_t>(i)] -
                           b[static_cast<std::size_t>(i)]);
        partial[static_cast<std::size_t>(bi)] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

}  // namespace

DyadicHistogram build_histogram(double lambda, int level, int max_iterations,
                                double tol) {
    check_lambda(lambda);
    if (level < 1 || level > 24)
        throw std::invalid_argument("build_histogram: level in [1, 24]");
    if (max_iterations == 0) max_iterations = 10 * level;
    if (max_iterations < 4 * level)
        throw std::invalid_argument("build_histogram: max_iterations >= 4*level");
    if (!(tol > 0.0)) throw std::invalid_argument("build_histogram: tol > 0");

    const std::size_t n = std::size_t{1} << level;
    std::vector<double> cur(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);

    DyadicHistogram h;
    h.lambda = lambda;
    h.level = level;
    h.residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iterations; ++it) {
        apply_transfer(cur, next, lambda, level);
        h.residual = l1_distance(cur, next);
        cur.swap(next);
        h.iterations = it;
        if (h.residual < tol) break;
    }
    if (!(h.residual < tol)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "build_histogram: no convergence after %d iterations; "
                      "L1 residual %.3e (tol %.3e)",
                      h.iterations, h.residual, tol);
        throw std::runtime_error(msg);
    }
    h.mass = std::move(cur);
    return h;
}

double measure_interval(const DyadicHistogram& h, double a, double b) {
    if (h.mass.empty()) throw std::invalid_argument("measure_interval: empty histogram");
    a = std::max(a, 0.0);
    b = std::min(b, 1.0);
    if (!(b > a)) return 0.0;
    const double n = static_cast<double>(std::size_t{1} << h.level);
    const double ia = a * n;
    const double ib = b * n;
    long long lo = static_cast<long long>(std::floor(ia));
    long long hi = static_cast<long long>(std::floor(ib));
    hi = std::min<long long>(hi, (1LL << h.level) - 1);
    double total = 0.0;
    for (long long i = lo; i <= hi; ++i) {
        const double ov = std::min(ib, static_cast<double>(i + 1)) -
                          std::max(ia, static_cast<double>(i));
        if (ov > 0.0) total += h.mass[static_cast<std::size_t>(i)] * ov;
    }
    return total;
}

namespace {

// Shared driver for the branch counters: a serial descent collects the live
// frontier at a fixed depth (pruning and aggregating exactly as the full
// search would), then the frontier subtrees run in parallel with per-subtree
// node budgets and the per-subtree results combine in frontier order.
struct FrontierNode {
    int depth;
    double a, b;  // generic registers, interpreted by the counter
};

template <class Step>
BranchCount run_counter(int leaf_depth, double root_a, double root_b,
                        std::uint64_t node_budget, const char* opname,
                        const Step& step) {
    if (node_budget == 0) node_budget = kDefaultNodeBudget;
    const int frontier_depth = std::min(leaf_depth, kFrontierDepth);

    std::vector<FrontierNode> frontier;
    double count = 0.0;
    std::uint64_t nodes = 0;
    bool exceeded = false;

    // step(depth, a, b, emit0/emit1): returns -1 prune, -2 descend, else an
    // aggregated count for the whole subtree (leaf included).
    struct StackEntry {
        int depth;
        double a, b;
    };
    std::vector<StackEntry> stack;
    stack.push_back({0, root_a, root_b});
    while (!stack.empty()) {
        const StackEntry e = stack.back();
        stack.pop_back();
        ++nodes;
        if (nodes > node_budget) {
            exceeded = true;
            break;
        }
        double sub = step.probe(e.depth, e.a, e.b);
        if (sub >= 0.0) {
            count += sub;
            continue;
        }
        if (sub == -1.0) continue;
        if (e.depth == frontier_depth) {
            frontier.push_back({e.depth, e.a, e.b});
            continue;
        }
        double a1, b1, a0, b0;
        step.child(e.depth, e.a, e.b, 0, a0, b0);
        step.child(e.depth, e.a, e.b, 1, a1, b1);
        // push digit 1 first so digit 0 pops first: keeps frontier in
        // lexicographic order.
        stack.push_back({e.depth + 1, a1, b1});
        stack.push_back({e.depth + 1, a0, b0});
    }
    if (exceeded) throw WorkBudgetError(std::string(opname) + ": node budget exceeded");

    const std::size_t fcount = frontier.size();
    std::vector<double> fcounts(fcount, 0.0);
    std::vector<std::uint64_t> fnodes(fcount, 0);
    std::vector<unsigned char> fover(fcount, 0);
    const std::uint64_t remaining = node_budget > nodes ? node_budget - nodes : 0;
    const std::uint64_t per_budget =
        std::max<std::uint64_t>(1024, fcount ? remaining / fcount : remaining);

#pragma omp parallel for schedule(dynamic, 1)
    for (long long fi = 0; fi < static_cast<long long>(fcount); ++fi) {
        const FrontierNode& fn = frontier[static_cast<std::size_t>(fi)];
        double c = 0.0;
        std::uint64_t nn = 0;
        bool over = false;
        std::vector<StackEntry> st;
        st.push_back({fn.depth, fn.a, fn.b});
        while (!st.empty()) {
            const StackEntry e = st.back();
            st.pop_back();
            ++nn;
            if (nn > per_budget) {
                over = true;
                break;
            }
            double sub = step.probe(e.depth, e.a, e.b);
            if (sub >= 0.0) {
                c += sub;
                continue;
            }
            if (sub == -1.0) continue;
            double a1, b1, a0, b0;
            step.child(e.depth, e.a, e.b, 0, a0, b0);
            step.child(e.depth, e.a, e.b, 1, a1, b1);
            st.push_back({e.depth + 1, a1, b1});
            st.push_back({e.depth + 1, a0, b0});
        }
        fcounts[static_cast<std::size_t>(fi)] = c;
        fnodes[static_cast<std::size_t>(fi)] = nn;
        fover[static_cast<std::size_t>(fi)] = over ? 1 : 0;
    }

    bool any_over = false;
    for (std::size_t i = 0; i < fcount; ++i) {
        count += fcounts[i];
        nodes += fnodes[i];
        if (fover[i]) any_over = true;
    }
    if (any_over) throw WorkBudgetError(std::string(opname) + ": node budget exceeded");
    return BranchCount{count, nodes};
}

struct NkStep {
    const std::vector<double>* lpow;
    double lo, hi;
    int k;
    // a = left endpoint of the prefix interval; b unused.
    double probe(int depth, double a, double) const {
        const double right = a + (*lpow)[static_cast<std::size_t>(depth)];
        if (a > hi || right < lo) return -1.0;
        if (a >= lo && right <= hi) return std::ldexp(1.0, k - depth);
        if (depth == k) return 1.0;
        return -2.0;
    }
    void child(int depth, double a, double, int digit, double& ca, double& cb) const {
        ca = digit == 0 ? a
                        : a + (1.0 - lambda_) * (*lpow)[static_cast<std::size_t>(depth)];
        cb = 0.0;
    }
    double lambda_;
};

struct DStep {
    const std::vector<double>* lpow;
    const std::vector<double>* pos_tail;
    const std::vector<double>* neg_tail;
    const std::vector<int>* center;
    double rho;
    int m;
    // a = partial signed sum; b unused.
    double probe(int depth, double a, double) const {
        const double nt = (*neg_tail)[static_cast<std::size_t>(depth)];
        const double pt = (*pos_tail)[static_cast<std::size_t>(depth)];
        if (!(a - nt < rho) || !(a + pt > -rho)) return -1.0;
        if (a - nt > -rho && a + pt < rho) return std::ldexp(1.0, m - depth);
        if (depth == m) return std::fabs(a) < rho ? 1.0 : 0.0;
        return -2.0;
    }
    void child(int depth, double a, double, int digit, double& ca, double& cb) const {
        const int c = (*center)[static_cast<std::size_t>(depth)];  // digit at position depth+1
        const int diff = digit - c;
        ca = diff == 0 ? a : a + static_cast<double>(diff) *
                                     (*lpow)[static_cast<std::size_t>(depth) + 1];
        cb = 0.0;
    }
};

struct ExpStep {
    const std::vector<double>* lpow;
    double x;
    int k;
    double probe(int depth, double a, double) const {
        if (a > x || a + (*lpow)[static_cast<std::size_t>(depth)] < x) return -1.0;
        if (depth == k) return 1.0;
        return -2.0;
    }
    void child(int depth, double a, double, int digit, double& ca, double& cb) const {
        ca = digit == 0 ? a
                        : a + (1.0 - lambda_) * (*lpow)[static_cast<std::size_t>(depth)];
        cb = 0.0;
    }
    double lambda_;
};

}  // namespace

BranchCount count_Nk(double x, double rho, int k, double lambda,
                     std::uint64_t node_budget) {
    check_lambda(lambda);
    if (k < 0 || k > SymbolWord::kMaxLength)
        throw std::invalid_argument("count_Nk: k out of range");
    if (!(rho >= 0.0)) throw std::invalid_argument("count_Nk: rho >= 0");
    const auto lpow = lambda_powers(lambda, k);
    NkStep step;
    step.lpow = &lpow;
    step.lo = x - rho * lpow[static_cast<std::size_t>(k)];
    step.hi = x + rho * lpow[static_cast<std::size_t>(k)];
    step.k = k;
    step.lambda_ = lambda;
    return run_counter(k, 0.0, 0.0, node_budget, "count_Nk", step);
}

BranchCount count_D(const SymbolWord& center, double rho, int m, double lambda,
                    std::uint64_t node_budget) {
    check_lambda(lambda);
    if (m < 0 || m > SymbolWord::kMaxLength)
        throw std::invalid_argument("count_D: m out of range");
    if (static_cast<int>(center.size()) < m)
        throw std::invalid_argument("count_D: center shorter than m");
    if (!(rho >= 0.0)) throw std::invalid_argument("count_D: rho >= 0");
    const auto lpow = lambda_powers(lambda, m);
    std::vector<int> cd(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) cd[static_cast<std::size_t>(i)] = center.bit(i);
    std::vector<double> pos_tail(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<double> neg_tail(static_cast<std::size_t>(m) + 1, 0.0);
    for (int d = m - 1; d >= 0; --d) {
        pos_tail[static_cast<std::size_t>(d)] = pos_tail[static_cast<std::size_t>(d) + 1];
        neg_tail[static_cast<std::size_t>(d)] = neg_tail[static_cast<std::size_t>(d) + 1];
        if (cd[static_cast<std::size_t>(d)] == 0)
            pos_tail[static_cast<std::size_t>(d)] += lpow[static_cast<std::size_t>(d) + 1];
        else
            neg_tail[static_cast<std::size_t>(d)] += lpow[static_cast<std::size_t>(d) + 1];
    }
    DStep step;
    step.lpow = &lpow;
    step.pos_tail = &pos_tail;
    step.neg_tail = &neg_tail;
    step.center = &cd;
    step.rho = rho;
    step.m = m;
    return run_counter(m, 0.0, 0.0, node_budget, "count_D", step);
}

BranchCount count_expansions(double x, double lambda, int k,
                             std::uint64_t node_budget) {
    check_lambda(lambda);
    if (k < 0 || k > SymbolWord::kMaxLength)
        throw std::invalid_argument("count_expansions: k out of range");
    const auto lpow = lambda_powers(lambda, k);
    ExpStep step;
    step.lpow = &lpow;
    step.x = x;
    step.k = k;
    step.lambda_ = lambda;
    return run_counter(k, 0.0, 0.0, node_budget, "count_expansions", step);
}

LocalDimFit local_dim_estimate(const DyadicHistogram& h, double x, int j_lo, int j_hi) {
    if (h.mass.empty())
        throw std::invalid_argument("local_dim_estimate: empty histogram");
    if (j_lo < 1 || j_hi < j_lo || j_hi > h.level)
        throw std::invalid_argument("local_dim_estimate: need 1 <= j_lo <= j_hi <= level");
    if (!(x >= 0.0) || !(x <= 1.0))
        throw std::invalid_argument("local_dim_estimate: x in [0,1]");
    LocalDimFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int j = j_lo; j <= j_hi; ++j) {
        const double r = std::ldexp(1.0, -j);
        const double mass = measure_interval(h, x - r, x + r);
        if (!(mass > 0.0)) {
            ++fit.scales_empty;
            continue;
        }
        const double lx = -static_cast<double>(j) * std::log(2.0);
        const double ly = std::log(mass);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    fit.scales_used = n;
    if (n < 2) {
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    fit.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    return fit;
}

double frostman_exponent(const DyadicHistogram& h) {
    if (h.mass.empty()) throw std::invalid_argument("frostman_exponent: empty histogram");
    const double denom = static_cast<double>(h.level) * std::log(2.0);
    const long long n = 1LL << h.level;
    double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : best)
    for (long long i = 0; i < n; ++i) {
        const double m = h.mass[static_cast<std::size_t>(i)];
        if (m > 0.0) best = std::min(best, -std::log(m) / denom);
    }
    return best;
}

}  // namespace pu
