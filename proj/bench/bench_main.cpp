// Serial-reference vs parallel-kernel benchmark. Each row runs the straight
// enumeration from pu::ref and the production kernel on the same instance,
// checks they agree, and reports wall times. Exit is nonzero on any mismatch.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pu/bernoulli.hpp"
#include "pu/reference.hpp"
#include "pu/septrans.hpp"
#include "pu/targets.hpp"

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int failures = 0;

void report(const char* name, double serial_s, double parallel_s, bool agree) {
    std::printf("%-14s %10.4fs %10.4fs %8.2fx   %s\n", name, serial_s, parallel_s,
                serial_s / parallel_s, agree ? "agree" : "MISMATCH");
    if (!agree) ++failures;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    std::printf("%-14s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        const double x = 0.41, rho = 1.7, lambda = 0.66;
        const int k = 24;
        double t0 = now_s();
        const double a = pu::ref::count_Nk(x, rho, k, lambda);
        double t1 = now_s();
        const double b = pu::count_Nk(x, rho, k, lambda).count;
        double t2 = now_s();
        report("count_Nk", t1 - t0, t2 - t1, a == b);
    }

    {
        const double lambda = 0.66;
        const int m = 24;
        pu::SymbolWord center = pu::SymbolWord::repeat("1101", m);
        const double rho = std::pow(lambda, 6);
        double t0 = now_s();
        const double a = pu::ref::count_D(center, rho, m, lambda);
        double t1 = now_s();
        const double b = pu::count_D(center, rho, m, lambda).count;
        double t2 = now_s();
        report("count_D", t1 - t0, t2 - t1, a == b);
    }

    {
        const double lambda = 0.661;
        const int n = 14;
        double t0 = now_s();
        const pu::MinPolyResult a = pu::ref::min_poly_value(lambda, n);
        double t1 = now_s();
        const pu::MinPolyResult b = pu::min_poly_value(lambda, n);
        double t2 = now_s();
        report("min_poly", t1 - t0, t2 - t1, a.min_value == b.min_value);
    }

    {
        const pu::Params p{0.7, 0.8};
        const pu::Schedule sched = pu::Schedule::from_rule(6, 4.0, 2, p);
        const pu::TargetSpec tgt{pu::SymbolWord::repeat("10", 128), p};
        const pu::MeasureSpec ms(2, tgt, sched);
        const double t = 1.0;
        const std::uint64_t pairs = 100000;
        const int depth = 64;
        double t0 = now_s();
        const double a = pu::ref::energy_mean(ms, t, pairs, depth, 1);
        double t1 = now_s();
        const double b = pu::energy_estimate(ms, t, pairs, depth, 1).mean;
        double t2 = now_s();
        report("energy", t1 - t0, t2 - t1, a == b);
    }

    {
        const auto rects = pu::attractor_rects(0.6, 12);
        const int r = 8;
        double t0 = now_s();
        const std::uint64_t a = pu::ref::box_count(rects, r);
        double t1 = now_s();
        const std::uint64_t b = pu::box_count(rects, r);
        double t2 = now_s();
        report("box_count", t1 - t0, t2 - t1, a == b);
    }

    return failures == 0 ? 0 : 1;
}
