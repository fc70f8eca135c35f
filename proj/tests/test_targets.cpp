#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pu/params.hpp"
#include "pu/reference.hpp"
#include "pu/scales.hpp"
#include "pu/targets.hpp"
#include "pu/word.hpp"

using namespace pu;

namespace {

const Params kP15{0.6, 0.5};    // case-1 regime
const Params kP98{0.9, 0.8};    // case-2/3 regime
const Params kP38{0.63, 0.8};   // case-2/3 regime, near the boundary

MeasureSpec case1_spec() {
    return MeasureSpec(1, TargetSpec{SymbolWord::repeat("10", 64), kP15},
                       Schedule::from_rule(4, 4.0, 2, kP15));
}

MeasureSpec case3_spec() {
    return MeasureSpec(3, TargetSpec{SymbolWord::repeat("10", 256), kP38},
                       Schedule::from_rule(4, 4.0, 3, kP38));
}

}  // namespace

TEST_CASE("TargetSpec: center and cube geometry") {
    const TargetSpec t{SymbolWord::repeat("10", 16), kP15};
    const Point2 c = t.center();
    CHECK(c.x == doctest::Approx((1.0 - std::pow(0.6, 16.0)) / 1.6).epsilon(1e-13));
    CHECK(c.y ==
          doctest::Approx((2.0 / 3.0) * (1.0 - std::ldexp(1.0, -16))).epsilon(1e-13));

    const CylinderRect q = t.cube(0.1);
    CHECK(q.width() == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(q.height() == doctest::Approx(0.2).epsilon(1e-13));
    CHECK((q.xlo + q.xhi) / 2 == doctest::Approx(c.x).epsilon(1e-13));
    CHECK((q.ylo + q.yhi) / 2 == doctest::Approx(c.y).epsilon(1e-13));

    const TargetSpec corner{SymbolWord::zeros(8), kP15};
    CHECK(corner.cube(0.25).xlo == doctest::Approx(-0.25).epsilon(1e-15));
    const CylinderRect clipped = corner.cube(0.25, true);
    CHECK(clipped.xlo == 0.0);
    CHECK(clipped.ylo == 0.0);
    CHECK(clipped.xhi == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(clipped.yhi == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(corner.cube(0.0), std::invalid_argument);
}

TEST_CASE("Schedule::from_rule: frozen structure at (0.75, 0.8)") {
    const Params p{0.75, 0.8};
    const Schedule s = Schedule::from_rule(4, 4.0, 3, p);
    REQUIRE(s.returns().size() == 3);
    CHECK(s.returns()[0] == 4);
    CHECK(s.returns()[1] == 16);
    CHECK(s.returns()[2] == 64);
    CHECK(s.ell1_at(0) == 2);
    CHECK(s.ell1_at(1) == 6);
    CHECK(s.ell1_at(2) == 21);
    CHECK(s.ell2_at(0) == 4);
    CHECK(s.ell2_at(1) == 13);
    CHECK(s.ell2_at(2) == 50);
    CHECK(s.lsum(0) == 0);
    CHECK(s.lsum(1) == 4);
    CHECK(s.lsum(2) == 17);
    CHECK(s.lsum(3) == 67);
    CHECK(s.coverage_depth() == 256);
    CHECK(s.params().lambda == 0.75);
}

TEST_CASE("Schedule::from_rule: the pinned-block branch of the gap law") {
    const Params p{0.9, 0.5};
    const Schedule s = Schedule::from_rule(4, 3.0, 3, p);
    REQUIRE(s.returns().size() == 3);
    // ell2(4) = 27, so the gap term 4 + 27 + 1 beats ceil(3*4)
    CHECK(s.returns()[1] == 32);
    CHECK(s.returns()[1] ==
          std::max<long long>(12, 4 + ell2(4, p) + 1));
    CHECK(s.returns()[2] == 244);
    CHECK(s.coverage_depth() == 1851);
}

TEST_CASE("Schedule::from_returns: explicit lists and their validation") {
    const Params p{0.75, 0.8};
    const Schedule s = Schedule::from_returns({4, 16, 64}, p);
    CHECK(s.returns() == std::vector<long long>{4, 16, 64});
    CHECK(s.ell2_at(2) == 50);
    CHECK(s.coverage_depth() == 64 + 50 + 1);

    const Schedule tight = Schedule::from_returns({4, 9}, p);
    CHECK(tight.coverage_depth() == 9 + ell2(9, p) + 1);

    CHECK_THROWS_AS(Schedule::from_returns({4, 6}, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_returns({4, 4}, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_returns({}, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_returns({0, 5}, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_rule(0, 4.0, 3, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_rule(4, 2.9, 3, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_rule(4, 4.0, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(Schedule::from_rule(4, 4.0, 17, p), std::invalid_argument);
}

TEST_CASE("MeasureSpec: constructor validation") {
    const Schedule s15 = Schedule::from_rule(4, 4.0, 2, kP15);
    const Schedule s98 = Schedule::from_rule(4, 4.0, 2, kP98);
    CHECK_THROWS_AS(MeasureSpec(2, TargetSpec{SymbolWord::repeat("10", 64), kP15},
                                s15),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasureSpec(1, TargetSpec{SymbolWord::repeat("10", 64), kP98},
                                s98),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasureSpec(0, TargetSpec{SymbolWord::repeat("10", 64), kP15},
                                s15),
                    std::invalid_argument);
    // target coding must cover the deepest pinned block (max ell2 = 22)
    CHECK_THROWS_AS(MeasureSpec(1, TargetSpec{SymbolWord::repeat("10", 4), kP15},
                                s15),
                    std::invalid_argument);
    CHECK_THROWS_AS(MeasureSpec(1,
                                TargetSpec{SymbolWord::repeat("10", 64),
                                           Params{0.61, 0.5}},
                                s15),
                    std::invalid_argument);
}

TEST_CASE("weight: case-1 pinned blocks and even splits") {
    const MeasureSpec ms = case1_spec();
    CHECK(ms.schedule().coverage_depth() == 64);
    CHECK(ms.schedule().ell2_at(0) == 6);
    CHECK(ms.schedule().ell2_at(1) == 22);
    CHECK(weight(ms, SymbolWord()) == 1.0);

    // depth 20 crosses positions 1-4 free, 5-10 pinned, 11-16 free, 17-20
    // pinned: 10 free digits
    const SymbolWord w = sample_path(ms, 20, 7);
    CHECK(weight(ms, w) == std::ldexp(1.0, -10));

    // exact conservation at a single node
    const SymbolWord parent = w.prefix(19);
    SymbolWord c0 = parent, c1 = parent;
    c0.push_back(0);
    c1.push_back(1);
    CHECK(weight(ms, c0) + weight(ms, c1) == weight(ms, parent));

    // violating a pinned digit kills the cylinder
    SymbolWord flipped = w.prefix(4);
    flipped.push_back(1 - w.bit(4));
    for (std::size_t i = 5; i < 20; ++i) flipped.push_back(w.bit(i));
    CHECK(weight(ms, flipped) == 0.0);

    SymbolWord deep = SymbolWord::zeros(65);
    CHECK_THROWS_AS(weight(ms, deep), std::invalid_argument);
}

TEST_CASE("weight: case-2 uses the same pinned-block law") {
    MeasureSpec ms(2, TargetSpec{SymbolWord::repeat("10", 256), kP98},
                   Schedule::from_rule(4, 4.0, 2, kP98));
    CHECK(ms.schedule().ell2_at(0) == 9);
    CHECK(ms.schedule().ell2_at(1) == 34);
    // depth 20: free 1-4 and 14-16, pinned 5-13 and 17-20: 7 free digits
    const SymbolWord w = sample_path(ms, 20, 3);
    CHECK(weight(ms, w) == std::ldexp(1.0, -7));
    CHECK(ms.window_total(0) == 1.0);  // cases 1 and 2 have no windows
}

TEST_CASE("MeasureSpec: case-3 ambiguous windows, frozen counts") {
    const MeasureSpec ms = case3_spec();
    CHECK(ms.schedule().ell1_at(0) == 2);
    CHECK(ms.schedule().ell1_at(1) == 6);
    CHECK(ms.schedule().ell1_at(2) == 21);
    CHECK(ms.schedule().ell2_at(0) == 2);
    CHECK(ms.schedule().ell2_at(1) == 8);
    CHECK(ms.schedule().ell2_at(2) == 31);

    CHECK(ms.window_total(0) == 1.0);
    CHECK(ms.window_total(1) == 2.0);
    CHECK(ms.window_total(2) == 15.0);
    CHECK(ms.window_members(0).empty());
    CHECK(ms.window_members(1).size() == 2);
    CHECK(ms.window_members(2).size() == 15);

    // the window always contains the target's own block (digits 7..8 of z)
    bool has_center = false;
    for (const SymbolWord& m : ms.window_members(1))
        if (m.to_string() == "10") has_center = true;
    CHECK(has_center);
    for (const SymbolWord& m : ms.window_members(1)) CHECK(m.size() == 2);

    CHECK_THROWS_AS(ms.window_total(3), std::invalid_argument);
    CHECK_THROWS_AS(ms.window_members(-1), std::invalid_argument);
    const MeasureSpec c1 = case1_spec();
    CHECK_THROWS_AS(c1.window_members(0), std::invalid_argument);
}

TEST_CASE("MeasureSpec: case-3 window members for an explicit schedule") {
    MeasureSpec ms(3, TargetSpec{SymbolWord::repeat("10", 256), kP38},
                   Schedule::from_returns({5, 20}, kP38));
    CHECK(ms.schedule().ell1_at(0) == 2);
    CHECK(ms.schedule().ell1_at(1) == 7);
    CHECK(ms.schedule().ell2_at(0) == 3);
    CHECK(ms.schedule().ell2_at(1) == 10);
    CHECK(ms.schedule().coverage_depth() == 31);
    CHECK(ms.window_total(0) == 1.0);
    CHECK(ms.window_total(1) == 3.0);
    REQUIRE(ms.window_members(0).size() == 1);
    REQUIRE(ms.window_members(1).size() == 3);
    CHECK(ms.window_members(1)[0].to_string() == "001");
    CHECK(ms.window_members(1)[1].to_string() == "010");
    CHECK(ms.window_members(1)[2].to_string() == "100");
}

TEST_CASE("weight: case-3 splits evenly across window members") {
    const MeasureSpec ms = case3_spec();
    // depth 24: free 1-4, block 5-6 (window empty), free 7-16, pinned 17-22,
    // window 23-24 with two members: weight = 2^-14 / 2
    const SymbolWord w = sample_path(ms, 24, 1);
    CHECK(weight(ms, w) == std::ldexp(1.0, -15));

    int positive = 0;
    for (int b0 = 0; b0 <= 1; ++b0)
        for (int b1 = 0; b1 <= 1; ++b1) {
            SymbolWord v = w.prefix(22);
            v.push_back(b0);
            v.push_back(b1);
            const double wt = weight(ms, v);
            if (wt > 0.0) {
                ++positive;
                CHECK(wt == std::ldexp(1.0, -15));
            } else {
                CHECK(wt == 0.0);
            }
        }
    CHECK(positive == 2);
}

TEST_CASE("mu_ball: brackets agree with the exhaustive reference") {
    const MeasureSpec ms = case1_spec();
    const SymbolWord x = sample_path(ms, 40, 7);

    const MassBracket big = mu_ball(ms, x, std::ldexp(1.0, -6));
    CHECK(big.depth == 13);
    CHECK(big.complete);
    CHECK(big.lower == 0.0625);
    CHECK(big.upper == 0.0625);
    CHECK(ref::mu_ball(ms, x, std::ldexp(1.0, -6), big.depth) ==
          doctest::Approx(big.upper).epsilon(1e-12));

    const MassBracket small = mu_ball(ms, x, std::ldexp(1.0, -10));
    CHECK(small.depth == 18);
    CHECK(small.complete);
    CHECK(small.lower <= small.upper + 1e-15);
    CHECK(small.upper > 0.0);
    CHECK(ref::mu_ball(ms, x, std::ldexp(1.0, -10), small.depth) ==
          doctest::Approx(small.upper).epsilon(1e-12));

    const MassBracket starved = mu_ball(ms, x, std::ldexp(1.0, -10), 4);
    CHECK_FALSE(starved.complete);

    CHECK_THROWS_AS(mu_ball(ms, x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mu_ball(ms, x, 2.0), std::invalid_argument);
    MeasureSpec shallow(2, TargetSpec{SymbolWord::repeat("10", 256), Params{0.75, 0.8}},
                        Schedule::from_returns({4, 9}, Params{0.75, 0.8}));
    CHECK_THROWS_AS(mu_ball(shallow, SymbolWord::repeat("10", 64),
                            std::ldexp(1.0, -20)),
                    std::invalid_argument);
}

TEST_CASE("local_dim_probe: entry structure and summaries") {
    const MeasureSpec ms = case1_spec();
    const SymbolWord x = sample_path(ms, 26, 5);
    const ProbeResult pr = local_dim_probe(ms, x, 8, 16);
    REQUIRE(pr.entries.size() == 9);
    double min_ratio = 1e300;
    for (std::size_t i = 0; i < pr.entries.size(); ++i) {
        const ProbeEntry& e = pr.entries[i];
        CHECK(e.r == 8 + static_cast<int>(i));
        CHECK(e.complete);
        CHECK(e.log2_mu_lower <= e.log2_mu_upper + 1e-12);
        CHECK(e.ratio ==
              doctest::Approx(e.log2_mu_upper / -static_cast<double>(e.r))
                  .epsilon(1e-12));
        if (i > 0) CHECK(e.log2_mu_upper <= pr.entries[i - 1].log2_mu_upper + 1e-9);
        min_ratio = std::min(min_ratio, e.ratio);
    }
    CHECK(pr.min_ratio == doctest::Approx(min_ratio).epsilon(1e-12));
    CHECK(pr.window_slope ==
          doctest::Approx((pr.entries.back().log2_mu_upper -
                           pr.entries.front().log2_mu_upper) /
                          (8.0 - 16.0))
              .epsilon(1e-12));
    CHECK(std::isfinite(pr.ls_slope));

    CHECK_THROWS_AS(local_dim_probe(ms, x, 0, 16), std::invalid_argument);
    CHECK_THROWS_AS(local_dim_probe(ms, SymbolWord::zeros(5), 8, 16),
                    std::invalid_argument);
    SymbolWord outside = x.prefix(4);
    outside.push_back(1 - x.bit(4));
    for (std::size_t i = 5; i < x.size(); ++i) outside.push_back(x.bit(i));
    CHECK_THROWS_AS(local_dim_probe(ms, outside, 8, 16), std::invalid_argument);
}

TEST_CASE("sample_path: deterministic, prefix-stable, inside the support") {
    const MeasureSpec ms = case1_spec();
    const SymbolWord a = sample_path(ms, 40, 9);
    const SymbolWord b = sample_path(ms, 40, 9);
    CHECK(a == b);
    CHECK_FALSE(a == sample_path(ms, 40, 10));
    // one uniform draw per level: deepening the walk extends the same path
    CHECK(sample_path(ms, 20, 9) == a.prefix(20));
    CHECK(weight(ms, a) > 0.0);
    CHECK_THROWS_AS(sample_path(ms, 65, 9), std::invalid_argument);
}

TEST_CASE("energy_estimate: exact endpoints, reference parity, depth growth") {
    const MeasureSpec ms = case1_spec();
    CHECK(energy_estimate(ms, 0.0, 500, 8, 3).mean == 1.0);

    const EnergyStats es = energy_estimate(ms, 0.9, 300, 8, 11);
    CHECK(es.t == 0.9);
    CHECK(es.depth == 8);
    CHECK(es.pairs == 300);
    CHECK(es.mean ==
          doctest::Approx(ref::energy_mean(ms, 0.9, 300, 8, 11)).epsilon(1e-12));

    // the floor C*2^-depth shrinks with depth, so the mean cannot fall
    const double m4 = energy_estimate(ms, 0.9, 300, 4, 11).mean;
    const double m8 = energy_estimate(ms, 0.9, 300, 8, 11).mean;
    const double m16 = energy_estimate(ms, 0.9, 300, 16, 11).mean;
    CHECK(m4 <= m8 * (1 + 1e-12));
    CHECK(m8 <= m16 * (1 + 1e-12));

    CHECK_THROWS_AS(energy_estimate(ms, -1.0, 300, 8, 11), std::invalid_argument);
    CHECK_THROWS_AS(energy_estimate(ms, 0.9, 0, 8, 11), std::invalid_argument);
    CHECK_THROWS_AS(energy_estimate(ms, 0.9, 300, 65, 11), std::invalid_argument);
}

TEST_CASE("dynamical_membership: the pinned window after position n") {
    const TargetSpec t{SymbolWord::repeat("10", 64), kP15};
    CHECK(ell_n_dynamical(10, kP15) == 8);
    SymbolWord member = SymbolWord::zeros(10);
    for (int i = 0; i < 8; ++i) member.push_back(t.z.bit(static_cast<std::size_t>(i)));
    CHECK(dynamical_membership(member, t, 10));
    member.push_back(0);  // trailing digits are unconstrained
    CHECK(dynamical_membership(member, t, 10));

    SymbolWord off = member.prefix(17);
    off.push_back(1 - member.bit(17));
    CHECK_FALSE(dynamical_membership(off, t, 10));

    CHECK_THROWS_AS(dynamical_membership(member, t, 0), std::invalid_argument);
    CHECK_THROWS_AS(dynamical_membership(SymbolWord::zeros(17), t, 10),
                    std::invalid_argument);
    const TargetSpec short_z{SymbolWord::repeat("10", 4), kP15};
    CHECK_THROWS_AS(dynamical_membership(member, short_z, 10),
                    std::invalid_argument);
}

TEST_CASE("preimage_rects: one contracted copy of the target per word") {
    const TargetSpec t{SymbolWord::repeat("10", 16), kP15};
    const auto rects = preimage_rects(t, 3);
    REQUIRE(rects.size() == 8);
    const double w = 2.0 * std::pow(0.5, 3.0) * std::pow(0.6, 3.0);
    for (const CylinderRect& r : rects) {
        CHECK(r.width() == doctest::Approx(w).epsilon(1e-12));
        CHECK(r.height() == 0.03125);
        CHECK(r.xlo >= 0.0);
        CHECK(r.xhi <= 1.0);
        CHECK(r.ylo >= 0.0);
        CHECK(r.yhi <= 1.0);
    }
    const auto whole = preimage_rects(t, 0);
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].xlo == 0.0);
    CHECK(whole[0].xhi == 1.0);
    CHECK(whole[0].ylo == 0.0);
    CHECK(whole[0].yhi == 1.0);
    CHECK_THROWS_AS(preimage_rects(t, 21), std::invalid_argument);
}

TEST_CASE("cover_count: three strategies at (0.6, 0.5), n = 6") {
    const TargetSpec t{SymbolWord::repeat("10", 64), kP15};
    const CoverCount a = cover_count('A', t, 6);
    CHECK(a.side_log2 == -11.0);
    CHECK(a.count_log2 == 6.0);
    CHECK(a.exponent() == doctest::Approx(6.0 / 11.0).epsilon(1e-15));

    const CoverCount b = cover_count('B', t, 6);
    CHECK(b.side_log2 == -12.0);
    CHECK(b.count_log2 == doctest::Approx(6.0 + std::log2(3.0)).epsilon(1e-14));
    CHECK(b.side == doctest::Approx(std::exp2(b.side_log2)).epsilon(1e-15));
    CHECK(b.count == doctest::Approx(std::exp2(b.count_log2)).epsilon(1e-14));

    const CoverCount c = cover_count('C', t, 6, 2.5);
    CHECK(c.side_log2 == -15.0);
    CHECK(c.count_log2 == 12.5);

    // without an override the branch count is measured, and is at least 1
    CHECK(cover_count('C', t, 6).count_log2 >= 10.0 - 1e-12);

    CHECK_THROWS_AS(cover_count('D', t, 6), std::invalid_argument);
    CHECK_THROWS_AS(cover_count('A', t, 0), std::invalid_argument);
}

TEST_CASE("attractor_rects: cylinder cover of the attractor") {
    const auto rects = attractor_rects(0.6, 3);
    REQUIRE(rects.size() == 8);
    for (const CylinderRect& r : rects) {
        CHECK(r.width() == doctest::Approx(0.216).epsilon(1e-14));
        CHECK(r.height() == 0.125);
    }
    CHECK_THROWS_AS(attractor_rects(0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(attractor_rects(0.6, 25), std::invalid_argument);
}

TEST_CASE("box_count: matches the cell-scan reference, frozen value") {
    const auto rects8 = attractor_rects(0.6, 8);
    for (int r : {2, 4, 6, 8, 10})
        CHECK(box_count(rects8, r) == ref::box_count(rects8, r));

    const auto rects14 = attractor_rects(0.6, 14);
    CHECK(box_count(rects14, 10) == 7356);

    CHECK_THROWS_AS(box_count(rects8, 31), std::invalid_argument);
    CHECK_THROWS_AS(box_count(attractor_rects(0.6, 4), 30), WorkBudgetError);
}

TEST_CASE("dim_box_estimate: frozen fit at lambda = 0.6") {
    const auto rects = attractor_rects(0.6, 14);
    const BoxDimFit fit = dim_box_estimate(rects, 8, 12);
    CHECK(fit.slope == doctest::Approx(1.2265873134982586).epsilon(1e-12));
    REQUIRE(fit.counts.size() == 5);
    const std::uint64_t expected[] = {1352, 3156, 7356, 17258, 40574};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(fit.counts[i].first == 8 + static_cast<int>(i));
        CHECK(fit.counts[i].second == expected[i]);
    }
    CHECK_THROWS_AS(dim_box_estimate(rects, 8, 9), std::invalid_argument);
    CHECK_THROWS_AS(dim_box_estimate({}, 8, 12), std::invalid_argument);
}

TEST_CASE("raster_rects: pixel grid reproduces box counts") {
    const auto rects = attractor_rects(0.6, 14);
    const auto img = raster_rects(rects, 1024);
    REQUIRE(img.size() == std::size_t{1024} * 1024);
    std::uint64_t on = 0;
    for (std::uint8_t v : img) {
        CHECK((v == 0 || v == 255));
        if (v == 255) ++on;
    }
    CHECK(on == box_count(rects, 10));
    CHECK(on == 7356);

    const auto tiny = raster_rects(rects, 16);
    std::uint64_t on4 = 0;
    for (std::uint8_t v : tiny)
        if (v == 255) ++on4;
    CHECK(on4 == box_count(rects, 4));

    CHECK_THROWS_AS(raster_rects(rects, 0), std::invalid_argument);
    CHECK_THROWS_AS(raster_rects(rects, 8193), std::invalid_argument);
}
