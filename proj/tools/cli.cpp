#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "pu/bernoulli.hpp"
#include "pu/io.hpp"
#include "pu/scales.hpp"
#include "pu/septrans.hpp"
#include "pu/symbolic.hpp"
#include "pu/targets.hpp"
#include "pu/word.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

struct RunConfig {
    double lambda = -1.0, gamma = -1.0, lambda0 = -1.0, lambda1 = -1.0;
    double rho = -1.0, t = -1.0, delta = 1e-4, lo = -1.0, hi = -1.0, x = -1.0;
    double c = 4.0, log2_n_override = -1.0;
    long long n = -1, k = -1, nmax = -1, n1 = 4, depth = -1, level = 12;
    long long px = 1024, r_lo = -1, r_hi = -1, degree = 40, returns = 3;
    std::uint64_t samples = 10000, pairs = 10000, seed = 0, budget = 0;
    int which_case = -1, threads = 0;
    std::string word, wi, wj, z, z_repeat = "10";
    std::string strategies = "ABC", depth_factors = "1,2,4";
    std::string out, out_dir = ".";
};

json config_to_json(const RunConfig& c) {
    json j;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["lambda0"] = c.lambda0;
    j["lambda1"] = c.lambda1;
    j["rho"] = c.rho;
    j["t"] = c.t;
    j["delta"] = c.delta;
    j["lo"] = c.lo;
    j["hi"] = c.hi;
    j["x"] = c.x;
    j["c"] = c.c;
    j["log2_n_override"] = c.log2_n_override;
    j["n"] = c.n;
    j["k"] = c.k;
    j["nmax"] = c.nmax;
    j["n1"] = c.n1;
    j["depth"] = c.depth;
    j["level"] = c.level;
    j["px"] = c.px;
    j["r_lo"] = c.r_lo;
    j["r_hi"] = c.r_hi;
    j["degree"] = c.degree;
    j["returns"] = c.returns;
    j["samples"] = c.samples;
    j["pairs"] = c.pairs;
    j["seed"] = c.seed;
    j["budget"] = c.budget;
    j["case"] = c.which_case;
    j["threads"] = c.threads;
    j["word"] = c.word;
    j["i"] = c.wi;
    j["j"] = c.wj;
    j["z"] = c.z;
    j["z_repeat"] = c.z_repeat;
    j["strategies"] = c.strategies;
    j["depth_factors"] = c.depth_factors;
    j["out"] = c.out;
    j["out_dir"] = c.out_dir;
    return j;
}

// JSON-safe number: doubles stay numeric, non-finite values become strings.
json jnum(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

struct Binding {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> apply;
};

struct SubCtx {
    std::string name;
    CLI::App* sub = nullptr;
    std::vector<Binding> binds;
    std::function<json(RunConfig&, std::vector<std::string>&)> handler;
};

template <class T>
void bind_opt(CLI::App* sub, std::vector<Binding>& binds, const std::string& flag,
              T& field, const std::string& desc) {
    CLI::Option* o = sub->add_option(flag, field, desc);
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    binds.push_back({key, o, [&field](const json& v) { field = v.get<T>(); }});
}

pu::Params make_params(const RunConfig& c) {
    pu::Params p{c.lambda, c.gamma};
    p.validate();
    return p;
}

pu::SymbolWord make_word(const std::string& s, const char* what) {
    if (s.empty())
        throw std::invalid_argument(std::string(what) + ": empty word");
    return pu::SymbolWord(s);
}

// Explicit --z wins; otherwise the --z-repeat pattern is tiled to min_len.
pu::SymbolWord make_target_coding(const RunConfig& c, long long min_len) {
    if (!c.z.empty()) {
        pu::SymbolWord w(c.z);
        if (static_cast<long long>(w.size()) < min_len)
            throw std::invalid_argument("z: coding shorter than required length");
        return w;
    }
    if (c.z_repeat.empty()) throw std::invalid_argument("z_repeat: empty pattern");
    const long long len =
        std::max<long long>(min_len, static_cast<long long>(c.z_repeat.size()));
    return pu::SymbolWord::repeat(c.z_repeat, static_cast<std::size_t>(len));
}

pu::Schedule make_schedule(const RunConfig& c, const pu::Params& p) {
    return pu::Schedule::from_rule(c.n1, c.c, static_cast<int>(c.returns), p);
}

long long max_ell2(const pu::Schedule& s) {
    long long m = 0;
    for (std::size_t i = 0; i < s.returns().size(); ++i)
        m = std::max<long long>(m, s.ell2_at(static_cast<int>(i)));
    return m;
}

std::vector<int> parse_factors(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        const int f = std::stoi(tok);
        if (f < 1) throw std::invalid_argument("depth_factors: factors must be >= 1");
        out.push_back(f);
    }
    if (out.empty()) throw std::invalid_argument("depth_factors: none given");
    return out;
}

std::string path_join(const std::string& dir, const std::string& base) {
    if (dir.empty() || dir == ".") return base;
    return dir + "/" + base;
}

void write_json_file(const std::string& path, const json& j) {
    pu::io::write_text(path, j.dump(2) + "\n");
}

// ---- handlers ----------------------------------------------------------

json do_render(RunConfig& c, std::vector<std::string>& outputs) {
    if (c.depth < 0) c.depth = 14;
    const auto rects = pu::attractor_rects(c.lambda, static_cast<int>(c.depth));
    const auto img = pu::raster_rects(rects, static_cast<int>(c.px));
    const std::string file = outputs.emplace_back("render.pgm");
    pu::io::write_pgm(path_join(c.out_dir, file), img, static_cast<int>(c.px),
                      static_cast<int>(c.px));
    json res;
    res["rects"] = rects.size();
    res["px"] = c.px;
    return res;
}

json do_dim_f(RunConfig& c, std::vector<std::string>& outputs) {
    if (c.depth < 0) c.depth = 18;
    if (c.r_lo < 0) c.r_lo = 8;
    if (c.r_hi < 0) c.r_hi = 14;
    const auto rects = pu::attractor_rects(c.lambda, static_cast<int>(c.depth));
    const pu::BoxDimFit fit =
        pu::dim_box_estimate(rects, static_cast<int>(c.r_lo), static_cast<int>(c.r_hi));
    pu::io::CsvWriter csv({"r", "count"});
    for (const auto& [r, count] : fit.counts)
        csv.row({std::to_string(r), std::to_string(count)});
    const std::string file = outputs.emplace_back("dim-f.csv");
    csv.write(path_join(c.out_dir, file));
    const double reference = pu::dim_attractor(c.lambda);
    json res;
    res["slope"] = jnum(fit.slope);
    res["reference"] = jnum(reference);
    res["abs_error"] = jnum(std::fabs(fit.slope - reference));
    return res;
}

json do_cover(RunConfig& c, std::vector<std::string>& outputs) {
    const pu::Params p = make_params(c);
    if (c.n < 1) throw std::invalid_argument("targets cover: --n >= 1 required");
    const long long need = pu::ell2(c.n, p) + 64;
    pu::TargetSpec tgt{make_target_coding(c, std::min<long long>(need, 4096)), p};
    pu::io::CsvWriter csv({"strategy", "n", "side_log2", "count_log2", "exponent"});
    json rows = json::array();
    for (char s : c.strategies) {
        const pu::CoverCount cc = pu::cover_count(s, tgt, c.n, c.log2_n_override);
        csv.row({std::string(1, s), std::to_string(c.n),
                 pu::io::fmt_double(cc.side_log2), pu::io::fmt_double(cc.count_log2),
                 pu::io::fmt_double(cc.exponent())});
        json r;
        r["strategy"] = std::string(1, s);
        r["side_log2"] = jnum(cc.side_log2);
        r["count_log2"] = jnum(cc.count_log2);
        r["exponent"] = jnum(cc.exponent());
        rows.push_back(r);
    }
    const std::string file = outputs.emplace_back("targets-cover.csv");
    csv.write(path_join(c.out_dir, file));
    json res;
    res["n"] = c.n;
    res["rows"] = rows;
    return res;
}

json do_probe(RunConfig& c, std::vector<std::string>& outputs) {
    const pu::Params p = make_params(c);
    if (c.which_case < 1) throw std::invalid_argument("targets probe: --case required");
    if (c.r_lo < 0) c.r_lo = 20;
    if (c.r_hi < 0) c.r_hi = 60;
    const pu::Schedule sched = make_schedule(c, p);
    pu::TargetSpec tgt{make_target_coding(c, max_ell2(sched)), p};
    pu::MeasureSpec ms(c.which_case, tgt, sched);
    const long long depth = pu::k_of_r(c.r_hi, p) + 4;
    const pu::SymbolWord x =
        c.word.empty() ? pu::sample_path(ms, static_cast<int>(depth), c.seed)
                       : make_word(c.word, "targets probe --word");
    const pu::ProbeResult pr =
        pu::local_dim_probe(ms, x, static_cast<int>(c.r_lo), static_cast<int>(c.r_hi));
    json res;
    res["case"] = c.which_case;
    res["lambda"] = c.lambda;
    res["gamma"] = c.gamma;
    res["schedule"] = sched.returns();
    res["coverage_depth"] = sched.coverage_depth();
    json entries = json::array();
    for (const pu::ProbeEntry& e : pr.entries) {
        json je;
        je["r"] = e.r;
        je["log_R"] = -e.r;
        je["log_mu"] = jnum(e.log2_mu_upper);
        je["log_mu_lower"] = jnum(e.log2_mu_lower);
        je["ratio"] = jnum(e.ratio);
        je["complete"] = e.complete;
        entries.push_back(je);
    }
    res["entries"] = entries;
    res["slope"] = jnum(pr.window_slope);
    res["ls_slope"] = jnum(pr.ls_slope);
    res["min_ratio"] = jnum(pr.min_ratio);
    const std::string file = outputs.emplace_back("targets-probe.json");
    write_json_file(path_join(c.out_dir, file), res);
    return res;
}

json do_energy(RunConfig& c, std::vector<std::string>& outputs) {
    const pu::Params p = make_params(c);
    if (c.which_case < 1) throw std::invalid_argument("targets energy: --case required");
    if (!(c.t >= 0.0)) throw std::invalid_argument("targets energy: --t required");
    if (c.depth < 0) c.depth = 48;
    const pu::Schedule sched = make_schedule(c, p);
    pu::TargetSpec tgt{make_target_coding(c, max_ell2(sched)), p};
    pu::MeasureSpec ms(c.which_case, tgt, sched);
    const std::vector<int> factors = parse_factors(c.depth_factors);
    json depths = json::array(), means = json::array(), ratios = json::array();
    double prev = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const int d = static_cast<int>(c.depth) * factors[i];
        const pu::EnergyStats es = pu::energy_estimate(ms, c.t, c.pairs, d, c.seed);
        depths.push_back(d);
        means.push_back(jnum(es.mean));
        if (i > 0) {
            ratios.push_back(jnum(es.mean / prev));
            if (!(es.mean > prev)) monotone = false;
        }
        prev = es.mean;
    }
    json res;
    res["case"] = c.which_case;
    res["t"] = c.t;
    res["pairs"] = c.pairs;
    res["depths"] = depths;
    res["means"] = means;
    res["ratios"] = ratios;
    res["monotone_growth"] = monotone;
    const std::string file = outputs.emplace_back("targets-energy.json");
    write_json_file(path_join(c.out_dir, file), res);
    return res;
}

json do_dynamical(RunConfig& c, std::vector<std::string>& outputs) {
    const pu::Params p = make_params(c);
    if (c.n < 1) throw std::invalid_argument("targets dynamical: --n >= 1 required");
    const long long ell = pu::ell_n_dynamical(c.n, p);
    pu::TargetSpec tgt{make_target_coding(c, ell), p};
    const pu::SymbolWord w = make_word(c.word, "targets dynamical --word");
    const bool member = pu::dynamical_membership(w, tgt, c.n);
    json res;
    res["member"] = member;
    res["n"] = c.n;
    res["ell_n"] = ell;
    const std::string file = outputs.emplace_back("targets-dynamical.json");
    write_json_file(path_join(c.out_dir, file), res);
    return res;
}

json do_bc_hist(RunConfig& c, std::vector<std::string>& outputs) {
    const pu::DyadicHistogram h =
        pu::build_histogram(c.lambda, static_cast<int>(c.level));
    pu::io::CsvWriter csv({"index", "x_lo", "mass"});
    const double scale = std::ldexp(1.0, -h.level);
    for (std::size_t i = 0; i < h.mass.size(); ++i)
        csv.row({std::to_string(i),
                 pu::io::fmt_double(static_cast<double>(i) * scale),
                 pu::io::fmt_double(h.mass[i])});
    const std::string file = outputs.emplace_back("bc-hist.csv");
    csv.write(path_join(c.out_dir, file));
    json res;
    res["level"] = h.level;
    res["iterations"] = h.iterations;
    res["residual"] = jnum(h.residual);
    res["frostman"] = jnum(pu::frostman_exponent(h));
    return res;
}

json do_bc_nk(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    if (c.k < 0) throw std::invalid_argument("bc nk: --k required");
    if (!(c.rho >= 0.0)) throw std::invalid_argument("bc nk: --rho required");
    const pu::BranchCount bc =
        pu::count_Nk(c.x, c.rho, static_cast<int>(c.k), c.lambda, c.budget);
    json res;
    res["count"] = jnum(bc.count);
    res["nodes_visited"] = bc.nodes_visited;
    return res;
}

json do_bc_expansions(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    if (c.k < 0) throw std::invalid_argument("bc expansions: --k required");
    const pu::BranchCount bc =
        pu::count_expansions(c.x, c.lambda, static_cast<int>(c.k), c.budget);
    json res;
    res["count"] = jnum(bc.count);
    res["nodes_visited"] = bc.nodes_visited;
    return res;
}

json do_sep_scan(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    if (c.n < 0) throw std::invalid_argument("sep scan: --n required");
    const pu::MinPolyResult r = pu::min_poly_value(c.lambda, static_cast<int>(c.n));
    json res;
    res["min_value"] = jnum(r.min_value);
    res["exact_zero"] = r.exact_zero;
    json coeffs = json::array();
    for (signed char v : r.coeffs) coeffs.push_back(static_cast<int>(v));
    res["coeffs"] = coeffs;
    return res;
}

json do_sep_profile(RunConfig& c, std::vector<std::string>& outputs) {
    if (c.nmax < 1) throw std::invalid_argument("sep profile: --nmax >= 1 required");
    const auto prof = pu::separation_profile(c.lambda, static_cast<int>(c.nmax));
    pu::io::CsvWriter csv({"n", "min_value", "log_min_over_n", "exact_zero", "seconds"});
    int first_zero = -1;
    for (const pu::ProfileEntry& e : prof) {
        csv.row({std::to_string(e.n), pu::io::fmt_double(e.min_value),
                 pu::io::fmt_double(e.log_min_over_n),
                 e.exact_zero ? "1" : "0", pu::io::fmt_double(e.seconds)});
        if (e.exact_zero && first_zero < 0) first_zero = e.n;
    }
    const std::string file = outputs.emplace_back("sep-profile.csv");
    csv.write(path_join(c.out_dir, file));
    json res;
    res["nmax"] = c.nmax;
    res["first_exact_zero"] = first_zero;
    return res;
}

json do_trans_measure(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    if (!(c.rho > 0.0)) throw std::invalid_argument("trans measure: --rho required");
    if (c.lo < 0) c.lo = 0.52;
    if (c.hi < 0) c.hi = 0.66;
    const pu::SymbolWord i = make_word(c.wi, "trans measure --i");
    const pu::SymbolWord j = make_word(c.wj, "trans measure --j");
    const pu::TransversalityMeasure tm =
        pu::transversality_measure(i, j, c.rho, c.lo, c.hi);
    json res;
    res["measure"] = jnum(tm.measure);
    res["implied_c"] = jnum(tm.implied_c);
    return res;
}

json do_trans_doublezero(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    if (c.lo < 0) c.lo = 0.501;
    if (c.hi < 0) c.hi = 0.66;
    const pu::DoubleZeroReport rep = pu::double_zero_scan(
        c.lo, c.hi, static_cast<int>(c.degree), c.delta, c.samples, c.seed);
    json res;
    res["samples"] = rep.samples;
    res["roots_seen"] = rep.roots_seen;
    res["violation_count"] = rep.violations.size();
    json vs = json::array();
    for (std::size_t i = 0; i < rep.violations.size() && i < 100; ++i) {
        json v;
        v["sample"] = rep.violations[i].sample_index;
        v["root"] = jnum(rep.violations[i].root);
        v["deriv_abs"] = jnum(rep.violations[i].deriv_abs);
        vs.push_back(v);
    }
    res["violations"] = vs;
    return res;
}

json do_formulas(RunConfig& c, std::vector<std::string>& outputs) {
    (void)outputs;
    const pu::Params p = make_params(c);
    json res;
    res["lambda"] = c.lambda;
    res["gamma"] = c.gamma;
    switch (p.regime()) {
        case pu::Regime::Case1: res["regime"] = "case1"; break;
        case pu::Regime::Boundary: res["regime"] = "boundary"; break;
        default: res["regime"] = "case23"; break;
    }
    res["attractor_dim"] = jnum(pu::dim_attractor(c.lambda));
    res["boundary_lambda"] = jnum(1.0 / (2.0 * c.gamma));
    res["dim_case1"] = jnum(pu::dim_formula(1, p));
    res["dim_case2"] = jnum(pu::dim_formula(2, p));
    res["dim_case3"] = jnum(pu::dim_formula(3, p));
    res["t_identity_gap"] = jnum(pu::t_gamma_identity_gap(p));
    if (c.lambda0 > 0.0 || c.lambda1 > 0.0) {
        const pu::Case3Constants cc =
            pu::case3_constants(c.lambda0, c.lambda1, c.gamma);
        res["case3_constants"] =
            json{{"xi", jnum(cc.xi)}, {"s", jnum(cc.s)}, {"eta", jnum(cc.eta)}};
    }
    return res;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    RunConfig cfg;
    std::string config_path;

    CLI::App app{"shrinking-target geometry toolkit"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    CLI::Option* opt_config =
        app.add_option("--config", config_path, "JSON config or manifest to load");
    std::vector<Binding> global_binds;
    bind_opt(&app, global_binds, "--out-dir", cfg.out_dir, "output directory");
    bind_opt(&app, global_binds, "--out", cfg.out, "output base name");
    bind_opt(&app, global_binds, "--threads", cfg.threads, "thread cap (0 = default)");
    bind_opt(&app, global_binds, "--seed", cfg.seed, "RNG seed");

    std::vector<SubCtx> subs;
    auto add_sub = [&](CLI::App* parent, const std::string& name,
                       const std::string& full, const std::string& desc,
                       std::function<json(RunConfig&, std::vector<std::string>&)> h)
        -> SubCtx& {
        SubCtx ctx;
        ctx.name = full;
        ctx.sub = parent->add_subcommand(name, desc);
        ctx.handler = std::move(h);
        subs.push_back(std::move(ctx));
        return subs.back();
    };

    {
        SubCtx& s = add_sub(&app, "render", "render",
                            "raster the attractor's cylinder cover", do_render);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--depth", cfg.depth, "cylinder depth");
        bind_opt(s.sub, s.binds, "--px", cfg.px, "image side in pixels");
    }
    {
        SubCtx& s = add_sub(&app, "dim-f", "dim-f",
                            "box-dimension fit of the attractor", do_dim_f);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--depth", cfg.depth, "cylinder depth");
        bind_opt(s.sub, s.binds, "--r-lo", cfg.r_lo, "coarsest grid exponent");
        bind_opt(s.sub, s.binds, "--r-hi", cfg.r_hi, "finest grid exponent");
    }

    CLI::App* targets = app.add_subcommand("targets", "shrinking-target operations");
    targets->require_subcommand(1);
    {
        SubCtx& s = add_sub(targets, "cover", "targets cover",
                            "covering costs of the n-th stage", do_cover);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--gamma", cfg.gamma, "target shrink rate");
        bind_opt(s.sub, s.binds, "--n", cfg.n, "stage index");
        bind_opt(s.sub, s.binds, "--z", cfg.z, "target coding digits");
        bind_opt(s.sub, s.binds, "--z-repeat", cfg.z_repeat, "target coding pattern");
        bind_opt(s.sub, s.binds, "--strategies", cfg.strategies, "subset of ABC");
        bind_opt(s.sub, s.binds, "--log2-n-override", cfg.log2_n_override,
                 "log2 branch count for strategy C");
    }
    {
        SubCtx& s = add_sub(targets, "probe", "targets probe",
                            "local mass decay around a support point", do_probe);
        bind_opt(s.sub, s.binds, "--case", cfg.which_case, "measure case 1, 2 or 3");
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--gamma", cfg.gamma, "target shrink rate");
        bind_opt(s.sub, s.binds, "--n1", cfg.n1, "first return time");
        bind_opt(s.sub, s.binds, "--c", cfg.c, "return ratio");
        bind_opt(s.sub, s.binds, "--returns", cfg.returns, "number of returns");
        bind_opt(s.sub, s.binds, "--r-lo", cfg.r_lo, "coarsest radius exponent");
        bind_opt(s.sub, s.binds, "--r-hi", cfg.r_hi, "finest radius exponent");
        bind_opt(s.sub, s.binds, "--z", cfg.z, "target coding digits");
        bind_opt(s.sub, s.binds, "--z-repeat", cfg.z_repeat, "target coding pattern");
        bind_opt(s.sub, s.binds, "--word", cfg.word, "probe point digits (else sampled)");
    }
    {
        SubCtx& s = add_sub(targets, "energy", "targets energy",
                            "Monte Carlo energy means across depths", do_energy);
        bind_opt(s.sub, s.binds, "--case", cfg.which_case, "measure case 1, 2 or 3");
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--gamma", cfg.gamma, "target shrink rate");
        bind_opt(s.sub, s.binds, "--t", cfg.t, "energy exponent");
        bind_opt(s.sub, s.binds, "--pairs", cfg.pairs, "sample pairs");
        bind_opt(s.sub, s.binds, "--depth", cfg.depth, "base coding depth");
        bind_opt(s.sub, s.binds, "--depth-factors", cfg.depth_factors,
                 "comma list of depth multipliers");
        bind_opt(s.sub, s.binds, "--n1", cfg.n1, "first return time");
        bind_opt(s.sub, s.binds, "--c", cfg.c, "return ratio");
        bind_opt(s.sub, s.binds, "--returns", cfg.returns, "number of returns");
        bind_opt(s.sub, s.binds, "--z", cfg.z, "target coding digits");
        bind_opt(s.sub, s.binds, "--z-repeat", cfg.z_repeat, "target coding pattern");
    }
    {
        SubCtx& s = add_sub(targets, "dynamical", "targets dynamical",
                            "membership in the n-th dynamical window", do_dynamical);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--gamma", cfg.gamma, "target shrink rate");
        bind_opt(s.sub, s.binds, "--n", cfg.n, "window position");
        bind_opt(s.sub, s.binds, "--word", cfg.word, "coding to test");
        bind_opt(s.sub, s.binds, "--z", cfg.z, "target coding digits");
        bind_opt(s.sub, s.binds, "--z-repeat", cfg.z_repeat, "target coding pattern");
    }

    CLI::App* bc = app.add_subcommand("bc", "balanced convolution measures");
    bc->require_subcommand(1);
    {
        SubCtx& s = add_sub(bc, "hist", "bc hist",
                            "stationary dyadic histogram", do_bc_hist);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "contraction");
        bind_opt(s.sub, s.binds, "--level", cfg.level, "dyadic level");
    }
    {
        SubCtx& s = add_sub(bc, "nk", "bc nk",
                            "branch intervals near a point", do_bc_nk);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "contraction");
        bind_opt(s.sub, s.binds, "--x", cfg.x, "center");
        bind_opt(s.sub, s.binds, "--rho", cfg.rho, "radius in units of lambda^k");
        bind_opt(s.sub, s.binds, "--k", cfg.k, "depth");
        bind_opt(s.sub, s.binds, "--budget", cfg.budget, "node budget (0 = default)");
    }
    {
        SubCtx& s = add_sub(bc, "expansions", "bc expansions",
                            "digit expansions of a point", do_bc_expansions);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "contraction");
        bind_opt(s.sub, s.binds, "--x", cfg.x, "point");
        bind_opt(s.sub, s.binds, "--k", cfg.k, "depth");
        bind_opt(s.sub, s.binds, "--budget", cfg.budget, "node budget (0 = default)");
    }

    CLI::App* sep = app.add_subcommand("sep", "separation scans");
    sep->require_subcommand(1);
    {
        SubCtx& s = add_sub(sep, "scan", "sep scan",
                            "minimum admissible polynomial value", do_sep_scan);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "evaluation point");
        bind_opt(s.sub, s.binds, "--n", cfg.n, "degree cap");
    }
    {
        SubCtx& s = add_sub(sep, "profile", "sep profile",
                            "minimum value profile over degrees", do_sep_profile);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "evaluation point");
        bind_opt(s.sub, s.binds, "--nmax", cfg.nmax, "largest degree cap");
    }

    CLI::App* trans = app.add_subcommand("trans", "transversality checks");
    trans->require_subcommand(1);
    {
        SubCtx& s = add_sub(trans, "measure", "trans measure",
                            "parameter measure of a small difference", do_trans_measure);
        bind_opt(s.sub, s.binds, "--i", cfg.wi, "first word");
        bind_opt(s.sub, s.binds, "--j", cfg.wj, "second word");
        bind_opt(s.sub, s.binds, "--rho", cfg.rho, "threshold");
        bind_opt(s.sub, s.binds, "--lo", cfg.lo, "interval start");
        bind_opt(s.sub, s.binds, "--hi", cfg.hi, "interval end");
    }
    {
        SubCtx& s = add_sub(trans, "doublezero", "trans doublezero",
                            "random series double-zero scan", do_trans_doublezero);
        bind_opt(s.sub, s.binds, "--lo", cfg.lo, "interval start");
        bind_opt(s.sub, s.binds, "--hi", cfg.hi, "interval end");
        bind_opt(s.sub, s.binds, "--degree", cfg.degree, "series degree");
        bind_opt(s.sub, s.binds, "--delta", cfg.delta, "derivative threshold");
        bind_opt(s.sub, s.binds, "--samples", cfg.samples, "series samples");
    }
    {
        SubCtx& s = add_sub(&app, "formulas", "formulas",
                            "dimension formulas and identities", do_formulas);
        bind_opt(s.sub, s.binds, "--lambda", cfg.lambda, "horizontal contraction");
        bind_opt(s.sub, s.binds, "--gamma", cfg.gamma, "target shrink rate");
        bind_opt(s.sub, s.binds, "--lambda0", cfg.lambda0, "interval start (constants)");
        bind_opt(s.sub, s.binds, "--lambda1", cfg.lambda1, "interval end (constants)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        json err;
        err["error"] = {{"type", "validation"}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return 2;
    }

    try {
        json file_cfg;
        if (opt_config->count() > 0) {
            file_cfg = json::parse(pu::io::read_text(config_path));
            // A manifest wraps the flat config; unwrap and keep its command.
            if (file_cfg.contains("config") && file_cfg["config"].is_object()) {
                json inner = file_cfg["config"];
                if (file_cfg.contains("command"))
                    inner["__command"] = file_cfg["command"];
                file_cfg = std::move(inner);
            }
        }

        SubCtx* active = nullptr;
        for (SubCtx& s : subs)
            if (s.sub->parsed()) active = &s;
        if (active == nullptr && !file_cfg.is_null()) {
            std::string cmd;
            if (file_cfg.contains("__command"))
                cmd = file_cfg["__command"].get<std::string>();
            else if (file_cfg.contains("command"))
                cmd = file_cfg["command"].get<std::string>();
            for (SubCtx& s : subs)
                if (s.name == cmd) active = &s;
            if (active == nullptr)
                throw std::invalid_argument("no subcommand given and none in config");
        }
        if (active == nullptr)
            throw std::invalid_argument("a subcommand is required (see --help)");

        if (!file_cfg.is_null()) {
            for (Binding& b : global_binds)
                if (b.opt->count() == 0 && file_cfg.contains(b.key))
                    b.apply(file_cfg[b.key]);
            for (Binding& b : active->binds)
                if (b.opt->count() == 0 && file_cfg.contains(b.key))
                    b.apply(file_cfg[b.key]);
        }

        const char* env_dir = std::getenv("OUTPUT_DIR");
        bool out_dir_flag = false;
        for (Binding& b : global_binds)
            if (b.key == "out_dir" && b.opt->count() > 0) out_dir_flag = true;
        if (env_dir != nullptr && !out_dir_flag) cfg.out_dir = env_dir;

#ifdef _OPENMP
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::string> outputs;
        json result = active->handler(cfg, outputs);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();

        const std::string base =
            cfg.out.empty()
                ? [&] {
                      std::string b = active->name;
                      std::replace(b.begin(), b.end(), ' ', '-');
                      return b;
                  }()
                : cfg.out;
        if (!result.is_null()) {
            const std::string rfile = base + ".json";
            bool already = false;
            for (const std::string& o : outputs)
                if (o == rfile) already = true;
            if (!already) {
                write_json_file(path_join(cfg.out_dir, rfile), result);
                outputs.push_back(rfile);
            }
        }

        json manifest;
        manifest["command"] = active->name;
        manifest["config"] = config_to_json(cfg);
        manifest["versions"] = {{"putarget", kVersion}, {"manifest_format", 1}};
        manifest["timings"] = {{"seconds", seconds}};
        manifest["outputs"] = outputs;
        write_json_file(path_join(cfg.out_dir, base + ".manifest.json"), manifest);

        std::cout << result.dump() << "\n";
        return 0;
    } catch (const pu::WorkBudgetError& e) {
        json err;
        err["error"] = {{"type", "work_budget"}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"type", "validation"}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return 2;
    }
}
