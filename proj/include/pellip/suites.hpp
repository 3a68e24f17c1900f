#pragma once

#include <future>

#include "flows.hpp"
#include "mollify.hpp"
#include "scenario.hpp"

namespace pellip {

/// JSON number, or "inf" / "-inf" / "nan" for values JSON cannot hold.
inline json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline json cvec_json(const CVec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json::array({num(v(i).real()), num(v(i).imag())}));
    return a;
}

/// One named verdict inside a suite.
struct Check {
    std::string name;
    bool passed = true;
    bool asserted = true;  // informational checks never fail the suite
    json detail = json::object();
};

struct SuiteResult {
    std::string name;
    std::vector<Check> checks;
    json data = json::object();
    std::vector<std::pair<std::string, std::string>> series;  // (file name, csv text)
    std::string error;

    bool passed() const {
        if (!error.empty()) return false;
        for (const auto& c : checks)
            if (c.asserted && !c.passed) return false;
        return true;
    }

    Check& add(std::string n, bool ok, bool asserted = true) {
        checks.push_back({std::move(n), ok, asserted, json::object()});
        return checks.back();
    }

    json to_json() const {
        json j;
        j["passed"] = passed();
        if (!error.empty()) j["error"] = error;
        json cs = json::array();
        for (const auto& c : checks) {
            json e;
            e["name"] = c.name;
            e["passed"] = c.passed;
            e["asserted"] = c.asserted;
            e["detail"] = c.detail;
            cs.push_back(e);
        }
        j["checks"] = cs;
        j["data"] = data;
        json files = json::array();
        for (const auto& s : series) files.push_back("series/" + s.first);
        j["series"] = files;
        return j;
    }
};

/// Shared quantities computed once per scenario before the suites run.
struct RunContext {
    const Scenario* sc = nullptr;
    SubcriticalCertificate cert;
    std::string cert_error;
    double alpha = 0;           // perturbation strength used by the suites
    bool alpha_from_certificate = true;
    double p_high = 2;          // max(p, q), the Bellman exponent
};

inline RunContext make_context(const Scenario& sc) {
    RunContext c;
    c.sc = &sc;
    c.p_high = std::max(sc.p, conjugate(sc.p));
    try {
        c.cert = solve_subcritical(sc.grid, sc.V, sc.bc, sc.opt.betas);
    } catch (const std::exception& e) {
        c.cert_error = e.what();
        c.cert.alpha_star = inf;
    }
    if (sc.alpha) {
        c.alpha = *sc.alpha;
        c.alpha_from_certificate = false;
    } else {
        c.alpha = c.cert.alpha_star;
    }
    return c;
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

inline std::string csv_line(std::initializer_list<double> v) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (double x : v) {
        if (!first) os << ",";
        os << x;
        first = false;
    }
    os << "\n";
    return os.str();
}

inline SuiteResult suite_ellipticity(const RunContext& ctx) {
    const Scenario& sc = *ctx.sc;
    SuiteResult r;
    r.name = "ellipticity";
    const double p = sc.p, q = conjugate(p);
    const auto rep = delta_p(sc.A, p, true, sc.seed);
    r.data["p"] = p;
    r.data["delta_p"] = num(rep.delta_p);
    r.data["delta_p_search"] = num(rep.search_value);
    r.data["verdict"] = to_string(rep.verdict);
    r.data["witness"] = {{"cell", rep.witness_cell}, {"xi", cvec_json(rep.witness_xi)}};
    r.data["lambda"] = sc.A.lambda();
    r.data["Lambda"] = sc.A.Lambda();
    auto& c1 = r.add("search_agrees_with_exact", std::abs(rep.search_value - rep.delta_p) <= 1e-6);
    c1.detail["difference"] = num(rep.search_value - rep.delta_p);
    const double dq = delta_p(sc.A, q).delta_p;
    r.add("conjugate_symmetry", std::abs(dq - rep.delta_p) <= 1e-10).detail["delta_q"] = num(dq);
    MatrixField adj = sc.A.adjoint();
    const double da = delta_p(adj, p).delta_p;
    r.add("adjoint_invariance", std::abs(da - rep.delta_p) <= 1e-10).detail["delta_p_adjoint"] = num(da);

    r.data["alpha"] = num(ctx.alpha);
    r.data["alpha_source"] = ctx.alpha_from_certificate ? "subcritical certificate" : "scenario";
    if (!std::isfinite(ctx.alpha)) {
        r.add("alpha_finite", false).detail["reason"] =
            ctx.cert_error.empty() ? "no finite subcritical constant for this potential and boundary" : ctx.cert_error;
        return r;
    }
    const auto pert = is_perturbed_p_elliptic(sc.A, ctx.alpha, p);
    r.data["perturbed_delta_p"] = num(pert.delta_p);
    r.data["perturbed_verdict"] = to_string(pert.verdict);
    auto& cp = r.add("perturbed_p_elliptic", pert.verdict == Verdict::p_elliptic);
    cp.detail["value"] = num(pert.delta_p);
    cp.detail["witness_xi"] = cvec_json(pert.witness_xi);
    if (ctx.alpha < 1) {
        const auto w = exponent_window(ctx.alpha);
        r.data["window"] = {{"p_minus", num(w.p_minus)}, {"p_plus", w.plus_unbounded ? json("inf") : num(w.p_plus)}};
    }
    const double lam_shift = sc.A.lambda() - ctx.alpha;
    if (lam_shift > 0) {
        const DiscreteOperator op = assemble(sc.grid, sc.A, sc.V, sc.bc);
        const auto nr = numerical_range_angle(op, ctx.alpha);
        auto& c = r.add("numerical_range_within_sector", nr.within);
        c.detail["angle"] = num(nr.angle);
        c.detail["sector_angle"] = num(nr.bound);
    }
    if (pert.verdict == Verdict::p_elliptic) {
        r.data["rotation_margin"] = num(rotation_margin(sc.A, ctx.alpha, p));
        r.data["open_endedness"] = num(open_endedness(sc.A, ctx.alpha, std::max(p, q)));
    }
    return r;
}

inline SuiteResult suite_bellman(const RunContext& ctx) {
    const Scenario& sc = *ctx.sc;
    SuiteResult r;
    r.name = "bellman";
    const BellmanParams P(ctx.p_high, sc.delta);
    r.data["p"] = P.p;
    r.data["q"] = P.q;
    r.data["delta"] = P.delta;
    const auto fo = first_order_check(P, sc.opt.bellman_samples, sc.seed);
    auto& c1 = r.add("first_order_identity", fo.max_identity_error <= 1e-12);
    c1.detail["max_relative_error"] = num(fo.max_identity_error);
    c1.detail["samples"] = fo.samples;
    auto& c2 = r.add("e_derivative_bounds", fo.e_ratio_violations == 0);
    c2.detail["min_ratio"] = num(fo.min_e_ratio);
    c2.detail["max_ratio"] = num(fo.max_e_ratio);
    r.add("growth_bounds", fo.growth_violations == 0).detail["violations"] = fo.growth_violations;
    const auto G = growth_constants(P);
    r.data["growth_constants"] = {{"value", G.value}, {"grad_z", G.grad_z}, {"grad_e", G.grad_e},
                                  {"lower_z", G.lower_z}, {"lower_e", G.lower_e}};
    if (!std::isfinite(ctx.alpha)) {
        r.add("alpha_finite", false).detail["reason"] = "no finite perturbation strength";
        return r;
    }
    const double mu = sc.mu.value_or(ctx.alpha), sigma = sc.sigma.value_or(ctx.alpha);
    const auto cert = certify_convexity(P, sc.A, sc.A.adjoint(), mu, sigma, sc.opt.bellman_samples, true, sc.seed);
    auto& c3 = r.add("convexity_certificate", cert.passed());
    c3.detail["mu"] = mu;
    c3.detail["sigma"] = sigma;
    c3.detail["samples"] = cert.samples;
    c3.detail["negative_count"] = cert.negative_count;
    c3.detail["worst_slack"] = num(cert.worst_slack);
    c3.detail["worst_relative_slack"] = num(cert.worst_relative_slack);
    c3.detail["Ctilde"] = num(cert.Ctilde);
    c3.detail["witness"] = {{"zeta", {num(cert.witness.z.real()), num(cert.witness.z.imag())}},
                            {"eta", {num(cert.witness.e.real()), num(cert.witness.e.imag())}},
                            {"X", cvec_json(cert.witness.X)},
                            {"Y", cvec_json(cert.witness.Y)},
                            {"cell", cert.witness.cell}};
    return r;
}

inline SuiteResult suite_subcritical(const RunContext& ctx) {
    const Scenario& sc = *ctx.sc;
    SuiteResult r;
    r.name = "subcritical";
    if (!ctx.cert_error.empty()) {
        r.error = ctx.cert_error;
        return r;
    }
    const auto& cert = ctx.cert;
    json curve = json::array();
    std::string csv = "beta,alpha,residual\n";
    for (std::size_t i = 0; i < cert.alpha_curve.size(); ++i) {
        curve.push_back({num(cert.alpha_curve[i].first), num(cert.alpha_curve[i].second)});
        csv += csv_line({cert.alpha_curve[i].first, cert.alpha_curve[i].second, cert.residuals[i]});
    }
    r.series.emplace_back("alpha_curve.csv", csv);
    r.data["alpha_curve"] = curve;
    r.data["alpha_star"] = num(cert.alpha_star);
    r.data["deflated_constants"] = cert.deflated_constants;
    r.data["strongly_subcritical"] = cert.alpha_star < 1;
    // Curve ordered by beta.
    auto sorted = cert.alpha_curve;
    std::sort(sorted.begin(), sorted.end());
    bool mono = true;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].second > sorted[i - 1].second * (1 + 1e-9) + 1e-12) mono = false;
    r.add("alpha_nonincreasing_in_beta", mono);
    double res = 0;
    for (double x : cert.residuals) res = std::max(res, x);
    r.add("solver_residual", res <= 1e-8).detail["max_residual"] = num(res);
    const bool zero_minus = !sc.V.has_negative_part();
    bool all_zero = true;
    for (const auto& [b, a] : cert.alpha_curve) all_zero = all_zero && a == 0;
    r.add("zero_iff_no_negative_part", zero_minus ? all_zero : true, zero_minus);
    if (!zero_minus && std::isfinite(cert.alpha_star)) {
        const double M = sc.V.max_minus();
        const auto tr = solve_subcritical(sc.grid, truncate(sc.V, 0.5 * M), sc.bc, sc.opt.betas);
        bool ok = true;
        for (std::size_t i = 0; i < tr.alpha_curve.size(); ++i)
            ok = ok && tr.alpha_curve[i].second <= cert.alpha_curve[i].second * (1 + 1e-9) + 1e-12;
        r.add("truncation_monotone", ok).detail["alpha_star_truncated_half"] = num(tr.alpha_star);
    }
    if (sc.grid.dim == 2 && sc.V.has_negative_part()) {
        VolumeModel vm;
        vm.dim = 3;
        const auto vn = vol_norm(sc.grid, sc.V, 3.5, 2.5, vm);
        r.data["vol_norm_polynomial_d3"] = {{"value", num(vn.value)}, {"finite", vn.finite}};
    }
    return r;
}

inline bool is_identity_field(const MatrixField& A) {
    for (const auto& m : A.values)
        if ((m - CMat::Identity(m.rows(), m.cols())).norm() != 0) return false;
    return true;
}

/// True when every off-diagonal entry of K is real and nonpositive (positivity preserving).
inline bool m_matrix_structure(const SpC& K) {
    for (int k = 0; k < K.outerSize(); ++k)
        for (SpC::InnerIterator it(K, k); it; ++it)
            if (it.row() != it.col() && (it.value().imag() != 0 || it.value().real() > 0)) return false;
    return true;
}

inline SuiteResult suite_semigroup(const RunContext& ctx) {
    const Scenario& sc = *ctx.sc;
    SuiteResult r;
    r.name = "semigroup";
    const DiscreteOperator op = assemble(sc.grid, sc.A, sc.V, sc.bc);
    const double margin = accretivity_margin(op);
    const bool accretive = is_accretive(op);
    r.data["accretivity_margin"] = num(margin);
    r.data["accretive"] = accretive;
    const Propagator P(op);
    r.data["method"] = to_string(P.method());
    Rng g = make_rng(sc.seed, 101);
    std::vector<CVec> fs;
    for (std::size_t i = 0; i < sc.opt.contractivity_samples; ++i) fs.push_back(random_cvec(g, op.size()));
    const CVec& f0 = fs.front();
    const double t1 = sc.opt.t_grid[sc.opt.t_grid.size() / 3], t2 = sc.opt.t_grid[sc.opt.t_grid.size() / 2];
    const double law = (P.propagate(P.propagate(f0, t1), t2) - P.propagate(f0, t1 + t2)).norm() / f0.norm();
    r.add("semigroup_law", law <= 1e-8).detail["relative_error"] = num(law);
    if (P.method() != Propagator::Method::crank_nicolson) {
        const double def = P.defect(f0, t2);
        r.add("generator_defect", def <= 1e-6).detail["relative_defect"] = num(def);
    }
    if (accretive) {
        const auto cc = l2_cone_check(P, fs, {sc.opt.t_grid.front(), t2, sc.opt.t_grid.back()});
        auto& c = r.add("l2_contraction_in_cone", cc.contractive);
        c.detail["max_ratio"] = num(cc.max_ratio);
        c.detail["cone_half_angle"] = num(cc.half_angle);
    }
    // l^p sweep: asserted inside the window for A = I with positivity-preserving stiffness.
    const double p = sc.p, q = conjugate(p);
    std::vector<double> plist{2.0, p, q};
    std::sort(plist.begin(), plist.end());
    plist.erase(std::unique(plist.begin(), plist.end()), plist.end());
    const auto rep = contractivity_sweep(P, plist, fs, sc.opt.t_grid);
    const bool theory = is_identity_field(sc.A) && m_matrix_structure(op.K) && std::isfinite(ctx.alpha) && ctx.alpha < 1;
    std::string csv = "p,max_ratio,contractive\n";
    for (const auto& e : rep.entries) {
        const bool inside = theory && e.p >= exponent_window(ctx.alpha).p_minus &&
                            (exponent_window(ctx.alpha).plus_unbounded || e.p <= exponent_window(ctx.alpha).p_plus);
        auto& c = r.add("lp_contractive_p=" + fmt(e.p), e.contractive, inside || (e.p == 2.0 && accretive));
        c.detail["max_ratio"] = num(e.max_ratio);
        c.detail["worst_t"] = num(e.worst_t);
        csv += csv_line({e.p, e.max_ratio, e.contractive ? 1.0 : 0.0});
    }
    r.series.emplace_back("contractivity.csv", csv);
    if (m_matrix_structure(op.K)) {
        RVec fpos(op.size());
        for (Eigen::Index i = 0; i < fpos.size(); ++i) fpos(i) = std::abs(f0(i));
        double worst = 0;
        for (double t : sc.opt.t_grid) worst = std::min(worst, positivity_defect(P, fpos, t));
        r.add("positivity_preserving", worst >= -1e-10).detail["min_relative_value"] = num(worst);
    }
    // Off-diagonal bound between the first and last quarter of the x range (report only).
    std::vector<int> E, F;
    const double x0 = sc.grid.lo[0], L = sc.grid.hi[0] - sc.grid.lo[0];
    for (int k = 0; k < sc.grid.nodes(); ++k) {
        if (sc.bc.dirichlet[k]) continue;
        const double x = sc.grid.coord(k)[0];
        if (x <= x0 + 0.25 * L) E.push_back(k);
        if (x >= x0 + 0.75 * L) F.push_back(k);
    }
    if (!E.empty() && !F.empty() && accretive) {
        const auto od = offdiagonal_check(P, E, F, {sc.opt.t_grid.front(), t2});
        json ent = json::array();
        for (const auto& e : od.entries)
            ent.push_back({{"z", num(e.z.real())}, {"ratio", num(e.ratio)}, {"bound", num(e.bound)}, {"pass", e.pass}});
        r.data["offdiagonal"] = {{"distance", od.distance}, {"C", num(od.C)}, {"garding", num(od.garding)}, {"entries", ent}};
    }
    if (sc.V.has_negative_part() && accretive) {
        const double M = sc.V.max_minus();
        const cplx z = t2;
        const auto tc = truncation_convergence(sc.grid, sc.A, sc.V, sc.bc, f0, z, {M / 8, M / 4, M / 2, M});
        auto& c = r.add("truncation_exact_beyond_max", tc.exact_beyond_max);
        json ent = json::array();
        for (const auto& e : tc.entries)
            ent.push_back({{"n", e.n}, {"grad", num(e.grad_discrepancy)}, {"potential", num(e.potential_discrepancy)}});
        c.detail["entries"] = ent;
        r.add("truncation_nonincreasing", tc.nonincreasing, false);
    }
    std::vector<cplx> times{0.0};
    for (double t : sc.opt.t_grid) times.push_back(t);
    const auto tr = trajectory(P, f0, times, plist);
    std::ostringstream os;
    os.precision(17);
    os << "t";
    for (const auto& [rr, v] : tr.norms) os << ",norm_" << rr;
    os << "\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        os << times[i].real();
        for (const auto& [rr, v] : tr.norms) os << "," << v[i];
        os << "\n";
    }
    r.series.emplace_back("trajectory.csv", os.str());
    return r;
}

inline SuiteResult suite_bilinear(const RunContext& ctx) {
    const Scenario& sc = *ctx.sc;
    SuiteResult r;
    r.name = "bilinear";
    const DiscreteOperator LA = assemble(sc.grid, sc.A, sc.V, sc.bc);
    const DiscreteOperator LB = assemble(sc.grid, sc.A.adjoint(), sc.V, sc.bc);
    if (!is_accretive(LA)) {
        r.add("accretive", false).detail["reason"] = "form is not accretive; the flow is undefined";
        return r;
    }
    Rng g = make_rng(sc.seed, 202);
    const std::size_t n = sc.opt.bilinear_pairs;
    CMat F(LA.size(), static_cast<Eigen::Index>(n)), G(LA.size(), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        F.col(j) = smooth_random(LA, g);
        G.col(j) = smooth_random(LA, g);
    }
    // Heat flow on the first pair, Bellman exponent on the u side.
    std::vector<double> t{0.0};
    for (double x : sc.opt.t_grid) t.push_back(x);
    const BellmanParams BP(ctx.p_high, sc.delta);
    const auto fr = heat_flow(BP, LA, LB, F.col(0), G.col(0), t);
    auto& cd = r.add("energy_decomposition", fr.decomposition_ok);
    cd.detail["max_error_over_tolerance"] = num(fr.max_decomposition_error);
    bool certified = std::isfinite(ctx.alpha);
    if (certified) {
        const double mu = sc.mu.value_or(ctx.alpha), sigma = sc.sigma.value_or(ctx.alpha);
        certified = certify_convexity(BP, sc.A, sc.A.adjoint(), mu, sigma, std::min<std::size_t>(sc.opt.bellman_samples, 5000),
                                      false, sc.seed)
                        .passed();
    }
    auto& cm = r.add("energy_nonincreasing", fr.monotone, certified);
    cm.detail["worst_relative_increase"] = num(fr.worst_increase);
    cm.detail["certificate_passed"] = certified;
    std::string csv = "t,E,dE,I1,I2,I3,I1_hessian\n";
    for (std::size_t k = 0; k < fr.t.size(); ++k)
        csv += csv_line({fr.t[k], fr.E[k], fr.dE[k], fr.I1[k], fr.I2[k], fr.I3[k], fr.I1_hessian[k]});
    r.series.emplace_back("heat_flow.csv", csv);

    double T = 0;
    try {
        T = default_horizon(LA, LB);
    } catch (const std::invalid_argument&) {
        T = 50.0;
        r.data["horizon_note"] = "operators not coercive; T_max = 50";
    }
    r.data["T_max"] = num(T);
    const Propagator PA(LA), PB(LB);
    const auto real = bilinear_batch(PA, PB, F, G, 0.0, 0.0, T, sc.p);
    const auto scaled = bilinear_batch(PA, PB, 3.0 * F, G / 3.0, 0.0, 0.0, T, sc.p);
    double sup = 0, inv = 0;
    bool tails = true;
    std::string bcsv = "pair,value,ratio,ratio_scaled\n";
    for (std::size_t j = 0; j < n; ++j) {
        sup = std::max(sup, real[j].ratio);
        inv = std::max(inv, std::abs(scaled[j].ratio - real[j].ratio) / std::max(1e-300, real[j].ratio));
        tails = tails && real[j].tail_ok;
        bcsv += csv_line({static_cast<double>(j), real[j].value, real[j].ratio, scaled[j].ratio});
    }
    r.series.emplace_back("bilinear.csv", bcsv);
    r.data["sup_ratio"] = num(sup);
    r.add("scaling_invariance", inv <= 1e-10).detail["max_relative_change"] = num(inv);
    r.add("integrable_tail", tails);
    const double theta = 0.5 * PA.cone_half_angle();
    const double theta_b = std::min(theta, 0.5 * PB.cone_half_angle());
    const auto cx = bilinear_batch(PA, PB, F, G, theta_b, -theta_b, T, sc.p);
    double csup = 0;
    for (const auto& x : cx) csup = std::max(csup, x.ratio);
    r.data["complex_ray"] = {{"theta", num(theta_b)}, {"sup_ratio", num(csup)}, {"ratio_to_real", num(csup / sup)}};
    return r;
}

inline SuiteResult run_suite(const std::string& name, const RunContext& ctx) {
    try {
        if (name == "ellipticity") return suite_ellipticity(ctx);
        if (name == "bellman") return suite_bellman(ctx);
        if (name == "subcritical") return suite_subcritical(ctx);
        if (name == "semigroup") return suite_semigroup(ctx);
        if (name == "bilinear") return suite_bilinear(ctx);
    } catch (const std::exception& e) {
        SuiteResult r;
        r.name = name;
        r.error = e.what();
        return r;
    }
    throw std::invalid_argument("unknown suite " + name);
}

struct RunOutcome {
    json report;
    bool passed = false;
    bool matches_expectation = false;
    std::vector<SuiteResult> suites;
};

inline RunOutcome run_scenario(const Scenario& sc, bool parallel = false) {
    const RunContext ctx = make_context(sc);
    RunOutcome out;
    if (parallel) {
        std::vector<std::future<SuiteResult>> fut;
        for (const auto& s : sc.suites) fut.push_back(std::async(std::launch::async, [&, s] { return run_suite(s, ctx); }));
        for (auto& f : fut) out.suites.push_back(f.get());
    } else {
        for (const auto& s : sc.suites) out.suites.push_back(run_suite(s, ctx));
    }
    out.passed = true;
    json suites = json::object();
    for (const auto& s : out.suites) {
        out.passed = out.passed && s.passed();
        suites[s.name] = s.to_json();
    }
    out.matches_expectation = out.passed == sc.expect_pass;
    json& r = out.report;
    r["name"] = sc.name;
    r["seed"] = sc.seed;
    r["expect"] = sc.expect_pass ? "pass" : "fail";
    r["passed"] = out.passed;
    r["matches_expectation"] = out.matches_expectation;
    r["scenario"] = sc.source;
    r["context"] = {{"alpha", num(ctx.alpha)},
                    {"alpha_source", ctx.alpha_from_certificate ? "subcritical certificate" : "scenario"},
                    {"certificate_error", ctx.cert_error}};
    r["suites"] = suites;
    return out;
}

/// Writes report.json, series/<suite>_<file>.csv and, when requested, suites/<suite>.json.
inline void write_outputs(const RunOutcome& o, const std::string& dir, bool per_suite_files) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "series");
    for (const auto& s : o.suites)
        for (const auto& [file, text] : s.series) {
            std::ofstream f(fs::path(dir) / "series" / (s.name + "_" + file));
            f << text;
        }
    if (per_suite_files) {
        fs::create_directories(fs::path(dir) / "suites");
        for (const auto& s : o.suites) {
            std::ofstream f(fs::path(dir) / "suites" / (s.name + ".json"));
            f << s.to_json().dump(2) << "\n";
        }
    }
    json rep = o.report;
    for (auto& s : rep["suites"].items()) {
        json files = json::array();
        for (const auto& x : s.value()["series"]) {
            const std::string name = x.get<std::string>().substr(7);
            files.push_back("series/" + s.key() + "_" + name);
        }
        s.value()["series"] = files;
    }
    std::ofstream f(fs::path(dir) / "report.json");
    f << rep.dump(2) << "\n";
}

}  // namespace pellip
