// Acceptance checks A1-A13. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "infkyle/infkyle.hpp"

using namespace infkyle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void note(Outcome& o, bool ok, const std::string& what) {
    if (!ok) o.pass = false;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += (ok ? "" : "!") + what;
}

StateGrid default_grid() { return build_state_grid(-5.0, 5.0, 401); }

PayoffFamily mean_shift(const StateGrid& g) {
    FamilyParams p;
    p.means = {1.0, -1.0};
    p.sds = {1.0};
    return make_payoff_family(FamilyKind::gaussian_mean_shift, p, g);
}

PayoffFamily variance_family(const StateGrid& g) {
    FamilyParams p;
    p.means = {2.0};
    p.sds = {1.65, 0.65};
    return make_payoff_family(FamilyKind::gaussian_variance, p, g);
}

PayoffFamily skew_family(const StateGrid& g) {
    FamilyParams p;
    p.shapes = {4.0, -4.0};
    return make_payoff_family(FamilyKind::skew_normal, p, g);
}

SolverConfig solver(std::size_t n, std::uint64_t seed) {
    SolverConfig c;
    c.n_samples = n;
    c.seed = seed;
    return c;
}

PathMcConfig paths(std::size_t n, std::uint64_t seed) {
    PathMcConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

Equilibrium solved(const PayoffFamily& f, const NoiseProfile& nz, const StateGrid& g, std::uint64_t seed) {
    return solve_equilibrium(build_canonical_kernel(f, nz, g), f, g, solver(200000, seed));
}

// Root of 1 - phi1 - a^2 phi2 by a dense Gauss-Hermite scan and bisection.
double quadrature_root() {
    const auto rule = quadrature::gauss_hermite(200);
    double lo = 0.0, flo = binary_phi_quadrature(0.0, rule);
    for (double a = 1e-3; a < 10.0; a += 1e-3) {
        const double fa = binary_phi_quadrature(a, rule);
        if ((flo > 0.0) != (fa > 0.0)) {
            double hi = a;
            for (int k = 0; k < 80; ++k) {
                const double mid = 0.5 * (lo + hi);
                if ((binary_phi_quadrature(mid, rule) > 0.0) == (flo > 0.0))
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        lo = a;
        flo = fa;
    }
    return NAN;
}

Outcome a1() {
    Outcome o;
    const auto m = posterior_moments(0.0, 2, 0, 200000, 1);
    const double p0 = phi(0.0, 2, m);
    note(o, p0 == 0.5, fmt("Phi(0) = %.17g", p0));
    const double p10 = binary_phi_quadrature(10.0, quadrature::gauss_hermite(200));
    note(o, p10 < 0.0, fmt("Phi(10) = %.6g", p10));
    return o;
}

Outcome a2() {
    Outcome o;
    const CrnNoise noise(2, 200000, 202);
    for (double a : {0.5, 1.0, 2.0}) {
        ScalarStats st;
        for (std::size_t k = 0; k < noise.size(); ++k) {
            const auto s = sample_posterior(a, 2, 0, Vector(noise.draw(k)));
            st.add(std::log(s.q[0] / s.q[1]));
        }
        const double n = static_cast<double>(st.n), var = 2.0 * a * a;
        const double se_var = st.variance() * std::sqrt(2.0 / (n - 1.0));
        const double dm = std::abs(st.mean() - a * a), dv = std::abs(st.variance() - var);
        note(o, dm <= 3.0 * st.std_err() && dv <= 3.0 * se_var,
             fmt("a=%.1f mean dev %.2f se, var dev %.2f se", a, dm / st.std_err(), dv / se_var));
    }
    return o;
}

Outcome a3() {
    Outcome o;
    const double oracle = quadrature_root();
    const auto eq = solve_alpha_star(make_canonical_kernel(Matrix::Identity(2, 2)), solver(1000000, 20240601));
    const double d = std::abs(eq.alpha_eff_star - oracle);
    note(o, d < 2e-3, fmt("MC root %.6f, quadrature root %.9f, |diff| %.2e", eq.alpha_eff_star, oracle, d));
    return o;
}

Outcome a4() {
    Outcome o;
    const auto k = kyle_single_asset(1.0, 1.0);
    note(o, k.beta == 1.0 && k.lambda == 0.5, fmt("(beta, lambda) = (%g, %g)", k.beta, k.lambda));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto r = kyle_single_asset(std::exp(u(rng)), std::exp(u(rng)));
        worst = std::max(worst, std::abs(r.beta * r.lambda - 0.5));
    }
    note(o, worst <= 1e-15, fmt("max |beta lambda - 1/2| = %.1e", worst));
    return o;
}

Outcome a5() {
    Outcome o;
    const auto g = default_grid();
    const Vector s = (1.0 + 0.25 * (g.nodes().array() * 0.7).sin()).matrix();
    const NoiseProfile nz(s);
    const auto f = mean_shift(g);
    CanonicalRoot root;
    root.I = 2;
    root.alpha_eff_star = 1.41;
    const auto kernel = build_canonical_kernel(f, nz, g);
    const auto eq = equilibrium_from_root(kernel, root);
    const RowMatrix belief = equilibrium_demand(eq, kernel, f, g);
    std::vector<Vector> drifts = {belief.row(0).transpose(), belief.row(1).transpose(),
                                  (0.8 * (-0.5 * g.nodes().array().square()).exp() * g.nodes().array().cos()).matrix()};
    for (std::size_t d = 0; d < drifts.size(); ++d) {
        std::vector<ScalarStats> st(2);
        for (std::uint64_t k = 0; k < 10000; ++k) {
            const Vector v = pi_mm(simulate_order_flow(drifts[d], nz, g, substream_seed(55 + d, k)), belief, nz, g);
            for (int i = 0; i < 2; ++i) st[i].add(v[i]);
        }
        const Vector target = pi_insider(drifts[d], belief, nz, g);
        double worst = 0.0;
        for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(st[i].mean() - target[i]) / st[i].std_err());
        note(o, worst <= 3.0, fmt("drift %zu max dev %.2f se", d, worst));
    }
    return o;
}

Outcome a6() {
    Outcome o;
    const auto g = default_grid();
    const Vector s = (1.0 + 0.2 * g.nodes().array().cos()).matrix();
    const NoiseProfile nz(s);
    const auto f = mean_shift(g);
    const auto kernel = build_canonical_kernel(f, nz, g);
    CanonicalRoot root;
    root.I = 2;
    root.alpha_eff_star = 1.41;
    const auto eq = equilibrium_from_root(kernel, root);
    const RowMatrix W = equilibrium_demand(eq, kernel, f, g);
    const BeliefModel model(W, nz, g);
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const int t = static_cast<int>(k % 2);
        const Vector xi = path_noise(g, substream_seed(66, k));
        const auto post = model.posterior(order_flow_from_noise(W.row(t).transpose(), nz, g, xi));
        const auto can = sample_posterior(root.alpha_eff_star, 2, t, whitened_noise(xi, W, nz, g, root.alpha_eff_star));
        worst = std::max(worst, (post.pi1 - can.q).cwiseAbs().maxCoeff());
    }
    note(o, worst <= 1e-8, fmt("max |pathwise - canonical| = %.2e over 100 paths", worst));
    return o;
}

Outcome a7() {
    Outcome o;
    const auto g = default_grid();
    const auto nz = NoiseProfile::constant(g, 1.0);
    const auto f = mean_shift(g);
    const auto eq = solved(f, nz, g, 77);
    const BeliefModel model(eq.demand, nz, g);

    std::mt19937_64 rng(707);
    std::normal_distribution<double> z;
    const auto dict = legendre_dictionary(4, g);
    const Vector bell = (-0.125 * g.nodes().array().square()).exp().matrix();
    auto random_profile = [&] {
        Vector v = z(rng) * f.row(0) + z(rng) * f.row(1);
        for (const auto& p : dict) v += 0.05 * z(rng) * p.cwiseProduct(bell);
        return v;
    };
    double worst_ratio = 0.0, worst_abs = 0.0;
    bool closure = true;
    for (int t = 0; t < 5; ++t) {
        const Vector W = random_profile(), v = random_profile();
        const int s = static_cast<int>(rng() % 2);
        const auto r = foc_terms(W, model, s, v, f, nz, g, paths(4000, 700 + t));
        closure = closure && std::abs(r.residual) <= 3.0 * r.std_err;
        worst_ratio = std::max(worst_ratio, std::abs(r.residual) / r.std_err);
        worst_abs = std::max(worst_abs, std::abs(r.residual));
    }
    note(o, closure, fmt("closure max |residual| %.2e (%.2e se) on 5 random pairs", worst_abs, worst_ratio));

    const Vector mbar = prior_mixture(f);
    double worst_fd = 0.0, worst_fd_strict = 0.0;
    bool stationary = true;
    for (int t = 0; t < 2; ++t)
        for (int k = 0; k < 2; ++k) {
            const auto r = foc_terms(eq.demand.row(t).transpose(), model, t, f.row(k) - mbar, f, nz, g,
                                     paths(20000, 710 + 2 * t + k));
            stationary = stationary && std::abs(r.fd_total) <= 3.0 * r.std_err;
            worst_fd = std::max(worst_fd, std::abs(r.fd_total) / r.std_err);
            worst_fd_strict = std::max(worst_fd_strict, std::abs(r.fd_total) / r.fd_std_err);
        }
    note(o, stationary,
         fmt("stationarity max |fd_total| %.2f se (%.2f fd-only se) at alpha_eff* %.5f", worst_fd, worst_fd_strict,
             eq.alpha_eff_star));
    return o;
}

Outcome a8() {
    Outcome o;
    const auto g = default_grid();
    const auto nz = NoiseProfile::constant(g, 1.0);
    ImpactConfig ic;
    ic.mc = paths(10000, 808);

    // (ii) W*(y, .) equal across signals: y = 0 under the symmetric mean shift.
    {
        const auto f = mean_shift(g);
        const auto eq = solved(f, nz, g, 81);
        const int y = g.nearest_index(0.0);
        const auto xs = impact_subgrid(g, 11);
        const auto k = impact_kernel(xs, {y}, eq, f, nz, g, ic);
        double worst = 0.0;
        bool ok = true;
        for (const auto& row : k) {
            ok = ok && std::abs(row[0].lambda) <= 3.0 * row[0].std_err + 1e-15;
            worst = std::max(worst, std::abs(row[0].lambda));
        }
        note(o, ok, fmt("zero: max |Lambda(x, 0)| = %.1e over 11 x", worst));
    }
    // (i) Disjoint signal supports: bumps of different signals.
    {
        const auto f = disjoint_bump_family(3, g);
        const auto eq = solved(f, nz, g, 82);
        auto peak = [&](int u) {
            Eigen::Index j;
            f.eta.row(u).maxCoeff(&j);
            return static_cast<int>(j);
        };
        const auto e = cross_price_impact(peak(0), peak(1), eq, f, nz, g, ic);
        note(o, e.lambda + 3.0 * e.std_err < 0.0, fmt("disjoint: Lambda = %.4g, se %.2g", e.lambda, e.std_err));
    }
    // (iii) W*(y, .) an increasing affine image of eta(x, .): y = x.
    {
        const auto f = variance_family(g);
        const auto eq = solved(f, nz, g, 83);
        const int x = g.nearest_index(2.0);
        const auto e = cross_price_impact(x, x, eq, f, nz, g, ic);
        note(o, e.lambda >= -3.0 * e.std_err && e.min_path_value >= 0.0,
             fmt("aligned: Lambda = %.4g, se %.2g, min per-path %.2g", e.lambda, e.std_err, e.min_path_value));
    }
    return o;
}

Outcome a9() {
    Outcome o;
    const auto g = default_grid();
    const auto nz = NoiseProfile::constant(g, 1.0);
    const auto sw = efficiency_sweep({2, 4, 6, 8}, g, nz, solver(200000, 909));
    std::string ies;
    for (const auto& r : sw.rows) ies += fmt("%s%d:%.4f", ies.empty() ? "" : " ", r.I, r.ie);
    bool dec = true;
    for (std::size_t k = 0; k + 1 < sw.rows.size(); ++k) {
        const double se = std::hypot(sw.rows[k].std_err, sw.rows[k + 1].std_err);
        dec = dec && -sw.first_diff[k] > 3.0 * se;
    }
    note(o, dec, "IE " + ies + " strictly decreasing");
    bool base = true;
    for (int I : {2, 4, 6, 8}) {
        EfficiencyConfig ec;
        ec.n_samples = 20000;
        ec.seed = 9;
        const auto r = information_efficiency(I, 0.0, ec);
        base = base && std::abs(r.ie - 1.0 / I) <= 3.0 * r.std_err + 1e-12;
    }
    note(o, base, "IE(alpha_eff = 0) = 1/I");
    std::string conv;
    for (double d : sw.second_diff) conv += fmt(" %.4f", d);
    o.detail += "; second differences" + conv;
    return o;
}

Outcome a10() {
    Outcome o;
    const auto g = default_grid();
    const auto cfg = solver(200000, 1010);
    const auto one = NoiseProfile::constant(g, 1.0), two = NoiseProfile::constant(g, 2.0);
    const auto r = invariance_experiment(mean_shift(g), one, variance_family(g), one, g, cfg);
    note(o, r.alpha_eff_gap < 2e-3 && r.ie_gap <= 3.0 * std::hypot(r.a.ie_std_err, r.b.ie_std_err),
         fmt("families: |d alpha_eff| %.1e, |d IE| %.1e", r.alpha_eff_gap, r.ie_gap));
    const auto s = invariance_experiment(mean_shift(g), two, mean_shift(g), one, g, cfg);
    const double ratio = s.a.alpha_star / s.b.alpha_star;
    note(o, s.alpha_eff_gap < 2e-3 && s.ie_gap <= 3.0 * std::hypot(s.a.ie_std_err, s.b.ie_std_err) &&
                std::abs(ratio - 2.0) < 1e-9,
         fmt("sigma doubled: alpha* ratio %.12f, |d alpha_eff| %.1e", ratio, s.alpha_eff_gap));
    return o;
}

double roundtrip_error(const Vector& W, const StateGrid& g, double k0) {
    return (bl_reconstruct(bl_decompose(W, k0, g), g) - W).cwiseAbs().maxCoeff();
}

Outcome a11() {
    Outcome o;
    const auto g = default_grid();
    const Vector sq = g.nodes().array().square().matrix();
    const double e_sq = roundtrip_error(sq, g, 0.3);
    note(o, e_sq < 1e-3 * sq.cwiseAbs().maxCoeff(), fmt("x^2 error %.1e", e_sq));

    // The nodal round trip is exact for any W (summation by parts), so the
    // discretization order shows up in the strike density against W''.
    const double a = 1.3;
    auto density_error = [&](int n) {
        const auto gr = build_state_grid(-5.0, 5.0, n);
        const auto x = gr.nodes().array();
        const Vector W = ((-0.5 * x.square()).exp() * (a * x).sin()).matrix();
        const Vector exact =
            ((-0.5 * x.square()).exp() * ((x.square() - 1.0 - a * a) * (a * x).sin() - 2.0 * a * x * (a * x).cos()))
                .matrix();
        const auto s = bl_decompose(W, 0.5, gr);
        Vector d(n);
        d.head(s.k0_index + 1) = s.put_density;
        d.tail(n - s.k0_index) = s.call_density;
        return (d - exact).cwiseAbs().maxCoeff();
    };
    const double e1 = density_error(201), e2 = density_error(401);
    note(o, e1 / e2 >= 3.2 && e1 / e2 <= 4.8, fmt("strike density error %.2e -> %.2e, factor %.3f", e1, e2, e1 / e2));

    const auto f = variance_family(g);
    const auto eq = solved(f, NoiseProfile::constant(g, 1.0), g, 111);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        const Vector w = eq.demand.row(i).transpose();
        worst = std::max(worst, roundtrip_error(w, g, 2.0) / w.cwiseAbs().maxCoeff());
    }
    note(o, worst < 1e-2, fmt("equilibrium demand relative error %.1e", worst));
    return o;
}

Outcome a12() {
    Outcome o;
    const auto g = default_grid();
    const auto nz = NoiseProfile::constant(g, 1.0);
    struct Case {
        PayoffFamily f;
        const char* want[2];
    };
    const Case cases[] = {{mean_shift(g), {"bullish", "bearish"}},
                          {variance_family(g), {"long-vol", "short-vol"}},
                          {skew_family(g), {"right-skew", "left-skew"}}};
    std::uint64_t seed = 120;
    for (const auto& c : cases) {
        const auto eq = solved(c.f, nz, g, ++seed);
        const double mu = prior_mean(c.f, g), sbar = prior_sd(c.f, g);
        for (int i = 0; i < 2; ++i) {
            const auto sig = demand_signature(eq.demand.row(i).transpose(), mu, sbar, g);
            note(o, sig.label == c.want[i], std::string(to_string(c.f.kind)) + " s" + std::to_string(i + 1) + " " + sig.label);
        }
    }
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome a13() {
    Outcome o;
    const auto cfg = load_config(std::string(INFKYLE_SOURCE_DIR) + "/configs/smoke.cfg");
    const auto root = fs::temp_directory_path() / "infkyle_acceptance_a13";
    fs::remove_all(root);
    int compared = 0;
    for (const auto& sub : subcommands()) {
        auto ca = cfg, cb = cfg;
        ca.output_dir = (root / "a").string();
        cb.output_dir = (root / "b").string();
        const auto ra = run(sub, ca);
        const auto rb = run(sub, cb);
        bool same = ra.files == rb.files;
        for (const auto& f : ra.files) {
            if (f == "manifest.csv") continue;
            same = same && slurp(root / "a" / f) == slurp(root / "b" / f);
            ++compared;
        }
        if (!same) note(o, false, sub + " differs");
    }
    note(o, o.pass, fmt("%d CSVs bitwise identical across %zu subcommands", compared, subcommands().size()));
    fs::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},   {"A5", a5},   {"A6", a6},  {"A7", a7},
        {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12}, {"A13", a13}};
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [id, fn] : checks) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!out.pass) ++failed;
        std::printf("%s %s (%.1f s) %s\n", id.c_str(), out.pass ? "PASS" : "FAIL", dt, out.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
