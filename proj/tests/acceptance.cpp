// Acceptance suite: one check per benchmark criterion, each self-contained.
// Run with --only N to execute a single criterion (ctest registers them
// individually); the process exits with the number of failed criteria.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ml2r/bench.hpp"

using namespace ml2r;

namespace {

int g_threads = 2;

struct Criterion {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) ok = false;
        detail += (cond ? "    ok   " : "    FAIL ") + what + "\n";
    }
};

void note(Criterion& c, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    c.detail += std::string("    .    ") + buf + "\n";
}

ExperimentConfig european_milstein() {
    ExperimentConfig c;  // defaults are the European call study, Milstein, M = 8
    c.threads = g_threads;
    return c;
}

ExperimentConfig lookback_milstein() {
    ExperimentConfig c;
    c.rate = 0.15;
    c.vol = 0.1;
    c.payoff_kind = PayoffKind::partial_lookback_call;
    c.reference_id = "partial_lookback_call";
    c.refinement = 8;
    c.threads = g_threads;
    return c;
}

const ResultRow& find_row(const std::vector<ResultRow>& rows, const std::string& est, int k) {
    for (const auto& r : rows)
        if (r.estimator == est && r.k == k) return r;
    throw std::runtime_error("row not found: " + est + " k=" + std::to_string(k));
}

// 1. Crude Monte Carlo reproduces the closed-form benchmark prices.
Criterion criterion1() {
    Criterion c;
    {
        const auto model = SdeModel::gbm(0.06, 0.4, 100.0, 1.0);
        const auto payoff = PayoffSpec::european(80.0, 0.06, 1.0);
        const auto r = run_crude_mc(model, payoff, SchemeKind::milstein, 1024, 1000000,
                                    {20260809, 0, g_threads});
        const double se = std::sqrt(r.levels[0].variance / 1e6);
        const double ref = reference_price("european_call").value;
        note(c, "european: estimate %.5f, reference %.4f, 3se %.5f", r.estimate, ref, 3 * se);
        c.expect(std::fabs(r.estimate - ref) <= 3.0 * se,
                 "european crude estimate within 3 SE of 29.4987");
    }
    {
        const auto model = SdeModel::gbm(0.15, 0.1, 100.0, 1.0);
        const auto payoff = PayoffSpec::partial_lookback(1.1, 0.15, 1.0);
        const auto r = run_crude_mc(model, payoff, SchemeKind::milstein, 1024, 1000000,
                                    {20260809, 0, g_threads});
        const double se = std::sqrt(r.levels[0].variance / 1e6);
        const double ref = reference_price("partial_lookback_call").value;
        note(c, "lookback: estimate %.5f, reference %.5f, 3se %.5f", r.estimate, ref, 3 * se);
        c.expect(std::fabs(r.estimate - ref) <= 3.0 * se,
                 "lookback crude estimate within 3 SE of 8.89343");
    }
    return c;
}

// 2. RMSE targets: rmse <= 2 eps for both estimators on the study grids.
Criterion criterion2() {
    Criterion c;
    {
        ExperimentConfig cfg = european_milstein();
        cfg.k_values = {3, 4, 5};
        cfg.reps_small_k = 50;
        const auto out = run_experiment(cfg);
        for (const auto& r : out.rows) {
            note(c, "european %s k=%d rmse %.4e vs 2eps %.4e", r.estimator.c_str(), r.k, r.rmse,
                 2 * r.eps);
            c.expect(r.rmse <= 2.0 * r.eps, "european " + r.estimator +
                                                " k=" + std::to_string(r.k) + " rmse <= 2 eps");
        }
        for (const char* est : {"ml2r", "aisml2r"}) {
            bool monotone = true;
            for (int k = 4; k <= 5; ++k)
                if (find_row(out.rows, est, k).rmse >
                    1.1 * find_row(out.rows, est, k - 1).rmse)
                    monotone = false;
            c.expect(monotone, std::string("european ") + est +
                                   " rmse decreases along the eps grid (within noise)");
        }
    }
    {
        ExperimentConfig cfg = lookback_milstein();
        cfg.k_values = {3, 4};
        cfg.reps_small_k = 50;
        const auto out = run_experiment(cfg);
        for (const auto& r : out.rows) {
            note(c, "lookback %s k=%d rmse %.4e vs 2eps %.4e", r.estimator.c_str(), r.k, r.rmse,
                 2 * r.eps);
            c.expect(r.rmse <= 2.0 * r.eps, "lookback " + r.estimator +
                                                " k=" + std::to_string(r.k) + " rmse <= 2 eps");
        }
    }
    return c;
}

// 3. Variance reduction at eps = 2^-5.
Criterion criterion3() {
    Criterion c;
    {
        ExperimentConfig cfg = european_milstein();
        cfg.k_values = {5};
        cfg.reps_small_k = 50;
        const auto out = run_experiment(cfg);
        const auto& ais = find_row(out.rows, "aisml2r", 5);
        const double ratio = ais.variance / find_row(out.rows, "ml2r", 5).variance;
        note(c, "european variance ratio aisml2r/ml2r = %.3f", ratio);
        c.expect(ratio <= 0.5, "european adaptive variance <= 1/2 of fixed-measure variance");
        const double bias_se = std::sqrt(ais.variance / 50.0);
        note(c, "european adaptive bias %.4e vs 3 cross-replication se %.4e", ais.bias,
             3 * bias_se);
        c.expect(ais.bias <= 3.0 * bias_se,
                 "european adaptive bias within 3 SE of zero at eps = 2^-5");
    }
    {
        ExperimentConfig cfg = lookback_milstein();
        cfg.k_values = {5};
        cfg.reps_small_k = 50;
        const auto out = run_experiment(cfg);
        const double ratio = find_row(out.rows, "aisml2r", 5).variance /
                             find_row(out.rows, "ml2r", 5).variance;
        note(c, "lookback variance ratio aisml2r/ml2r = %.3f", ratio);
        c.expect(ratio <= 1.2, "lookback adaptive variance <= 1.2x fixed-measure variance");
    }
    return c;
}

// 4. Cost-based improvement factor exceeds one at eps = 2^-6.
Criterion criterion4() {
    Criterion c;
    ExperimentConfig cfg = european_milstein();
    cfg.k_values = {6};
    cfg.reps_mid_k = 20;
    const auto out = run_experiment(cfg);
    const auto& ais = find_row(out.rows, "aisml2r", 6);
    c.expect(ais.improvement_factor_cost.has_value(), "improvement factor present");
    if (ais.improvement_factor_cost) {
        note(c, "improvement factor (cost) at k=6: %.3f", *ais.improvement_factor_cost);
        c.expect(*ais.improvement_factor_cost > 1.0, "(var x cost) ml2r / aisml2r > 1");
    }
    return c;
}

// 5. Weight suite over the full parameter grid.
Criterion criterion5() {
    Criterion c;
    bool residual_ok = true, first_ok = true, bound_ok = true;
    for (double alpha : {0.5, 1.0, 2.0}) {
        for (int M = 2; M <= 10; ++M) {
            const double bound = weight_bound(alpha, M);
            for (int L = 1; L <= 12; ++L) {
                const auto ws = solve_weights(alpha, M, L);
                // residual of the rebuilt system in double precision
                for (int i = 0; i < L; ++i) {
                    long double row = 0.0L;
                    for (int j = 0; j < L; ++j)
                        row += std::pow(static_cast<long double>(M),
                                        -static_cast<long double>(alpha) * i * j) *
                               ws.w[j];
                    const double resid = std::fabs(static_cast<double>(row) - (i == 0 ? 1.0 : 0.0));
                    if (resid > 1e-10) residual_ok = false;
                }
                if (std::fabs(ws.w_tilde[0] - 1.0) > 1e-12) first_ok = false;
                for (double wt : ws.w_tilde)
                    if (std::fabs(wt) > bound * (1.0 + 1e-9)) bound_ok = false;
            }
        }
    }
    c.expect(residual_ok, "Vandermonde residual <= 1e-10 over the grid");
    c.expect(first_ok, "leading suffix weight equals 1 to 1e-12");
    c.expect(bound_ok, "suffix weights within the product-sequence bound");

    const auto ws = solve_weights(1.0, 2, 12);
    double sum = 0.0;
    for (int l = 2; l <= 12; ++l) sum += std::fabs(ws.w_tilde[l - 1]) * std::pow(2.0, -(l - 1));
    note(c, "geometric-limit sum %.6f vs 1", sum);
    c.expect(std::fabs(sum - 1.0) <= 0.01, "suffix-weight geometric sum within 1% of 1/(M-1)");
    return c;
}

// 6. Strong-rate regression slopes.
Criterion criterion6() {
    Criterion c;
    const auto model = SdeModel::gbm(0.06, 0.4, 100.0, 1.0);
    const auto payoff = PayoffSpec::european(80.0, 0.06, 1.0);
    for (auto scheme : {SchemeKind::milstein, SchemeKind::euler}) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (int j = 0; j < 5; ++j) {
            const double h = 1.0 / (1 << j);
            double sum = 0.0;
            const long long paths = 100000;
            for (long long i = 0; i < paths; ++i) {
                RngStream rng(derive_seed(404 + j, SeedDomain::scratch),
                              StreamKey{0, 2, static_cast<std::uint64_t>(i)});
                const auto s = simulate_coupled_pair(model, scheme, 2, 2, h, 0.0, false, rng);
                const double d = european_call(s.fine_terminal, payoff) -
                                 european_call(s.coarse_terminal, payoff);
                sum += d * d;
            }
            const double x = std::log(h), y = std::log(sum / paths);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const bool milstein = scheme == SchemeKind::milstein;
        note(c, "%s slope %.3f", scheme_name(scheme), slope);
        c.expect(slope >= (milstein ? 1.7 : 0.7) && slope <= (milstein ? 2.3 : 1.3),
                 std::string(scheme_name(scheme)) + " squared-difference slope in band");
    }
    return c;
}

// 7. Girsanov identities.
Criterion criterion7() {
    Criterion c;
    {
        RngStream rng(515, StreamKey{0, 1, 0});
        double worst = 0.0;
        bool log_exact = true;
        for (int i = 0; i < 100000; ++i) {
            const double w = 3.0 * rng.next_normal();
            const double theta = 2.0 * rng.next_uniform() - 1.0;
            const double t = 0.25 + rng.next_uniform();
            worst = std::max(worst,
                             std::fabs(girsanov_minus(w, theta, t) * girsanov_plus(w, -theta, t) -
                                       1.0));
            GirsanovWeight minus{theta, w, t};
            GirsanovWeight plus{-theta, w, t};
            if (minus.log_minus() + plus.log_plus() != 0.0) log_exact = false;
        }
        note(c, "worst inverse-product deviation %.3e", worst);
        c.expect(log_exact, "log-space inverse identity is exact");
        c.expect(worst <= 1e-12, "J- x J+ inverse product within 1e-12 of 1");
    }
    {
        // unbiasedness under the change of measure at theta = 0.5
        const auto model = SdeModel::gbm(0.06, 0.4, 100.0, 1.0);
        const auto payoff = PayoffSpec::european(80.0, 0.06, 1.0);
        const double theta = 0.5;
        const long long n = 100000;
        double s1 = 0, ss1 = 0, s2 = 0, ss2 = 0;
        for (long long i = 0; i < n; ++i) {
            RngStream shifted(derive_seed(616, SeedDomain::scratch),
                              StreamKey{0, 1, static_cast<std::uint64_t>(i)});
            const auto a = simulate_coupled_pair(model, SchemeKind::milstein, 1, 8, 1.0, theta,
                                                 false, shifted);
            const double v1 = european_call(a.fine_terminal, payoff) *
                              girsanov_minus(a.brownian_terminal, theta, 1.0);
            s1 += v1;
            ss1 += v1 * v1;
            RngStream plain(derive_seed(717, SeedDomain::scratch),
                            StreamKey{0, 1, static_cast<std::uint64_t>(i)});
            const auto b =
                simulate_coupled_pair(model, SchemeKind::milstein, 1, 8, 1.0, 0.0, false, plain);
            const double v2 = european_call(b.fine_terminal, payoff);
            s2 += v2;
            ss2 += v2 * v2;
        }
        const double m1 = s1 / n, m2 = s2 / n;
        const double var1 = (ss1 - s1 * s1 / n) / (n - 1.0);
        const double var2 = (ss2 - s2 * s2 / n) / (n - 1.0);
        const double se = std::sqrt(var1 / n + var2 / n);
        note(c, "weighted mean %.4f vs plain mean %.4f, 3se %.4f", m1, m2, 3 * se);
        c.expect(std::fabs(m1 - m2) <= 3.0 * se, "reweighted mean unbiased within 3 SE");
    }
    {
        // second-moment identity on the same coupling
        const auto model = SdeModel::gbm(0.06, 0.4, 100.0, 1.0);
        const auto payoff = PayoffSpec::european(80.0, 0.06, 1.0);
        const double theta = 0.5;
        const long long n = 100000;
        double sd = 0, ssd = 0;
        for (long long i = 0; i < n; ++i) {
            RngStream s_shift(derive_seed(818, SeedDomain::scratch),
                              StreamKey{0, 2, static_cast<std::uint64_t>(i)});
            const auto a = simulate_coupled_pair(model, SchemeKind::milstein, 2, 8, 1.0, theta,
                                                 false, s_shift);
            const double da = (european_call(a.fine_terminal, payoff) -
                               european_call(a.coarse_terminal, payoff)) *
                              girsanov_minus(a.brownian_terminal, theta, 1.0);
            RngStream s_plain(derive_seed(818, SeedDomain::scratch),
                              StreamKey{0, 2, static_cast<std::uint64_t>(i)});
            const auto b = simulate_coupled_pair(model, SchemeKind::milstein, 2, 8, 1.0, 0.0,
                                                 false, s_plain);
            const double db = european_call(b.fine_terminal, payoff) -
                              european_call(b.coarse_terminal, payoff);
            const double d = da * da - db * db * girsanov_plus(b.brownian_terminal, theta, 1.0);
            sd += d;
            ssd += d * d;
        }
        const double mean = sd / n;
        const double se = std::sqrt(((ssd - sd * sd / n) / (n - 1.0)) / n);
        note(c, "paired second-moment gap %.4e, 3se %.4e", mean, 3 * se);
        c.expect(std::fabs(mean) <= 3.0 * se, "second-moment identity within 3 SE");
    }
    return c;
}

// 8. Robbins-Monro behavior.
Criterion criterion8() {
    Criterion c;
    {
        RngStream rng(919, StreamKey{0, 1, 0});
        bool inside = true;
        auto sampler = [&](double theta) {
            if (theta < 0.0 || theta > 1.0) inside = false;
            GradientSample s;
            s.payoff_term = 1.0;
            s.w_terminal = rng.next_normal();
            return s;
        };
        const auto state = robbins_monro_run(1, GradientBranch::beta_gt_1, sampler,
                                             ThetaState::initial(1, 0.5, 0.0, 1.0), 10000, 1.0);
        note(c, "constant-payoff toy theta_bar %.4f", state.theta_bar);
        c.expect(std::fabs(state.theta_bar) <= 0.05, "constant-payoff toy converges to |.| <= 0.05");
        c.expect(inside, "projection keeps every iterate inside the domain");
        c.expect(state.theta >= 0.0 && state.theta <= 1.0, "final iterate inside the domain");
    }
    {
        // level-1 pilot stability against a long-run oracle
        const auto model = SdeModel::gbm(0.06, 0.4, 100.0, 1.0);
        const auto payoff = PayoffSpec::european(80.0, 0.06, 1.0);
        const auto sp = StructuralParams::make(
            1.0, 2.0,
            estimate_v1(model, payoff, SchemeKind::milstein, 1.0, 100000, 10, 20260809),
            estimate_var_y0(model, payoff, SchemeKind::milstein, 1.0, 100000, 20260809), 1.0, 1.0,
            8, 1.0);
        const double k1 = compute_k_l(1, sp, solve_weights(1.0, 8, 1));
        auto pilot = [&](std::uint64_t seed, long iters) {
            long iteration = 0;
            auto sampler = [&](double theta) {
                RngStream rng(derive_seed(seed, SeedDomain::theta_pilot),
                              StreamKey{0, 1, static_cast<std::uint64_t>(iteration++)});
                const auto s = simulate_coupled_pair(model, SchemeKind::milstein, 1, 8, 1.0,
                                                     theta, false, rng);
                GradientSample g;
                g.payoff_term = european_call(s.fine_terminal, payoff);
                g.w_terminal = s.brownian_terminal;
                g.k_l = k1;
                return g;
            };
            return robbins_monro_run(1, GradientBranch::beta_gt_1, sampler,
                                     ThetaState::initial(1, 0.5, 0.0, 1.0), iters, 1.0);
        };
        const double oracle = pilot(20260809, 100000).theta_bar;
        note(c, "oracle theta_bar (1e5 iterations) %.4f", oracle);
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            const double bar = pilot(seed, 1000).theta_bar;
            note(c, "seed %llu pilot theta_bar %.4f", (unsigned long long)seed, bar);
            c.expect(std::fabs(bar - oracle) <= 0.1,
                     "pilot theta_bar within 0.1 of the long-run oracle");
        }
    }
    return c;
}

// 9. Determinism: bit-exact numeric outputs for any worker count and replay.
Criterion criterion9() {
    Criterion c;
    ExperimentConfig cfg = european_milstein();
    cfg.k_values = {3};
    cfg.reps_small_k = 3;
    cfg.pilot_v1_paths = 20000;
    cfg.pilot_var_paths = 20000;

    auto run_at = [&](int threads) {
        ExperimentConfig x = cfg;
        x.threads = threads;
        return run_experiment(x);
    };
    const auto base = run_at(1);
    auto same = [&](const ExperimentOutput& other) {
        if (base.rows.size() != other.rows.size()) return false;
        for (std::size_t i = 0; i < base.rows.size(); ++i) {
            const auto& a = base.rows[i];
            const auto& b = other.rows[i];
            if (a.variance != b.variance || a.bias != b.bias || a.rmse != b.rmse ||
                a.cost != b.cost || a.total_paths != b.total_paths)
                return false;
            if (a.improvement_factor_cost.has_value() != b.improvement_factor_cost.has_value())
                return false;
            if (a.improvement_factor_cost &&
                *a.improvement_factor_cost != *b.improvement_factor_cost)
                return false;
        }
        return true;
    };
    c.expect(same(run_at(2)), "2-worker run matches 1-worker run bit-exactly");
    c.expect(same(run_at(8)), "8-worker run matches 1-worker run bit-exactly");

    const auto round_trip = manifest_from_json_text(manifest_to_json_text(base.manifest));
    c.expect(same(replay(round_trip)), "replay from the serialized manifest is bit-exact");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
        if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) g_threads = std::atoi(argv[++i]);
    }

    const char* names[] = {
        "reference prices via crude Monte Carlo",
        "rmse <= 2 eps on the study grids",
        "adaptive variance reduction at eps = 2^-5",
        "cost-based improvement factor at eps = 2^-6",
        "extrapolation-weight suite",
        "strong-rate regression slopes",
        "Girsanov identities",
        "Robbins-Monro convergence and projection",
        "bit-exact determinism and replay",
    };
    Criterion (*runners[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                criterion6, criterion7, criterion8, criterion9};

    int failures = 0;
    for (int i = 1; i <= 9; ++i) {
        if (only != 0 && only != i) continue;
        const Criterion result = runners[i - 1]();
        std::printf("[%s] criterion %d: %s\n", result.ok ? "PASS" : "FAIL", i, names[i - 1]);
        std::fputs(result.detail.c_str(), stdout);
        if (!result.ok) ++failures;
    }
    return failures;
}
