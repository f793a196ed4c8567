#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ml2r/bench.hpp"

using namespace ml2r;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig c;
    c.k_values = {3};
    c.reps_small_k = 3;
    c.pilot_v1_paths = 5000;
    c.pilot_var_paths = 5000;
    c.rm_iterations = 50;
    c.threads = 2;
    c.master_seed = 777;
    return c;
}

bool rows_equal_ignoring_time(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.estimator != y.estimator || x.k != y.k || x.eps != y.eps || x.depth != y.depth ||
            x.total_paths != y.total_paths || x.variance != y.variance || x.bias != y.bias ||
            x.rmse != y.rmse || x.cost != y.cost)
            return false;
        if (x.improvement_factor_cost.has_value() != y.improvement_factor_cost.has_value())
            return false;
        if (x.improvement_factor_cost &&
            *x.improvement_factor_cost != *y.improvement_factor_cost)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config serialization round-trips losslessly") {
    const ExperimentConfig c = tiny_config();
    const std::string once = config_to_json_text(c);
    const std::string twice = config_to_json_text(config_from_json_text(once));
    CHECK(once == twice);
}

TEST_CASE("overrides reach nested keys and keep the json valid") {
    std::string text = config_to_json_text(ExperimentConfig{});
    text = apply_overrides(text, {"grid.refinement=6", "scheme=euler", "run.master_seed=12345",
                                  "grid.k_values=[3,4]"});
    const auto c = config_from_json_text(text);
    CHECK(c.refinement == 6);
    CHECK(c.scheme == SchemeKind::euler);
    CHECK(c.master_seed == 12345);
    CHECK(c.k_values == std::vector<int>{3, 4});
    CHECK_THROWS_AS(apply_overrides(text, {"no_equals_sign"}), std::invalid_argument);
}

TEST_CASE("config validation rejects out-of-domain values") {
    ExperimentConfig c = tiny_config();
    c.k_values = {0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.reps_small_k = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config();
    c.refinement = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(estimator_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("manifest serialization round-trips losslessly") {
    const auto manifest = calibrate(tiny_config());
    const std::string once = manifest_to_json_text(manifest);
    const std::string twice = manifest_to_json_text(manifest_from_json_text(once));
    CHECK(once == twice);
}

TEST_CASE("csv output reparses to the same table") {
    const auto out = run_experiment(tiny_config());
    const std::string csv = rows_to_csv(out.rows);
    const auto parsed = rows_from_csv(csv);
    REQUIRE(parsed.size() == out.rows.size());
    CHECK(rows_to_csv(parsed) == csv);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].variance == out.rows[i].variance);
        CHECK(parsed[i].rmse == out.rows[i].rmse);
        CHECK(parsed[i].time_seconds == out.rows[i].time_seconds);
    }
}

TEST_CASE("results json round-trips the rows and manifest") {
    const auto out = run_experiment(tiny_config());
    const auto back = output_from_json_text(output_to_json_text(out));
    CHECK(rows_equal_ignoring_time(out.rows, back.rows));
    CHECK(manifest_to_json_text(out.manifest) == manifest_to_json_text(back.manifest));
    CHECK(back.rows[0].time_seconds == out.rows[0].time_seconds);
}

TEST_CASE("replaying a manifest reproduces every numeric column") {
    const auto out = run_experiment(tiny_config());
    const auto again = replay(out.manifest);
    CHECK(rows_equal_ignoring_time(out.rows, again.rows));
}

TEST_CASE("experiments are invariant under the worker count") {
    ExperimentConfig c = tiny_config();
    c.threads = 1;
    const auto a = run_experiment(c);
    c.threads = 2;
    const auto b = run_experiment(c);
    CHECK(rows_equal_ignoring_time(a.rows, b.rows));
}

TEST_CASE("emit_outputs writes exactly the requested files") {
    namespace fs = std::filesystem;
    const auto out = run_experiment(tiny_config());
    const fs::path dir = fs::temp_directory_path() / "ml2r_emit_test";
    fs::remove_all(dir);

    const auto manifest_only = emit_outputs(out, {}, dir.string());
    CHECK(manifest_only.size() == 1);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(!fs::exists(dir / "table.csv"));

    const auto all = emit_outputs(out, {"csv", "json", "plot"}, dir.string());
    CHECK(all.size() == 4);
    CHECK(fs::exists(dir / "table.csv"));
    CHECK(fs::exists(dir / "results.json"));
    CHECK(fs::exists(dir / "plot_data.json"));

    // plot series carry one point per k value and estimator
    std::ifstream in(dir / "plot_data.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t points = 0, pos = 0;
    while ((pos = text.find("\"k\":", pos)) != std::string::npos) {
        ++points;
        ++pos;
    }
    CHECK(points == out.manifest.config.k_values.size() * out.manifest.config.estimators.size());
    fs::remove_all(dir);

    CHECK_THROWS_AS(emit_outputs(out, {"yaml"}, (fs::temp_directory_path() / "ml2r_x").string()),
                    std::invalid_argument);
}

TEST_CASE("the default output directory honors the environment") {
    setenv("ML2R_OUTPUT_DIR", "/tmp/ml2r_env_dir", 1);
    CHECK(default_output_dir() == "/tmp/ml2r_env_dir");
    unsetenv("ML2R_OUTPUT_DIR");
    CHECK(default_output_dir() == "ml2r_out");
}

TEST_CASE("calibrate resolves both measures for adaptive runs") {
    const auto manifest = calibrate(tiny_config());
    REQUIRE(manifest.structural_plain.has_value());
    REQUIRE(manifest.structural_theta.has_value());
    REQUIRE(manifest.pilot_theta.has_value());
    CHECK(manifest.structural_plain->v1 > 0.0);
    CHECK(manifest.structural_theta->v1 > 0.0);
    // adaptive plans keep the plain variance scale for the sample budget
    CHECK(manifest.structural_theta->plan_var_y0 == manifest.structural_plain->var_y0);
    CHECK(manifest.pilot_theta->theta_bar >= 0.0);
    CHECK(manifest.pilot_theta->theta_bar <= 1.0);
    CHECK(manifest.plans.size() == 2);  // one per estimator at the single k
}

TEST_CASE("a tiny fixed-seed run reproduces its golden summary") {
    const auto out = run_experiment(tiny_config());
    REQUIRE(out.rows.size() == 2);
    CHECK(out.rows[0].estimator == "ml2r");
    CHECK(out.rows[1].estimator == "aisml2r");
    CHECK(out.rows[0].depth == 2);
    // frozen from this configuration at master_seed 777
    CHECK(out.rows[0].rmse == doctest::Approx(0.15509943038005602).epsilon(1e-9));
    CHECK(out.rows[1].rmse == doctest::Approx(0.072236482789285031).epsilon(1e-9));
}
