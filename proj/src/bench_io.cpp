#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ml2r/bench.hpp"

#include <json.hpp>

namespace ml2r {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json scheme_to_json(SchemeKind s) { return scheme_name(s); }

SchemeKind scheme_from_json(const json& j) {
    const std::string s = j.get<std::string>();
    if (s == "euler") return SchemeKind::euler;
    if (s == "milstein") return SchemeKind::milstein;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

PayoffKind payoff_kind_from_name(const std::string& s) {
    if (s == "european_call") return PayoffKind::european_call;
    if (s == "partial_lookback_call") return PayoffKind::partial_lookback_call;
    throw std::invalid_argument("unknown payoff kind '" + s + "'");
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"x0", c.x0}, {"rate", c.rate}, {"vol", c.vol}, {"horizon", c.horizon}};
    j["payoff"] = {{"kind", payoff_name(c.payoff_kind)},
                   {"strike", c.strike},
                   {"zeta", c.zeta},
                   {"reference", c.reference_id}};
    j["scheme"] = scheme_to_json(c.scheme);
    json ests = json::array();
    for (auto e : c.estimators) ests.push_back(estimator_name(e));
    j["estimators"] = ests;
    j["grid"] = {{"refinement", c.refinement},
                 {"k_values", c.k_values},
                 {"coarsest_h", c.coarsest_h}};
    j["replications"] = {{"k_le_5", c.reps_small_k},
                         {"k_6_7", c.reps_mid_k},
                         {"k_ge_8", c.reps_large_k}};
    j["planner"] = {{"a", c.planner_a}, {"c_inf", c.c_inf}, {"alpha", c.alpha}};
    j["pilot"] = {{"v1_paths", c.pilot_v1_paths},
                  {"var_paths", c.pilot_var_paths},
                  {"m_max", c.pilot_m_max}};
    j["adaptive"] = {{"rm_iterations", c.rm_iterations},
                     {"theta_lo", c.theta_lo},
                     {"theta_hi", c.theta_hi},
                     {"gain_scale", c.gain_scale},
                     {"gain_offset", c.gain_offset},
                     {"use_k_l_scaling", c.use_k_l_scaling},
                     {"euler_path_multiplier", c.euler_path_multiplier}};
    j["run"] = {{"master_seed", c.master_seed}, {"threads", c.threads}};
    j["output"] = {{"directory", c.output_dir}, {"formats", c.formats}};
    return j;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        get_if_present(m, "x0", c.x0);
        get_if_present(m, "rate", c.rate);
        get_if_present(m, "vol", c.vol);
        get_if_present(m, "horizon", c.horizon);
    }
    if (j.contains("payoff")) {
        const auto& p = j.at("payoff");
        if (p.contains("kind")) c.payoff_kind = payoff_kind_from_name(p.at("kind"));
        get_if_present(p, "strike", c.strike);
        get_if_present(p, "zeta", c.zeta);
        get_if_present(p, "reference", c.reference_id);
    }
    if (j.contains("scheme")) c.scheme = scheme_from_json(j.at("scheme"));
    if (j.contains("estimators")) {
        c.estimators.clear();
        for (const auto& e : j.at("estimators"))
            c.estimators.push_back(estimator_from_name(e.get<std::string>()));
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        get_if_present(g, "refinement", c.refinement);
        get_if_present(g, "k_values", c.k_values);
        get_if_present(g, "coarsest_h", c.coarsest_h);
    }
    if (j.contains("replications")) {
        const auto& r = j.at("replications");
        get_if_present(r, "k_le_5", c.reps_small_k);
        get_if_present(r, "k_6_7", c.reps_mid_k);
        get_if_present(r, "k_ge_8", c.reps_large_k);
    }
    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        get_if_present(p, "a", c.planner_a);
        get_if_present(p, "c_inf", c.c_inf);
        get_if_present(p, "alpha", c.alpha);
    }
    if (j.contains("pilot")) {
        const auto& p = j.at("pilot");
        get_if_present(p, "v1_paths", c.pilot_v1_paths);
        get_if_present(p, "var_paths", c.pilot_var_paths);
        get_if_present(p, "m_max", c.pilot_m_max);
    }
    if (j.contains("adaptive")) {
        const auto& a = j.at("adaptive");
        get_if_present(a, "rm_iterations", c.rm_iterations);
        get_if_present(a, "theta_lo", c.theta_lo);
        get_if_present(a, "theta_hi", c.theta_hi);
        get_if_present(a, "gain_scale", c.gain_scale);
        get_if_present(a, "gain_offset", c.gain_offset);
        get_if_present(a, "use_k_l_scaling", c.use_k_l_scaling);
        get_if_present(a, "euler_path_multiplier", c.euler_path_multiplier);
    }
    if (j.contains("run")) {
        const auto& r = j.at("run");
        get_if_present(r, "master_seed", c.master_seed);
        get_if_present(r, "threads", c.threads);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        get_if_present(o, "directory", c.output_dir);
        get_if_present(o, "formats", c.formats);
    }
    c.validate();
    return c;
}

json weights_to_json(const WeightSet& w) {
    return {{"alpha", w.alpha},
            {"refinement", w.refinement},
            {"depth", w.depth},
            {"w", w.w},
            {"w_tilde", w.w_tilde}};
}

WeightSet weights_from_json(const json& j) {
    WeightSet w;
    w.alpha = j.at("alpha");
    w.refinement = j.at("refinement");
    w.depth = j.at("depth");
    w.w = j.at("w").get<std::vector<double>>();
    w.w_tilde = j.at("w_tilde").get<std::vector<double>>();
    return w;
}

json plan_to_json(const LevelPlan& p) {
    return {{"depth", p.depth},
            {"coarsest_h", p.coarsest_h},
            {"refinement", p.refinement},
            {"mu", p.mu},
            {"total_paths", p.total_paths},
            {"level_paths", p.level_paths},
            {"weights", weights_to_json(p.weights)},
            {"q_star", p.q_star},
            {"eps", p.eps}};
}

LevelPlan plan_from_json(const json& j) {
    LevelPlan p;
    p.depth = j.at("depth");
    p.coarsest_h = j.at("coarsest_h");
    p.refinement = j.at("refinement");
    p.mu = j.at("mu").get<std::vector<double>>();
    p.total_paths = j.at("total_paths");
    p.level_paths = j.at("level_paths").get<std::vector<long long>>();
    p.weights = weights_from_json(j.at("weights"));
    p.q_star = j.at("q_star");
    p.eps = j.at("eps");
    return p;
}

json structural_to_json(const StructuralParams& s) {
    return {{"alpha", s.alpha},     {"beta", s.beta},
            {"v1", s.v1},           {"var_y0", s.var_y0},
            {"lambda", s.lambda},   {"c_inf", s.c_inf},
            {"coarsest_h", s.coarsest_h}, {"refinement", s.refinement},
            {"planner_a", s.planner_a},   {"plan_var_y0", s.plan_var_y0}};
}

StructuralParams structural_from_json(const json& j) {
    StructuralParams s;
    s.alpha = j.at("alpha");
    s.beta = j.at("beta");
    s.v1 = j.at("v1");
    s.var_y0 = j.at("var_y0");
    s.lambda = j.at("lambda");
    s.c_inf = j.at("c_inf");
    s.coarsest_h = j.at("coarsest_h");
    s.refinement = j.at("refinement");
    s.planner_a = j.at("planner_a");
    s.plan_var_y0 = j.value("plan_var_y0", s.var_y0);
    return s;
}

json theta_to_json(const ThetaState& t) {
    return {{"level", t.level},   {"theta", t.theta},
            {"theta_bar", t.theta_bar}, {"theta_sum", t.theta_sum},
            {"iterations", t.iterations}, {"lo", t.lo},
            {"hi", t.hi},         {"gain_scale", t.gain.scale},
            {"gain_offset", t.gain.offset}};
}

ThetaState theta_from_json(const json& j) {
    ThetaState t;
    t.level = j.at("level");
    t.theta = j.at("theta");
    t.theta_bar = j.at("theta_bar");
    t.theta_sum = j.at("theta_sum");
    t.iterations = j.at("iterations");
    t.lo = j.at("lo");
    t.hi = j.at("hi");
    t.gain.scale = j.at("gain_scale");
    t.gain.offset = j.at("gain_offset");
    return t;
}

json manifest_to_json(const RunManifest& m) {
    json j;
    j["version"] = m.version;
    j["config"] = config_to_json(m.config);
    if (m.structural_plain) j["structural_plain"] = structural_to_json(*m.structural_plain);
    if (m.structural_theta) j["structural_theta"] = structural_to_json(*m.structural_theta);
    if (m.pilot_theta) j["pilot_theta"] = theta_to_json(*m.pilot_theta);
    json plans = json::array();
    for (const auto& e : m.plans) {
        plans.push_back({{"estimator", estimator_name(e.estimator)},
                         {"k", e.k},
                         {"eps", e.eps},
                         {"plan", plan_to_json(e.plan)}});
    }
    j["plans"] = plans;
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.version = j.at("version");
    m.config = config_from_json(j.at("config"));
    if (j.contains("structural_plain"))
        m.structural_plain = structural_from_json(j.at("structural_plain"));
    if (j.contains("structural_theta"))
        m.structural_theta = structural_from_json(j.at("structural_theta"));
    if (j.contains("pilot_theta")) m.pilot_theta = theta_from_json(j.at("pilot_theta"));
    for (const auto& e : j.at("plans")) {
        PlanEntry entry;
        entry.estimator = estimator_from_name(e.at("estimator"));
        entry.k = e.at("k");
        entry.eps = e.at("eps");
        entry.plan = plan_from_json(e.at("plan"));
        m.plans.push_back(std::move(entry));
    }
    return m;
}

json row_to_json(const ResultRow& r) {
    json j = {{"estimator", r.estimator},
              {"scheme", r.scheme},
              {"payoff", r.payoff},
              {"k", r.k},
              {"eps", r.eps},
              {"L", r.depth},
              {"N", r.total_paths},
              {"variance", r.variance},
              {"bias", r.bias},
              {"rmse", r.rmse},
              {"cost", r.cost},
              {"time_seconds", r.time_seconds}};
    if (r.improvement_factor_cost) j["improvement_factor_cost"] = *r.improvement_factor_cost;
    if (r.improvement_factor_time) j["improvement_factor_time"] = *r.improvement_factor_time;
    return j;
}

ResultRow row_from_json(const json& j) {
    ResultRow r;
    r.estimator = j.at("estimator");
    r.scheme = j.at("scheme");
    r.payoff = j.at("payoff");
    r.k = j.at("k");
    r.eps = j.at("eps");
    r.depth = j.at("L");
    r.total_paths = j.at("N");
    r.variance = j.at("variance");
    r.bias = j.at("bias");
    r.rmse = j.at("rmse");
    r.cost = j.at("cost");
    r.time_seconds = j.at("time_seconds");
    if (j.contains("improvement_factor_cost"))
        r.improvement_factor_cost = j.at("improvement_factor_cost").get<double>();
    if (j.contains("improvement_factor_time"))
        r.improvement_factor_time = j.at("improvement_factor_time").get<double>();
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    return config_from_json(json::parse(text));
}

std::string config_to_json_text(const ExperimentConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_json_text(read_file(path));
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
    json j = json::parse(json_text);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override '" + kv + "' is not key=value");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        json* node = &j;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                json parsed;
                try {
                    parsed = json::parse(value);
                } catch (const json::parse_error&) {
                    parsed = value;  // bare strings stay strings
                }
                (*node)[part] = parsed;
                break;
            }
            node = &(*node)[part];
            pos = dot + 1;
        }
    }
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json_text(const std::string& text) {
    return manifest_from_json(json::parse(text));
}

std::string manifest_to_json_text(const RunManifest& manifest) {
    return manifest_to_json(manifest).dump(2) + "\n";
}

RunManifest load_manifest(const std::string& path) {
    return manifest_from_json_text(read_file(path));
}

std::string output_to_json_text(const ExperimentOutput& output) {
    json j;
    j["manifest"] = manifest_to_json(output.manifest);
    json rows = json::array();
    for (const auto& r : output.rows) rows.push_back(row_to_json(r));
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

ExperimentOutput output_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentOutput out;
    out.manifest = manifest_from_json(j.at("manifest"));
    for (const auto& r : j.at("rows")) out.rows.push_back(row_from_json(r));
    return out;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "estimator,scheme,payoff,k,eps,L,N,variance,bias,rmse,cost,time_seconds,"
          "improvement_factor_cost,improvement_factor_time\n";
    for (const auto& r : rows) {
        os << r.estimator << ',' << r.scheme << ',' << r.payoff << ',' << r.k << ','
           << fmt_double(r.eps) << ',' << r.depth << ',' << r.total_paths << ','
           << fmt_double(r.variance) << ',' << fmt_double(r.bias) << ',' << fmt_double(r.rmse)
           << ',' << fmt_double(r.cost) << ',' << fmt_double(r.time_seconds) << ','
           << (r.improvement_factor_cost ? fmt_double(*r.improvement_factor_cost) : "") << ','
           << (r.improvement_factor_time ? fmt_double(*r.improvement_factor_time) : "") << '\n';
    }
    return os.str();
}

std::vector<ResultRow> rows_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("rows_from_csv: empty document");
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            fields.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (fields.size() != 14)
            throw std::invalid_argument("rows_from_csv: expected 14 columns, got " +
                                        std::to_string(fields.size()));
        ResultRow r;
        r.estimator = fields[0];
        r.scheme = fields[1];
        r.payoff = fields[2];
        r.k = std::stoi(fields[3]);
        r.eps = std::stod(fields[4]);
        r.depth = std::stoi(fields[5]);
        r.total_paths = std::stoll(fields[6]);
        r.variance = std::stod(fields[7]);
        r.bias = std::stod(fields[8]);
        r.rmse = std::stod(fields[9]);
        r.cost = std::stod(fields[10]);
        r.time_seconds = std::stod(fields[11]);
        if (!fields[12].empty()) r.improvement_factor_cost = std::stod(fields[12]);
        if (!fields[13].empty()) r.improvement_factor_time = std::stod(fields[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::string> emit_outputs(const ExperimentOutput& output,
                                      const std::vector<std::string>& formats,
                                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir = out_dir.empty() ? fs::path(default_output_dir()) : fs::path(out_dir);
    fs::create_directories(dir);

    std::vector<std::string> written;
    const auto emit = [&](const std::string& name, const std::string& text) {
        const std::string path = (dir / name).string();
        write_file(path, text);
        written.push_back(path);
    };

    emit("manifest.json", manifest_to_json_text(output.manifest));
    for (const std::string& f : formats) {
        if (f == "csv") {
            emit("table.csv", rows_to_csv(output.rows));
        } else if (f == "json") {
            emit("results.json", output_to_json_text(output));
        } else if (f == "plot") {
            json series = json::array();
            for (const auto& est : output.manifest.config.estimators) {
                json points = json::array();
                for (const auto& r : output.rows) {
                    if (r.estimator != estimator_name(est)) continue;
                    points.push_back({{"k", r.k},
                                      {"log10_variance", std::log10(r.variance)},
                                      {"log10_time", std::log10(r.time_seconds)},
                                      {"log10_cost", std::log10(r.cost)},
                                      {"log10_paths", std::log10(static_cast<double>(r.total_paths))}});
                }
                series.push_back({{"estimator", estimator_name(est)}, {"points", points}});
            }
            emit("plot_data.json", json{{"series", series}}.dump(2) + "\n");
        } else {
            throw std::invalid_argument("emit_outputs: unknown format '" + f + "'");
        }
    }
    return written;
}

std::string default_output_dir() {
    const char* env = std::getenv("ML2R_OUTPUT_DIR");
    return env && *env ? env : "ml2r_out";
}

}  // namespace ml2r
