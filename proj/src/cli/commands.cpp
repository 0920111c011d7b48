// Copyright 2026 The bellsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "bellsim/bounds.hpp"
#include "bellsim/cli.hpp"
#include "bellsim/lhv.hpp"
#include "bellsim/montecarlo.hpp"
#include "bellsim/rng.hpp"
#include "json.hpp"

namespace bellsim::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kQmLossNote =
    "non-detection completed as independent per-wing loss with efficiency sqrt(eta) on each wing";

// The resolved parameters of one run, echoed into every output it writes.
class RunRecord {
  public:
    explicit RunRecord(std::string command) : command_(std::move(command)) {}

    void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value) { add(std::move(key), format_double(value)); }

    std::string header_line() const {
        std::string line = "# " + std::string(kToolName) + " " + std::string(kVersion) + " " + command_;
        for (const auto& [k, v] : entries_) {
            line += " " + k + "=" + v;
        }
        return line + "\n";
    }

    Json header_json() const {
        Json config = Json::object();
        for (const auto& [k, v] : entries_) {
            config[k] = v;
        }
        return Json{{"tool", kToolName}, {"version", kVersion}, {"command", command_}, {"config", config}};
    }

  private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct SourceOptions {
    double eta = 1.0;
    double visibility = 1.0;
    int sign = 1;

    QmSource source() const {
        QmSource src{.correlation_sign = sign, .visibility = visibility, .efficiency = eta};
        src.validate();
        return src;
    }

    void record(RunRecord& rec) const {
        rec.add("eta", eta);
        rec.add("F", visibility);
        rec.add("sign", std::to_string(sign));
    }
};

void add_source_options(CLI::App* cmd, SourceOptions& opts) {
    cmd->add_option("--eta", opts.eta, "Overall pair detection efficiency, in (0, 1]")->capture_default_str();
    cmd->add_option("--F,--visibility", opts.visibility, "Correlation visibility F, in [0, 1]")->capture_default_str();
    cmd->add_option("--sign", opts.sign, "Correlation sign: +1 (|HH>+|VV>) or -1")->capture_default_str();
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument(std::string(what) + " must be a nonnegative integer");
    }
    return value;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
        return parse_u64(env, kSeedEnvVar);
    }
    return kDefaultSeed;
}

// Writes to `fallback` for "-", otherwise to the named file.
template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& writer) {
    if (path == "-") {
        writer(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    writer(file);
    if (!file) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

// Config-file entries become leading flags, so explicit flags (parsed later,
// last one wins) override them.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    if (args.empty() || args[0].starts_with("-")) {
        return args;
    }
    std::vector<std::string> rest;
    std::vector<std::string> files;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const auto& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size()) {
                throw std::invalid_argument("--config needs a file name");
            }
            files.push_back(args[++i]);
        } else if (a.starts_with("--config=")) {
            files.push_back(a.substr(9));
        } else if (args[0] == "simulate" && i == 1 && !a.starts_with("-")) {
            files.push_back(a);
        } else {
            rest.push_back(a);
        }
    }
    std::vector<std::string> expanded = {args[0]};
    for (const auto& path : files) {
        for (auto [key, value] : parse_config_text(read_file(path))) {
            std::replace(key.begin(), key.end(), '_', '-');
            expanded.push_back("--" + key);
            expanded.push_back(value);
        }
    }
    expanded.insert(expanded.end(), rest.begin(), rest.end());
    return expanded;
}

Json to_json(const BoundReport& r) {
    return Json{{"value", r.value},
                {"components", r.components},
                {"lower_bound", r.lower_bound},
                {"upper_bound", r.upper_bound},
                {"tolerance", r.tolerance},
                {"bound_violated", r.bound_violated}};
}

Json to_json(const RatioReport& r) {
    return Json{{"numerator", r.numerator}, {"denominator", r.denominator}, {"ratio", r.ratio},
                {"stderr", r.std_error},    {"sigmas", kRatioSigmas},       {"violated", r.violated}};
}

Json to_json(const WingHomogeneity& w) {
    Json dirs = Json::array();
    for (const auto& d : w.directions) {
        dirs.push_back(Json{{"direction_rad", d.direction.radians()}, {"detected", d.detected}, {"emitted", d.emitted}});
    }
    return Json{{"directions", dirs},
                {"chi_square", w.test.statistic},
                {"dof", w.test.dof},
                {"p_value", w.test.p_value},
                {"pass", w.pass}};
}

Json to_json(const AssumptionAReport& r) {
    return Json{{"test", "chi-square homogeneity of detection rate across analyzer directions"},
                {"significance", r.significance},
                {"statistic", r.statistic},
                {"p_value", r.p_value},
                {"pass", r.pass},
                {"wing1", to_json(r.wing1)},
                {"wing2", to_json(r.wing2)}};
}

Json to_json(const ChshReport& r) {
    return Json{{"correlations", r.correlations},
                {"stderrs", r.std_errors},
                {"value", r.value},
                {"stderr", r.std_error},
                {"classical_bound", 2.0}};
}

// ---------------------------------------------------------------------------

struct PredictOptions {
    SourceOptions source;
    std::string a;
    std::string b;
};

void cmd_predict(const PredictOptions& o, std::ostream& out) {
    const QmSource src = o.source.source();
    const AnalyzerAngle a = parse_angle(o.a);
    const AnalyzerAngle b = parse_angle(o.b);
    const JointTable table = qm_full_distribution(src, a, b);

    RunRecord rec("predict");
    rec.add("a_rad", a.radians());
    rec.add("b_rad", b.radians());
    o.source.record(rec);
    out << rec.header_line();
    out << "# " << kQmLossNote << "\n";
    out << "r\\q";
    for (Outcome q : kAllOutcomes) {
        out << std::setw(24) << to_string(q);
    }
    out << "\n";
    for (Outcome r : kAllOutcomes) {
        out << std::setw(3) << to_string(r);
        for (Outcome q : kAllOutcomes) {
            out << std::setw(24) << format_double(table(r, q));
        }
        out << "\n";
    }
    out << "C_eff = " << format_double(effective_correlation(table)) << "\n";
}

struct ScanOptions {
    SourceOptions source;
    std::size_t grid = 256;
    std::string out = "-";
    std::string svg;
};

void cmd_scan(const ScanOptions& o, std::ostream& out) {
    const QmSource src = o.source.source();
    const ScanResult scan = scan_violation(src, o.grid);

    RunRecord rec("scan");
    o.source.record(rec);
    rec.add("grid", std::to_string(o.grid));
    std::string header = rec.header_line();
    header += "# violation_intervals=";
    if (scan.violation_intervals.empty()) {
        header += "none";
    }
    for (std::size_t i = 0; i < scan.violation_intervals.size(); ++i) {
        const auto& iv = scan.violation_intervals[i];
        header += (i ? ";" : "") + std::string("[") + format_double(iv.lower) + "," + format_double(iv.upper) + "]";
    }
    header += "\n# argmax_phi=" + (scan.argmax ? format_double(*scan.argmax) : std::string("none")) +
              " g_max=" + format_double(scan.g_max) + "\n";

    emit(o.out, out, [&](std::ostream& s) { write_scan_csv(s, scan, header); });
    if (!o.svg.empty()) {
        emit(o.svg, out, [&](std::ostream& s) { write_scan_svg(s, scan); });
    }
    if (o.out != "-") {
        out << header;
    }
}

struct TablesOptions {
    std::int64_t samples = 10000;
    std::optional<std::uint64_t> seed;
    std::string out = "-";
};

void cmd_tables(const TablesOptions& o, std::ostream& out) {
    if (o.samples <= 0) {
        throw std::invalid_argument("--samples must be positive");
    }
    const std::uint64_t seed = resolve_seed(o.seed);
    const auto gen = Philox4x32::from_seed(seed);
    constexpr std::uint32_t kStream = 0x7AB1u;

    double max_discrepancy = 0.0;
    for (std::int64_t i = 0; i < o.samples; ++i) {
        const auto u = uniforms4(gen, make_counter(static_cast<std::uint64_t>(i), kStream, 0));
        const auto v = uniforms4(gen, make_counter(static_cast<std::uint64_t>(i), kStream, 1));
        const Inefficiencies ineff{u[0], u[1], u[2], u[3], v[0], v[1]};
        for (const auto& row : enumerate_extremes(ineff)) {
            max_discrepancy = std::max(max_discrepancy, std::abs(row.g_numeric - row.g_symbolic));
        }
    }

    Json ideal_rows = Json::array();
    double ideal_max = -1e300;
    double ideal_min = 1e300;
    for (const auto& row : enumerate_extremes(Inefficiencies{})) {
        ideal_rows.push_back(Json{{"row", row.pattern.row},
                                  {"g_limit", std::string(row.pattern.g_expression)},
                                  {"g_numeric", row.g_numeric}});
        ideal_max = std::max(ideal_max, row.g_numeric);
        ideal_min = std::min(ideal_min, row.g_numeric);
    }

    RunRecord rec("tables");
    rec.add("samples", std::to_string(o.samples));
    rec.add("seed", std::to_string(seed));
    Json report{{"header", rec.header_json()},
                {"samples", o.samples},
                {"max_abs_discrepancy", max_discrepancy},
                {"discrepancy_tolerance", 1e-12},
                {"tables_agree", max_discrepancy <= 1e-12},
                {"ideal", Json{{"max_g", ideal_max},
                               {"min_g", ideal_min},
                               {"max_is_zero", ideal_max == 0.0},
                               {"rows", ideal_rows}}}};
    emit(o.out, out, [&](std::ostream& s) { s << report.dump(2) << "\n"; });
}

struct BtccOptions {
    std::string model;
    std::string direction = "0rad";
    std::uint64_t samples = 1000000;
    double tol = kDefaultBtccTolerance;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
    std::string out = "-";
};

void cmd_btcc(const BtccOptions& o, std::ostream& out) {
    const LhvModelPtr model = builtin_model(o.model);
    const AnalyzerAngle a = parse_angle(o.direction);
    const std::uint64_t seed = resolve_seed(o.seed);
    const BtccReport r = btcc_check(*model, a, o.samples, o.tol, seed, o.workers);

    RunRecord rec("btcc");
    rec.add("model", model->name());
    rec.add("direction_rad", a.radians());
    rec.add("samples", std::to_string(o.samples));
    rec.add("tol", o.tol);
    rec.add("seed", std::to_string(seed));
    Json report{{"header", rec.header_json()},
                {"model", model->name()},
                {"kind", model->kind() == ModelKind::deterministic ? "deterministic" : "stochastic"},
                {"direction_rad", r.direction.radians()},
                {"samples", r.samples},
                {"tol", r.tol},
                {"stderr_multiplier", r.stderr_multiplier},
                {"c_same", r.c_same},
                {"c_same_stderr", r.c_same_stderr},
                {"nondeterministic_mass", r.nondeterministic_mass},
                {"verdict", to_string(r.verdict)}};
    emit(o.out, out, [&](std::ostream& s) { s << report.dump(2) << "\n"; });
}

struct SimulateOptions {
    std::string source = "qm";
    SourceOptions qm;
    std::string phi = "45deg";
    std::uint64_t pairs_per_setting = 1000000;
    double detector1_base = 1.0;
    double detector1_amplitude = 0.0;
    double detector2_base = 1.0;
    double detector2_amplitude = 0.0;
    int r = 1;
    int q = 1;
    double significance = kAssumptionASignificance;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
    std::string counts_out = "counts.csv";
    std::string report_out = "report.json";
};

void cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    const double phi = parse_angle_value(o.phi);
    const SettingsQuad quad = quad_from_phi(phi);
    const auto pairs = g_setting_pairs(quad);
    const Outcome r = outcome_from_int(o.r);
    const Outcome q = outcome_from_int(o.q);
    if (r == Outcome::none || q == Outcome::none) {
        throw std::invalid_argument("r and q must be +1 or -1");
    }

    ExperimentConfig cfg;
    if (o.source == "qm") {
        cfg.source = o.qm.source();
    } else {
        cfg.source = builtin_model(o.source);
    }
    cfg.settings.assign(pairs.begin(), pairs.end());
    cfg.pairs_per_setting = o.pairs_per_setting;
    cfg.detector1 = {.base = o.detector1_base, .cos2_amplitude = o.detector1_amplitude};
    cfg.detector2 = {.base = o.detector2_base, .cos2_amplitude = o.detector2_amplitude};
    cfg.seed = resolve_seed(o.seed);

    const CountsTable counts = run_experiment(cfg, o.workers);

    RunRecord rec("simulate");
    rec.add("source", describe(cfg.source));
    rec.add("phi_rad", phi);
    rec.add("pairs_per_setting", std::to_string(cfg.pairs_per_setting));
    rec.add("detector1", format_double(o.detector1_base) + "+" + format_double(o.detector1_amplitude) + "*cos2u");
    rec.add("detector2", format_double(o.detector2_base) + "+" + format_double(o.detector2_amplitude) + "*cos2u");
    rec.add("r", std::to_string(o.r));
    rec.add("q", std::to_string(o.q));
    rec.add("significance", o.significance);
    rec.add("seed", std::to_string(cfg.seed));

    Json report{{"header", rec.header_json()}};
    if (std::holds_alternative<QmSource>(cfg.source)) {
        report["qm_loss_model"] = kQmLossNote;
    }
    const auto guarded = [&](const char* key, auto&& compute) {
        try {
            report[key] = compute();
        } catch (const std::exception& e) {
            report[key] = Json{{"error", e.what()}};
        }
    };
    guarded("chsh", [&] { return to_json(chsh_from_counts(counts, quad)); });
    guarded("ratio", [&] { return to_json(ratio_statistic(counts, quad, r, q)); });
    guarded("g", [&] { return to_json(g_statistic(probabilities_from_counts(counts), quad, r, q)); });
    guarded("assumption_a", [&] { return to_json(assumption_a_test(counts, o.significance)); });

    emit(o.counts_out, out, [&](std::ostream& s) { write_counts_csv(s, counts, rec.header_line()); });
    emit(o.report_out, out, [&](std::ostream& s) { s << report.dump(2) << "\n"; });
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    try {
        args = expand_config(args_in);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Bell-test laboratory: QM predictions, bound scans, LHV checks and simulated experiments",
                 std::string(kToolName)};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    PredictOptions predict;
    auto* predict_cmd = app.add_subcommand("predict", "Print the QM joint outcome table for one setting pair");
    add_source_options(predict_cmd, predict.source);
    predict_cmd->add_option("--a", predict.a, "Wing-1 analyzer angle, e.g. 0rad or 22.5deg")->required();
    predict_cmd->add_option("--b", predict.b, "Wing-2 analyzer angle")->required();

    ScanOptions scan;
    auto* scan_cmd = app.add_subcommand("scan", "Scan G(phi) and locate its violation interval");
    add_source_options(scan_cmd, scan.source);
    scan_cmd->add_option("--grid", scan.grid, "Number of phi grid points on (0, 2pi/3]")->capture_default_str();
    scan_cmd->add_option("--out", scan.out, "CSV output path ('-' for stdout)")->capture_default_str();
    scan_cmd->add_option("--svg", scan.svg, "Optional SVG plot path");

    TablesOptions tables;
    auto* tables_cmd = app.add_subcommand("tables", "Verify the extreme-point table of g on random inefficiencies");
    tables_cmd->add_option("--samples", tables.samples, "Random inefficiency tuples")->capture_default_str();
    tables_cmd->add_option("--seed", tables.seed, "Master seed");
    tables_cmd->add_option("--out", tables.out, "JSON output path ('-' for stdout)")->capture_default_str();

    BtccOptions btcc;
    auto* btcc_cmd = app.add_subcommand("btcc", "Check perfect same-direction correlation for an LHV model");
    btcc_cmd->add_option("--model", btcc.model, "Built-in model, e.g. det_sign or malus_lossy(0.8)")->required();
    btcc_cmd->add_option("--direction", btcc.direction, "Common analyzer angle")->capture_default_str();
    btcc_cmd->add_option("--samples", btcc.samples, "Monte Carlo samples of lambda")->capture_default_str();
    btcc_cmd->add_option("--tol", btcc.tol, "Determinism tolerance")->capture_default_str();
    btcc_cmd->add_option("--seed", btcc.seed, "Master seed");
    btcc_cmd->add_option("--workers", btcc.workers, "Worker threads (0 = all cores)");
    btcc_cmd->add_option("--out", btcc.out, "JSON output path ('-' for stdout)")->capture_default_str();

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a photonic Bell run from a key=value config file");
    sim_cmd->add_option("--source", sim.source, "'qm' or a built-in LHV model")->capture_default_str();
    add_source_options(sim_cmd, sim.qm);
    sim_cmd->add_option("--phi", sim.phi, "Quad angle phi")->capture_default_str();
    sim_cmd->add_option("--pairs-per-setting", sim.pairs_per_setting, "Pairs emitted per setting pair")
        ->capture_default_str();
    sim_cmd->add_option("--detector1-base", sim.detector1_base, "Wing-1 detector efficiency base");
    sim_cmd->add_option("--detector1-amplitude", sim.detector1_amplitude, "Wing-1 cos 2u efficiency amplitude");
    sim_cmd->add_option("--detector2-base", sim.detector2_base, "Wing-2 detector efficiency base");
    sim_cmd->add_option("--detector2-amplitude", sim.detector2_amplitude, "Wing-2 cos 2u efficiency amplitude");
    sim_cmd->add_option("--r", sim.r, "Wing-1 outcome in the statistics (+1/-1)");
    sim_cmd->add_option("--q", sim.q, "Wing-2 outcome in the statistics (+1/-1)");
    sim_cmd->add_option("--significance", sim.significance, "Assumption A test level")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Master seed");
    sim_cmd->add_option("--workers", sim.workers, "Worker threads (0 = all cores)");
    sim_cmd->add_option("--counts-out", sim.counts_out, "Counts CSV path")->capture_default_str();
    sim_cmd->add_option("--report-out", sim.report_out, "Report JSON path")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*predict_cmd) {
            cmd_predict(predict, out);
        } else if (*scan_cmd) {
            cmd_scan(scan, out);
        } else if (*tables_cmd) {
            cmd_tables(tables, out);
        } else if (*btcc_cmd) {
            cmd_btcc(btcc, out);
        } else if (*sim_cmd) {
            cmd_simulate(sim, out);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace bellsim::cli
