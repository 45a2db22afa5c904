#include "subman/cli.hpp"

#include "subman/montecarlo.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

namespace subman::cli {

namespace {

using nlohmann::json;

/// Bad flags or configuration; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

template <typename T>
std::optional<T> json_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config field '") + key + "' has the wrong type: " + e.what());
    }
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const long long v = std::strtoll(item.c_str(), &end, 10);
        if (item.empty() || *end != '\0' || v < 1) throw UsageError("--n expects positive integers, got '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw UsageError("--n must list at least one sample size");
    return out;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void warn_sieve_size(int k, std::size_t n, std::ostream& err) {
    if (static_cast<double>(k) * std::log(static_cast<double>(k)) > static_cast<double>(n)) {
        err << "warning: K log K = " << fmt6(k * std::log(static_cast<double>(k))) << " exceeds n = " << n
            << "; the sieve is large for this sample\n";
    }
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string config;
    std::string dgp;
    std::string n_list;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<double> epsilon;
    std::optional<std::size_t> nodes;
    std::optional<std::size_t> band_nodes;
    std::optional<unsigned> workers;
    std::string out;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    json cfg = opt.config.empty() ? json::object() : load_json(opt.config);
    std::string dgp_name = opt.dgp.empty() ? json_field<std::string>(cfg, "dgp").value_or("") : opt.dgp;
    if (dgp_name.empty()) throw UsageError("simulate requires --dgp (circle or disk)");

    std::vector<std::size_t> n_list;
    if (!opt.n_list.empty()) {
        n_list = parse_n_list(opt.n_list);
    } else if (auto from_cfg = json_field<std::vector<std::size_t>>(cfg, "n_list")) {
        n_list = *from_cfg;
    } else {
        n_list = {500, 1000, 2000, 4000, 8000};
    }
    if (n_list.empty()) throw UsageError("n_list must be non-empty");
    for (auto n : n_list) {
        if (n < 1) throw UsageError("sample sizes must be positive");
    }

    const std::size_t reps = opt.reps ? *opt.reps : json_field<std::size_t>(cfg, "reps").value_or(1000);
    if (reps < 2) throw UsageError("--reps must be at least 2");
    const std::uint64_t seed = opt.seed ? *opt.seed : json_field<std::uint64_t>(cfg, "seed").value_or(1);
    const std::string out_path = opt.out.empty() ? json_field<std::string>(cfg, "out").value_or("") : opt.out;

    DgpSpec dgp;
    try {
        dgp = DgpSpec::from_name(dgp_name);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (auto k = opt.k ? opt.k : json_field<int>(cfg, "k")) dgp.basis_count = *k;
    if (auto eps = opt.epsilon ? opt.epsilon : json_field<double>(cfg, "epsilon")) {
        if (!(*eps > 0.0)) throw UsageError("--epsilon must be positive");
        dgp.epsilon = *eps;
    }
    if (auto nodes = opt.nodes ? opt.nodes : json_field<std::size_t>(cfg, "nodes")) {
        if (*nodes < 1) throw UsageError("--nodes must be positive");
        dgp.chart_points = dgp.indicator_points = *nodes;
    }
    if (auto band = opt.band_nodes ? opt.band_nodes : json_field<std::size_t>(cfg, "band_nodes")) {
        if (*band < 1) throw UsageError("--band-nodes must be positive");
        dgp.band_points = *band;
    }
    try {
        (void)TensorSplineBasis::with_total_count(dgp.domain, dgp.basis_count);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    const StudyReport report = run_study(dgp, n_list, reps, seed, opt.workers.value_or(0));
    if (out_path.empty()) {
        out << report.to_csv();
    } else {
        std::ofstream csv(out_path);
        csv << report.to_csv();
        std::ofstream meta(out_path + ".meta.json");
        meta << report.metadata_json();
        if (!csv || !meta) {
            err << "error: cannot write '" << out_path << "'\n";
            return kExitRuntime;
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateOptions {
    std::string data;
    std::string functional;
    std::optional<int> k;
    std::optional<double> level;
    std::optional<double> epsilon;
    std::optional<std::size_t> nodes;
    std::optional<std::size_t> band_nodes;
};

Box domain_from_config(const json& cfg) {
    if (!cfg.contains("domain")) return Box::cube(2, -2.0, 2.0);
    const auto lower = json_field<std::vector<double>>(cfg["domain"], "lower");
    const auto upper = json_field<std::vector<double>>(cfg["domain"], "upper");
    if (!lower || !upper) throw UsageError("domain needs 'lower' and 'upper' arrays");
    try {
        return Box(Eigen::Map<const Eigen::VectorXd>(lower->data(), static_cast<Eigen::Index>(lower->size())),
                   Eigen::Map<const Eigen::VectorXd>(upper->data(), static_cast<Eigen::Index>(upper->size())));
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("invalid domain: ") + e.what());
    }
}

FunctionalSpec functional_from_config(const std::string& name, const Box& domain, double epsilon,
                                      std::size_t nodes, std::size_t band_nodes) {
    const ScalarField unit = [](std::span<const double>) { return 1.0; };
    if (name == "unit_circle" || name == "unit_circle_squared") {
        if (domain.dim() != 2) throw UsageError(name + " needs a 2-dimensional domain");
        if (!(domain.lower.maxCoeff() <= -1.0 && domain.upper.minCoeff() >= 1.0)) {
            throw UsageError(name + " needs a domain containing the unit circle");
        }
        if (name == "unit_circle") return LinearOnChart{ChartManifold::unit_circle(), unit, nodes};
        return TransformOnChart{ChartManifold::unit_circle(),
                                [](double t, std::span<const double>) { return t * t; },
                                [](double t, std::span<const double>) { return 2.0 * t; }, unit, nodes};
    }
    if (name == "upper_contour") return UpperContour{unit, domain, epsilon, band_nodes, nodes};
    throw UsageError("unknown functional '" + name + "' (expected unit_circle, unit_circle_squared, upper_contour)");
}

int cmd_estimate(const EstimateOptions& opt, std::ostream& out, std::ostream& err) {
    const json cfg = load_json(opt.functional);
    const auto name = json_field<std::string>(cfg, "functional");
    if (!name) throw UsageError("functional config needs a 'functional' field");
    const Box domain = domain_from_config(cfg);

    const int k = opt.k ? *opt.k : json_field<int>(cfg, "k").value_or(domain.dim() == 2 ? 36 : 1);
    const int degree = json_field<int>(cfg, "degree").value_or(3);
    const double level = opt.level ? *opt.level : json_field<double>(cfg, "level").value_or(0.95);
    if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0, 1)");
    const double epsilon = opt.epsilon ? *opt.epsilon : json_field<double>(cfg, "epsilon").value_or(kDefaultBandEpsilon);
    if (!(epsilon > 0.0)) throw UsageError("--epsilon must be positive");
    const std::size_t nodes = opt.nodes ? *opt.nodes : json_field<std::size_t>(cfg, "nodes").value_or(kDefaultChartPoints);
    const std::size_t band_nodes =
        opt.band_nodes ? *opt.band_nodes : json_field<std::size_t>(cfg, "band_nodes").value_or(kDefaultBandPoints);
    if (nodes < 1 || band_nodes < 1) throw UsageError("node counts must be positive");

    const FunctionalSpec spec = functional_from_config(*name, domain, epsilon, nodes, band_nodes);
    std::optional<TensorSplineBasis> basis;
    try {
        basis.emplace(TensorSplineBasis::with_total_count(domain, k, degree));
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    Sample sample;
    try {
        sample = read_sample_csv(opt.data, domain);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    warn_sieve_size(k, static_cast<std::size_t>(sample.size()), err);

    const FittedSieve fit = fit_sieve(sample, *basis);
    const EstimateResult result = estimate(spec, fit, level);
    if (result.diagnostics.band_empty) err << "warning: the eps-band around {h_hat = 0} contains no nodes\n";
    out << EstimateResult::csv_header() << '\n' << result.csv_row() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct RatesOptions {
    std::string report;
    double smoothness = 2.0;
    int ambient_dim = 2;
    int manifold_dim = 1;
};

int cmd_rates(const RatesOptions& opt, std::ostream& out) {
    std::ifstream in(opt.report);
    if (!in) throw UsageError("cannot open report '" + opt.report + "'");
    StudyReport report;
    double slope = 0.0;
    double reference = 0.0;
    try {
        report = StudyReport::from_csv(in);
        slope = empirical_rate(report);
        reference = theoretical_rate(opt.smoothness, opt.ambient_dim, opt.manifold_dim);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    out << "rows," << report.rows.size() << '\n';
    out << "empirical_slope," << fmt6(slope) << '\n';
    out << "reference_slope," << fmt6(reference) << '\n';
    out << "parametric_slope," << fmt6(-0.5) << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Plug-in estimation of integral functionals over submanifolds", "subman"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study and write its report CSV");
    simulate->add_option("--config", sim.config, "JSON study config (flags override its fields)");
    simulate->add_option("--dgp", sim.dgp, "Design: circle or disk");
    simulate->add_option("--n", sim.n_list, "Comma-separated sample sizes");
    simulate->add_option("--reps", sim.reps, "Replications per sample size (>= 2)");
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--k", sim.k, "Sieve size K (a perfect square)");
    simulate->add_option("--epsilon", sim.epsilon, "Band half-width for the upper-contour derivative");
    simulate->add_option("--nodes", sim.nodes, "Quadrature nodes for the functional");
    simulate->add_option("--band-nodes", sim.band_nodes, "Quadrature nodes for the band derivative");
    simulate->add_option("--workers", sim.workers, "Worker threads (default: SUBMAN_WORKERS or all cores)");
    simulate->add_option("--out", sim.out, "Report CSV path; a .meta.json sidecar is written next to it");

    EstimateOptions est;
    auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a functional from a data CSV");
    estimate_cmd->add_option("--data", est.data, "CSV with header x1,...,xd,y")->required();
    estimate_cmd->add_option("--functional", est.functional, "JSON functional config")->required();
    estimate_cmd->add_option("--k", est.k, "Sieve size K");
    estimate_cmd->add_option("--level", est.level, "Confidence level");
    estimate_cmd->add_option("--epsilon", est.epsilon, "Band half-width");
    estimate_cmd->add_option("--nodes", est.nodes, "Quadrature nodes for the functional");
    estimate_cmd->add_option("--band-nodes", est.band_nodes, "Quadrature nodes for the band derivative");

    RatesOptions rates;
    auto* rates_cmd = app.add_subcommand("rates", "Fit the log-log RMSE slope of a study report");
    rates_cmd->add_option("report,--report", rates.report, "Report CSV from simulate")->required();
    rates_cmd->add_option("--s", rates.smoothness, "Smoothness s of the reference rate");
    rates_cmd->add_option("--d", rates.ambient_dim, "Ambient dimension d");
    rates_cmd->add_option("--m", rates.manifold_dim, "Manifold dimension m");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out, err);
        if (*estimate_cmd) return cmd_estimate(est, out, err);
        return cmd_rates(rates, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const OutOfDomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace subman::cli
