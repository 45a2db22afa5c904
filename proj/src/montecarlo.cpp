#include "subman/montecarlo.hpp"

#include <json.hpp>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace subman {

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

double circle_truth(std::span<const double> x) {
    return x[0] * x[0] + 2.0 * std::sin(x[0]) * x[1];
}

double disk_truth(std::span<const double> x) {
    return (1.0 - x[0] * x[0] - x[1] * x[1]) * (4.0 + std::sin(x[0]) * x[1] + std::cos(x[1]));
}

DgpSpec DgpSpec::circle() {
    DgpSpec dgp;
    dgp.name = DgpName::circle_known_manifold;
    dgp.theta0 = std::numbers::pi;
    dgp.h0 = circle_truth;
    dgp.basis_count = 36;
    return dgp;
}

DgpSpec DgpSpec::disk() {
    DgpSpec dgp;
    dgp.name = DgpName::disk_upper_contour;
    dgp.theta0 = std::numbers::pi;
    dgp.h0 = disk_truth;
    dgp.basis_count = 64;
    return dgp;
}

DgpSpec DgpSpec::from_name(const std::string& name) {
    if (name == "circle" || name == "circle_known_manifold") return circle();
    if (name == "disk" || name == "disk_upper_contour") return disk();
    throw InvalidArgument("unknown dgp '" + name + "' (expected circle or disk)");
}

std::string DgpSpec::label() const {
    return name == DgpName::circle_known_manifold ? "circle_known_manifold" : "disk_upper_contour";
}

FunctionalSpec dgp_functional(const DgpSpec& dgp) {
    const ScalarField unit = [](std::span<const double>) { return 1.0; };
    if (dgp.name == DgpName::circle_known_manifold) {
        return LinearOnChart{ChartManifold::unit_circle(), unit, dgp.chart_points};
    }
    return UpperContour{unit, dgp.domain, dgp.epsilon, dgp.band_points, dgp.indicator_points};
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t n, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(master) ^ n) ^ b);
}

Sample draw_sample(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("sample size must be positive");
    if (!dgp.h0) throw InvalidArgument("dgp has no truth function");
    const int d = dgp.domain.dim();
    boost::random::mt19937_64 engine(splitmix64(seed));
    std::vector<boost::random::uniform_real_distribution<double>> uniforms;
    for (int j = 0; j < d; ++j) uniforms.emplace_back(dgp.domain.lower[j], dgp.domain.upper[j]);
    boost::random::normal_distribution<double> noise(0.0, 1.0);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    std::vector<double> point(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < d; ++j) point[j] = x(i, j) = uniforms[j](engine);
        const double e = noise(engine);
        y[i] = dgp.h0(point) + dgp.noise_sd * e;
    }
    return Sample(std::move(x), std::move(y), dgp.domain);
}

EstimateResult run_replication(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
    const Sample sample = draw_sample(dgp, n, seed);
    const TensorSplineBasis basis = TensorSplineBasis::with_total_count(dgp.domain, dgp.basis_count);
    const FittedSieve fit = fit_sieve(sample, basis);
    return estimate(dgp_functional(dgp), fit, 0.95);
}

std::string StudyReport::csv_header() {
    return "n,rmse,bias,sd,ci_l,ci_u,width,coverage";
}

std::string StudyReport::to_csv() const {
    std::string out = csv_header() + "\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.n, r.rmse, r.bias, r.sd,
                      r.ci_l, r.ci_u, r.width, r.coverage);
        out += buf;
    }
    return out;
}

std::string StudyReport::metadata_json() const {
    nlohmann::json meta;
    meta["dgp"] = dgp;
    meta["K"] = basis_count;
    meta["B"] = replications;
    meta["seed"] = seed;
    meta["n_list"] = nlohmann::json::array();
    for (const auto& r : rows) meta["n_list"].push_back(r.n);
    meta["versions"] = {{"subman", kVersion},
                        {"rng", "mt19937_64 seeded by splitmix64; boost::random distributions"},
                        {"quadrature", "unscrambled Sobol, Joe-Kuo directions, origin first"}};
    return meta.dump(2) + "\n";
}

StudyReport StudyReport::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("study report CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> columns;
    {
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) columns.push_back(field);
    }
    const std::vector<std::string> expected = {"n", "rmse", "bias", "sd", "ci_l", "ci_u", "width", "coverage"};
    if (columns != expected) throw InvalidArgument("study report CSV header must be " + csv_header());

    StudyReport report;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<double> values;
        while (std::getline(ss, field, ',')) {
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (field.empty() || *end != '\0') {
                throw InvalidArgument("study report line " + std::to_string(line_no) + ": bad number '" +
                                      field + "'");
            }
            values.push_back(v);
        }
        if (values.size() != expected.size()) {
            throw InvalidArgument("study report line " + std::to_string(line_no) + " has the wrong field count");
        }
        report.rows.push_back({static_cast<std::size_t>(values[0]), values[1], values[2], values[3], values[4],
                               values[5], values[6], values[7]});
    }
    return report;
}

ReplicationError::ReplicationError(std::size_t n_in, std::size_t replication_in, std::uint64_t seed_in,
                                   const std::string& what)
    : std::runtime_error("replication failed at n=" + std::to_string(n_in) + ", b=" +
                         std::to_string(replication_in) + ", seed=" + std::to_string(seed_in) + ": " + what),
      n(n_in),
      replication(replication_in),
      seed(seed_in) {}

unsigned default_worker_count() {
    if (const char* env = std::getenv("SUBMAN_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

StudyRow summarize(std::size_t n, std::span<const EstimateResult> results, double theta0) {
    const auto b = static_cast<double>(results.size());
    if (results.size() < 2) throw InvalidArgument("a study row needs at least two replications");
    StudyRow row;
    row.n = n;
    double mean = 0.0;
    double sq_err = 0.0;
    for (const auto& r : results) {
        mean += r.theta_hat;
        sq_err += (r.theta_hat - theta0) * (r.theta_hat - theta0);
        row.ci_l += r.ci_lower;
        row.ci_u += r.ci_upper;
        row.width += r.ci_upper - r.ci_lower;
        row.coverage += r.covers(theta0) ? 1.0 : 0.0;
    }
    mean /= b;
    double ss = 0.0;
    for (const auto& r : results) ss += (r.theta_hat - mean) * (r.theta_hat - mean);
    row.rmse = std::sqrt(sq_err / b);
    row.bias = mean - theta0;
    row.sd = std::sqrt(ss / (b - 1.0));
    row.ci_l /= b;
    row.ci_u /= b;
    row.width /= b;
    row.coverage /= b;
    return row;
}

StudyReport run_study(const DgpSpec& dgp, const std::vector<std::size_t>& n_list, std::size_t replications,
                      std::uint64_t seed, unsigned workers) {
    if (replications < 2) throw InvalidArgument("a study needs at least 2 replications");
    if (n_list.empty()) throw InvalidArgument("a study needs at least one sample size");
    for (const auto n : n_list) {
        if (n < 1) throw InvalidArgument("sample sizes must be positive");
    }
    if (workers == 0) workers = default_worker_count();

    const std::size_t jobs = n_list.size() * replications;
    std::vector<EstimateResult> results(jobs);
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed_job = jobs;
    std::string failure_message;

    auto worker = [&] {
        while (true) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            const std::size_t n = n_list[job / replications];
            const std::size_t b = job % replications;
            try {
                results[job] = run_replication(dgp, n, replication_seed(seed, n, b));
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (job < failed_job) {
                    failed_job = job;
                    failure_message = e.what();
                }
                next.store(jobs);
            }
        }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, jobs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failed_job < jobs) {
        const std::size_t n = n_list[failed_job / replications];
        const std::size_t b = failed_job % replications;
        throw ReplicationError(n, b, replication_seed(seed, n, b), failure_message);
    }

    StudyReport report;
    report.replications = replications;
    report.seed = seed;
    report.basis_count = dgp.basis_count;
    report.dgp = dgp.label();
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        report.rows.push_back(summarize(
            n_list[i], std::span<const EstimateResult>(results).subspan(i * replications, replications), dgp.theta0));
    }
    return report;
}

double empirical_rate(const StudyReport& report) {
    if (report.rows.size() < 3) throw InvalidArgument("empirical rate needs at least 3 sample sizes");
    std::vector<double> n;
    std::vector<double> rmse;
    for (const auto& r : report.rows) {
        n.push_back(static_cast<double>(r.n));
        rmse.push_back(r.rmse);
    }
    return loglog_slope(n, rmse);
}

double theoretical_rate(double smoothness, int ambient_dim, int manifold_dim) {
    const double denom = 2.0 * smoothness + ambient_dim - manifold_dim;
    if (!(smoothness > 0.0) || manifold_dim < 0 || manifold_dim > ambient_dim || !(denom > 0.0)) {
        throw InvalidArgument("invalid smoothness or dimensions for the rate exponent");
    }
    return -smoothness / denom;
}

}  // namespace subman
