#pragma once

#include "subman/estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace subman {

enum class DgpName { circle_known_manifold, disk_upper_contour };

/// Simulation design: X ~ Uniform(domain), Y = h0(X) + noise_sd * N(0, 1),
/// target theta0 = Gamma(h0).
struct DgpSpec {
    DgpName name = DgpName::circle_known_manifold;
    Box domain = Box::cube(2, -2.0, 2.0);
    double theta0 = 0.0;
    ScalarField h0;
    int basis_count = 36;
    double noise_sd = 1.0;

    std::size_t chart_points = kDefaultChartPoints;
    std::size_t indicator_points = kDefaultIndicatorPoints;
    std::size_t band_points = kDefaultBandPoints;
    double epsilon = kDefaultBandEpsilon;

    /// h0(x) = x1^2 + 2 sin(x1) x2 integrated over the unit circle; K = 36.
    static DgpSpec circle();
    /// h0(x) = (1 - |x|^2)(4 + sin(x1) x2 + cos(x2)), area of {h0 >= 0}; K = 64.
    static DgpSpec disk();
    /// Accepts "circle", "disk" or the full names.
    static DgpSpec from_name(const std::string& name);

    std::string label() const;
};

double circle_truth(std::span<const double> x);
double disk_truth(std::span<const double> x);

/// The target functional of a design, with its quadrature settings.
FunctionalSpec dgp_functional(const DgpSpec& dgp);

/// Seed of replication b at sample size n: a SplitMix64 hash chain over
/// (master, n, b). Independent of execution order.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t n, std::uint64_t b);

/// Draws n observations. The stream is mt19937_64 seeded with
/// SplitMix64(seed); per observation the covariates are drawn first, then
/// the noise, using the Boost.Random uniform and normal distributions.
Sample draw_sample(const DgpSpec& dgp, std::size_t n, std::uint64_t seed);

/// draw_sample -> fit_sieve with the design's K -> estimate at level 0.95.
EstimateResult run_replication(const DgpSpec& dgp, std::size_t n, std::uint64_t seed);

struct StudyRow {
    std::size_t n = 0;
    double rmse = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double ci_l = 0.0;
    double ci_u = 0.0;
    double width = 0.0;
    double coverage = 0.0;
};

struct StudyReport {
    std::vector<StudyRow> rows;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    int basis_count = 0;
    std::string dgp;

    static std::string csv_header();
    /// Header plus one row per sample size, 6 significant digits.
    std::string to_csv() const;
    /// dgp, K, B, seed and version information as a JSON document.
    std::string metadata_json() const;
    /// Parses the CSV written by to_csv(); metadata fields stay empty.
    static StudyReport from_csv(std::istream& in);
};

/// A replication failed; carries its coordinates.
class ReplicationError : public std::runtime_error {
public:
    ReplicationError(std::size_t n, std::size_t replication, std::uint64_t seed, const std::string& what);

    std::size_t n;
    std::size_t replication;
    std::uint64_t seed;
};

/// SUBMAN_WORKERS if set and positive, otherwise the hardware concurrency.
unsigned default_worker_count();

/// Runs B replications per sample size on `workers` threads (0 = default).
/// Results are stored by index and reduced in index order, so the report
/// does not depend on the worker count.
StudyReport run_study(const DgpSpec& dgp, const std::vector<std::size_t>& n_list, std::size_t replications,
                      std::uint64_t seed, unsigned workers = 0);

/// Aggregates B replication results against the truth.
StudyRow summarize(std::size_t n, std::span<const EstimateResult> results, double theta0);

/// Least-squares slope of log(rmse) on log(n); needs >= 3 rows.
double empirical_rate(const StudyReport& report);

/// Minimax rate exponent -s / (2s + d - m).
double theoretical_rate(double smoothness, int ambient_dim, int manifold_dim);

}  // namespace subman
