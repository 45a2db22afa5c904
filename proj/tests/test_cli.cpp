#include "subman/cli.hpp"
#include "subman/montecarlo.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace subman;

namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path tmp_path(const std::string& name) {
    const fs::path dir = fs::path(SUBMAN_TEST_TMPDIR) / "cli_tmp";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = tmp_path(name);
    std::ofstream(p) << text;
    return p;
}

fs::path write_sample(const std::string& name, const Sample& s) {
    const fs::path p = tmp_path(name);
    std::ofstream f(p);
    write_sample_csv(f, s);
    return p;
}

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double rates_value(const std::string& out, const std::string& key) {
    for (const auto& line : lines_of(out)) {
        const auto f = csv_fields(line);
        if (f.size() == 2 && f[0] == key) return std::stod(f[1]);
    }
    FAIL("missing key " << key);
    return 0.0;
}

const char* kCircleFunctional = R"({"functional": "unit_circle", "k": 36})";

}  // namespace

TEST_CASE("simulate writes a report and its metadata") {
    const fs::path out = tmp_path("t.csv");
    fs::remove(out);
    const Outcome r = run_cli({"simulate", "--dgp", "circle", "--n", "500,1000", "--reps", "10", "--seed", "7",
                               "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(slurp(out));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "n,rmse,bias,sd,ci_l,ci_u,width,coverage");
    CHECK(csv_fields(lines[1])[0] == "500");
    CHECK(csv_fields(lines[2])[0] == "1000");

    const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
    CHECK(meta["dgp"] == "circle_known_manifold");
    CHECK(meta["B"] == 10);
    CHECK(meta["seed"] == 7);
    CHECK(meta["K"] == 36);

    // Same flags, same bytes; without --out the report goes to stdout.
    const Outcome again = run_cli({"simulate", "--dgp", "circle", "--n", "500,1000", "--reps", "10", "--seed", "7"});
    CHECK(again.code == 0);
    CHECK(again.out == slurp(out));
}

TEST_CASE("simulate reads a JSON config and flags override it") {
    const fs::path cfg = write_file("study.json", R"({"dgp": "circle", "n_list": [300, 400], "reps": 3, "seed": 5})");
    const Outcome from_cfg = run_cli({"simulate", "--config", cfg.string()});
    REQUIRE(from_cfg.code == 0);
    CHECK(lines_of(from_cfg.out).size() == 3);
    const Outcome direct = run_cli({"simulate", "--dgp", "circle", "--n", "300,400", "--reps", "3", "--seed", "5"});
    CHECK(direct.out == from_cfg.out);

    const Outcome overridden = run_cli({"simulate", "--config", cfg.string(), "--n", "300"});
    CHECK(lines_of(overridden.out).size() == 2);
}

TEST_CASE("simulate usage errors exit 2") {
    const Outcome missing = run_cli({"simulate", "--n", "500", "--reps", "10"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--dgp") != std::string::npos);
    CHECK(missing.err.find("Usage") != std::string::npos);

    CHECK(run_cli({"simulate", "--dgp", "circle", "--n", "500", "--reps", "1"}).code == 2);
    CHECK(run_cli({"simulate", "--dgp", "circle", "--n", "500,abc", "--reps", "3"}).code == 2);
    CHECK(run_cli({"simulate", "--dgp", "sphere", "--n", "500", "--reps", "3"}).code == 2);
    CHECK(run_cli({"simulate", "--dgp", "circle", "--n", "500", "--reps", "3", "--k", "35"}).code == 2);
    CHECK(run_cli({"simulate", "--dgp", "circle", "--n", "500", "--reps", "3", "--epsilon", "0"}).code == 2);
    CHECK(run_cli({"simulate", "--config", tmp_path("absent.json").string()}).code == 2);
    const fs::path broken = write_file("broken.json", "{\"dgp\": ");
    CHECK(run_cli({"simulate", "--config", broken.string()}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
}

TEST_CASE("simulate reproduces the disk coverage at n = 500") {
    const Outcome r = run_cli({"simulate", "--dgp", "disk", "--n", "500", "--reps", "1000", "--seed", "42"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    const double coverage = std::stod(csv_fields(lines[1])[7]);
    CHECK(coverage >= 0.92);
    CHECK(coverage <= 0.98);
}

TEST_CASE("estimate on simulated circle data") {
    const fs::path data = write_sample("circle8000.csv", draw_sample(DgpSpec::circle(), 8000, 77));
    const fs::path functional = write_file("circle.json", kCircleFunctional);
    const Outcome r = run_cli({"estimate", "--data", data.string(), "--functional", functional.string()});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == EstimateResult::csv_header());
    const auto f = csv_fields(lines[1]);
    REQUIRE(f.size() == 7);
    const double theta = std::stod(f[0]);
    const double se = std::stod(f[1]);
    CHECK(std::abs(theta - std::numbers::pi) < 3.0 * se);
    CHECK(f[4] == "0.95");
    CHECK(f[6] == "36");

    // Printed with 6 significant digits, so the ratio is checked from a run
    // whose values are recomputed in full precision.
    const Outcome level = run_cli({"estimate", "--data", data.string(), "--functional", functional.string(),
                                   "--level", "0.9"});
    REQUIRE(level.code == 0);
    const auto g = csv_fields(lines_of(level.out)[1]);
    CHECK(g[4] == "0.9");
    const Sample s = read_sample_csv(data.string(), Box::cube(2, -2.0, 2.0));
    const FittedSieve fit = fit_sieve(s, TensorSplineBasis::with_total_count(Box::cube(2, -2.0, 2.0), 36));
    const EstimateResult e =
        estimate(LinearOnChart{ChartManifold::unit_circle(), [](std::span<const double>) { return 1.0; }}, fit, 0.9);
    CHECK(lines_of(level.out)[1] == e.csv_row());
    CHECK(std::abs((e.ci_upper - e.ci_lower) / e.std_error - 2.0 * 1.6448536) < 1e-6);
}

TEST_CASE("estimate with the other built-in functionals") {
    const fs::path disk = write_sample("disk2000.csv", draw_sample(DgpSpec::disk(), 2000, 8));
    const fs::path contour = write_file("contour.json", R"({"functional": "upper_contour", "k": 64})");
    const Outcome c = run_cli({"estimate", "--data", disk.string(), "--functional", contour.string()});
    REQUIRE(c.code == 0);
    const auto f = csv_fields(lines_of(c.out)[1]);
    CHECK(std::abs(std::stod(f[0]) - std::numbers::pi) < 4.0 * std::stod(f[1]));
    CHECK(f[5] == "0");

    const fs::path circle = write_sample("circle2000.csv", draw_sample(DgpSpec::circle(), 2000, 8));
    const fs::path squared = write_file("squared.json", R"({"functional": "unit_circle_squared"})");
    CHECK(run_cli({"estimate", "--data", circle.string(), "--functional", squared.string()}).code == 0);
}

TEST_CASE("estimate errors") {
    const fs::path functional = write_file("circle.json", kCircleFunctional);
    const fs::path short_csv = write_file("short.csv", "x1,y\n0.1,0.2\n0.3,0.4\n");
    const Outcome s = run_cli({"estimate", "--data", short_csv.string(), "--functional", functional.string()});
    CHECK(s.code == 2);

    const fs::path outside = write_file("outside.csv", "x1,x2,y\n0.1,0.2,1\n2.5,0.0,1\n");
    const Outcome o = run_cli({"estimate", "--data", outside.string(), "--functional", functional.string()});
    CHECK(o.code == 1);
    CHECK(o.err.find("row 2") != std::string::npos);

    const fs::path unknown = write_file("unknown.json", R"({"functional": "torus"})");
    const fs::path data = write_sample("circle500.csv", draw_sample(DgpSpec::circle(), 500, 1));
    CHECK(run_cli({"estimate", "--data", data.string(), "--functional", unknown.string()}).code == 2);
    CHECK(run_cli({"estimate", "--data", data.string(), "--functional", functional.string(), "--level", "1.5"}).code ==
          2);
    CHECK(run_cli({"estimate", "--functional", functional.string()}).code == 2);

    // A sieve this large for 500 observations draws a warning but still runs.
    const Outcome big = run_cli({"estimate", "--data", data.string(), "--functional", functional.string(), "--k", "144"});
    CHECK(big.code == 0);
    CHECK(big.err.find("warning") != std::string::npos);
}

TEST_CASE("rates on the reference RMSE columns") {
    const fs::path t1 = write_file("circle_ref.csv",
                                   "n,rmse,bias,sd,ci_l,ci_u,width,coverage\n"
                                   "500,0.435,0,0,0,0,0,0.954\n"
                                   "1000,0.305,0,0,0,0,0,0.944\n"
                                   "2000,0.218,0,0,0,0,0,0.945\n"
                                   "4000,0.152,0,0,0,0,0,0.954\n"
                                   "8000,0.110,0,0,0,0,0,0.945\n");
    const Outcome r1 = run_cli({"rates", t1.string()});
    REQUIRE(r1.code == 0);
    CHECK(rates_value(r1.out, "rows") == 5);
    CHECK(std::abs(rates_value(r1.out, "empirical_slope") - (-0.495)) < 0.005);
    CHECK(rates_value(r1.out, "reference_slope") == doctest::Approx(-0.4));
    CHECK(rates_value(r1.out, "parametric_slope") == -0.5);

    const fs::path t2 = write_file("disk_ref.csv",
                                   "n,rmse,bias,sd,ci_l,ci_u,width,coverage\n"
                                   "500,0.0645,0,0,0,0,0,0.959\n"
                                   "1000,0.0455,0,0,0,0,0,0.960\n"
                                   "2000,0.0335,0,0,0,0,0,0.947\n"
                                   "4000,0.0233,0,0,0,0,0,0.958\n"
                                   "8000,0.0172,0,0,0,0,0,0.952\n");
    const Outcome r2 = run_cli({"rates", "--report", t2.string(), "--s", "2", "--d", "2", "--m", "2"});
    REQUIRE(r2.code == 0);
    CHECK(std::abs(rates_value(r2.out, "empirical_slope") - (-0.477)) < 0.005);
    CHECK(rates_value(r2.out, "reference_slope") == doctest::Approx(-0.5));
}

TEST_CASE("rates errors") {
    const fs::path one = write_file("one_row.csv", "n,rmse,bias,sd,ci_l,ci_u,width,coverage\n500,0.4,0,0,0,0,0,0.95\n");
    CHECK(run_cli({"rates", one.string()}).code == 2);
    CHECK(run_cli({"rates", tmp_path("nope.csv").string()}).code == 2);
    const fs::path t = write_file("three.csv",
                                  "n,rmse,bias,sd,ci_l,ci_u,width,coverage\n"
                                  "500,0.4,0,0,0,0,0,0.95\n1000,0.3,0,0,0,0,0,0.95\n2000,0.2,0,0,0,0,0,0.95\n");
    CHECK(run_cli({"rates", t.string(), "--m", "3"}).code == 2);
}

TEST_CASE("rates accepts simulate output unchanged") {
    const fs::path out = tmp_path("sim3.csv");
    REQUIRE(run_cli({"simulate", "--dgp", "circle", "--n", "300,600,1200", "--reps", "4", "--seed", "3", "--out",
                     out.string()})
                .code == 0);
    const Outcome r = run_cli({"rates", out.string()});
    REQUIRE(r.code == 0);
    std::ifstream in(out);
    CHECK(rates_value(r.out, "empirical_slope") == doctest::Approx(empirical_rate(StudyReport::from_csv(in))).epsilon(1e-5));
}
