#include "subman/spline_sieve.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace subman {

// ---------------------------------------------------------------------------
// Sample and CSV I/O

Sample::Sample(Eigen::MatrixXd x_in, Eigen::VectorXd y_in, Box dom)
    : x(std::move(x_in)), y(std::move(y_in)), domain(std::move(dom)) {
    validate();
}

void Sample::validate() const {
    if (y.size() < 1) throw InvalidArgument("sample must contain at least one observation");
    if (x.rows() != y.size()) throw InvalidArgument("sample x and y have different row counts");
    if (x.cols() < 1 || x.cols() != domain.dim()) {
        throw InvalidArgument("sample covariate dimension does not match the domain box");
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            if (!(v >= domain.lower[j] && v <= domain.upper[j])) {
                throw OutOfDomainError("observation row " + std::to_string(i + 1) + " has x" +
                                       std::to_string(j + 1) + " = " + std::to_string(v) +
                                       " outside the domain box");
            }
        }
        if (!std::isfinite(y[i])) {
            throw InvalidArgument("observation row " + std::to_string(i + 1) + " has a non-finite y");
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = field.find_first_not_of(' ');
        fields.push_back(start == std::string::npos ? std::string{} : field.substr(start));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_number(const std::string& text, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw InvalidArgument("line " + std::to_string(line_no) + ": cannot parse number '" + text + "'");
    }
    return v;
}

}  // namespace

Sample read_sample_csv(std::istream& in, const Box& domain) {
    const int d = domain.dim();
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("sample CSV is empty");
    const auto header = split_csv_line(line);
    if (static_cast<int>(header.size()) != d + 1) {
        throw InvalidArgument("sample CSV header has " + std::to_string(header.size()) +
                              " columns, expected " + std::to_string(d + 1) + " (x1..x" +
                              std::to_string(d) + ",y)");
    }
    if (header.back() != "y") throw InvalidArgument("sample CSV header must end with column 'y'");

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != d + 1) {
            throw InvalidArgument("line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(d + 1));
        }
        for (int j = 0; j < d; ++j) xs.push_back(parse_number(fields[j], line_no));
        ys.push_back(parse_number(fields[d], line_no));
    }
    const auto n = static_cast<Eigen::Index>(ys.size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = xs[static_cast<std::size_t>(i * d + j)];
    }
    return Sample(std::move(x), Eigen::Map<Eigen::VectorXd>(ys.data(), n), domain);
}

Sample read_sample_csv(const std::string& path, const Box& domain) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open sample CSV '" + path + "'");
    return read_sample_csv(in, domain);
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
    const int d = sample.dim();
    for (int j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    const auto old_precision = out.precision(17);
    for (Eigen::Index i = 0; i < sample.size(); ++i) {
        for (int j = 0; j < d; ++j) out << sample.x(i, j) << ',';
        out << sample.y[i] << '\n';
    }
    out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Univariate B-splines

namespace {

// Index s in [degree, J-1] with knots[s] <= t < knots[s+1]; the right end
// of the domain belongs to the last non-empty span.
int find_span(double t, const Eigen::VectorXd& knots, int degree, int count) {
    if (t >= knots[count]) {
        int s = count - 1;
        while (s > degree && knots[s] >= knots[count]) --s;
        return s;
    }
    int lo = degree;
    int hi = count;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (t < knots[mid]) hi = mid;
        else lo = mid;
    }
    return lo;
}

// The degree+1 nonzero basis values N_{span-degree..span} at t.
void basis_funs(int span, double t, int degree, const Eigen::VectorXd& knots, double* out) {
    std::array<double, kMaxSplineDegree + 2> left{};
    std::array<double, kMaxSplineDegree + 2> right{};
    out[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom != 0.0 ? out[r] / denom : 0.0;
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

// First derivatives of N_{span-degree..span} at t, from degree-1 values.
void basis_derivs(int span, double t, int degree, const Eigen::VectorXd& knots, double* out) {
    std::array<double, kMaxSplineDegree + 1> lower{};
    basis_funs(span, t, degree - 1, knots, lower.data());
    for (int a = 0; a <= degree; ++a) {
        const int i = span - degree + a;
        double d = 0.0;
        if (a >= 1) {
            const double denom = knots[i + degree] - knots[i];
            if (denom > 0.0) d += lower[a - 1] / denom;
        }
        if (a <= degree - 1) {
            const double denom = knots[i + degree + 1] - knots[i + 1];
            if (denom > 0.0) d -= lower[a] / denom;
        }
        out[a] = degree * d;
    }
}

}  // namespace

Eigen::VectorXd clamped_uniform_knots(int per_dim_count, int degree) {
    if (degree < 0 || degree > kMaxSplineDegree) {
        throw InvalidArgument("spline degree must be in [0, " + std::to_string(kMaxSplineDegree) + "]");
    }
    if (per_dim_count < degree + 1) {
        throw InvalidArgument("per-dimension basis count must be at least degree + 1");
    }
    const int interior = per_dim_count - degree - 1;
    Eigen::VectorXd knots(per_dim_count + degree + 1);
    for (int i = 0; i <= degree; ++i) {
        knots[i] = 0.0;
        knots[knots.size() - 1 - i] = 1.0;
    }
    for (int i = 1; i <= interior; ++i) {
        knots[degree + i] = static_cast<double>(i) / (interior + 1);
    }
    return knots;
}

Eigen::VectorXd bspline_basis_1d(double t, const Eigen::VectorXd& knots, int degree) {
    if (degree < 0 || degree > kMaxSplineDegree) throw InvalidArgument("unsupported spline degree");
    const int count = static_cast<int>(knots.size()) - degree - 1;
    if (count < 1) throw InvalidArgument("knot vector too short for the requested degree");
    for (Eigen::Index i = 1; i < knots.size(); ++i) {
        if (knots[i] < knots[i - 1]) throw InvalidArgument("knot vector must be non-decreasing");
    }
    if (!(t >= knots[degree] && t <= knots[count])) {
        throw OutOfDomainError("t = " + std::to_string(t) + " outside the spline domain [" +
                               std::to_string(knots[degree]) + ", " + std::to_string(knots[count]) + "]");
    }
    const int span = find_span(t, knots, degree, count);
    std::array<double, kMaxSplineDegree + 1> local{};
    basis_funs(span, t, degree, knots, local.data());
    Eigen::VectorXd values = Eigen::VectorXd::Zero(count);
    for (int a = 0; a <= degree; ++a) values[span - degree + a] = local[a];
    return values;
}

// ---------------------------------------------------------------------------
// Tensor basis

TensorSplineBasis::TensorSplineBasis(Box domain, int per_dim_count, int degree)
    : domain_(std::move(domain)), per_dim_count_(per_dim_count), degree_(degree) {
    const int d = domain_.dim();
    if (d < 1 || d > kMaxSieveDimension) {
        throw InvalidArgument("sieve dimension must be in [1, " + std::to_string(kMaxSieveDimension) + "]");
    }
    const Eigen::VectorXd knots = clamped_uniform_knots(per_dim_count, degree);
    knots_.assign(static_cast<std::size_t>(d), knots);

    double total = std::pow(static_cast<double>(per_dim_count), d);
    double local = std::pow(static_cast<double>(degree + 1), d);
    if (total > 1e7) throw InvalidArgument("tensor basis too large");
    if (local > static_cast<double>(SparseBasisRow::kCapacity)) {
        throw InvalidArgument("(degree + 1)^d exceeds the sparse row capacity");
    }
    total_count_ = static_cast<int>(std::lround(total));
}

TensorSplineBasis TensorSplineBasis::with_total_count(Box domain, int total_count, int degree) {
    const int d = domain.dim();
    if (d < 1) throw InvalidArgument("domain must have positive dimension");
    const int j = static_cast<int>(std::lround(std::pow(static_cast<double>(total_count), 1.0 / d)));
    long long check = 1;
    for (int l = 0; l < d; ++l) check *= j;
    if (total_count < 1 || check != total_count) {
        throw InvalidArgument("total basis count " + std::to_string(total_count) +
                              " is not a perfect " + std::to_string(d) + "-th power");
    }
    return TensorSplineBasis(std::move(domain), j, degree);
}

int TensorSplineBasis::local_basis(int axis, double x, double* values, double* derivs) const {
    const double lo = domain_.lower[axis];
    const double hi = domain_.upper[axis];
    if (!(x >= lo && x <= hi)) {
        throw OutOfDomainError("x" + std::to_string(axis + 1) + " = " + std::to_string(x) +
                               " outside the sieve domain [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
    }
    const double t = std::min(1.0, std::max(0.0, (x - lo) / (hi - lo)));
    const auto& knots = knots_[static_cast<std::size_t>(axis)];
    const int span = find_span(t, knots, degree_, per_dim_count_);
    basis_funs(span, t, degree_, knots, values);
    if (derivs != nullptr) basis_derivs(span, t, degree_, knots, derivs);
    return span - degree_;
}

void TensorSplineBasis::evaluate_sparse(std::span<const double> x, SparseBasisRow& out) const {
    const int d = dimension();
    if (static_cast<int>(x.size()) != d) throw InvalidArgument("point dimension does not match the basis");
    const int order = degree_ + 1;
    std::array<std::array<double, kMaxSplineDegree + 1>, kMaxSieveDimension> vals{};
    std::array<int, kMaxSieveDimension> first{};
    for (int l = 0; l < d; ++l) first[l] = local_basis(l, x[l], vals[l].data(), nullptr);

    std::array<int, kMaxSieveDimension> digit{};
    int count = 0;
    while (true) {
        int index = 0;
        double value = 1.0;
        for (int l = 0; l < d; ++l) {
            index = index * per_dim_count_ + first[l] + digit[l];
            value *= vals[l][digit[l]];
        }
        out.index[count] = index;
        out.value[count] = value;
        ++count;
        int l = d - 1;
        while (l >= 0 && ++digit[l] == order) digit[l--] = 0;
        if (l < 0) break;
    }
    out.count = count;
}

Eigen::VectorXd TensorSplineBasis::evaluate(std::span<const double> x) const {
    thread_local SparseBasisRow row;
    evaluate_sparse(x, row);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(total_count_);
    for (int a = 0; a < row.count; ++a) out[row.index[a]] = row.value[a];
    return out;
}

Eigen::MatrixXd TensorSplineBasis::evaluate_gradient(std::span<const double> x) const {
    if (degree_ < 1) throw UnsupportedOperation("gradient of a degree-0 spline basis is undefined");
    const int d = dimension();
    if (static_cast<int>(x.size()) != d) throw InvalidArgument("point dimension does not match the basis");
    const int order = degree_ + 1;
    std::array<std::array<double, kMaxSplineDegree + 1>, kMaxSieveDimension> vals{};
    std::array<std::array<double, kMaxSplineDegree + 1>, kMaxSieveDimension> ders{};
    std::array<int, kMaxSieveDimension> first{};
    for (int l = 0; l < d; ++l) {
        first[l] = local_basis(l, x[l], vals[l].data(), ders[l].data());
        const double scale = 1.0 / (domain_.upper[l] - domain_.lower[l]);
        for (int a = 0; a < order; ++a) ders[l][a] *= scale;
    }

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(total_count_, d);
    std::array<int, kMaxSieveDimension> digit{};
    while (true) {
        int index = 0;
        for (int l = 0; l < d; ++l) index = index * per_dim_count_ + first[l] + digit[l];
        for (int g = 0; g < d; ++g) {
            double value = 1.0;
            for (int l = 0; l < d; ++l) value *= (l == g) ? ders[l][digit[l]] : vals[l][digit[l]];
            grad(index, g) = value;
        }
        int l = d - 1;
        while (l >= 0 && ++digit[l] == order) digit[l--] = 0;
        if (l < 0) break;
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Fitting

Eigen::MatrixXd symmetric_pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol, int* rank) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the Gram matrix failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double largest = lambda.cwiseAbs().maxCoeff();
    const double cutoff = rel_tol * largest;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
    int r = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (std::abs(lambda[i]) > cutoff && largest > 0.0) {
            inv[i] = 1.0 / lambda[i];
            ++r;
        }
    }
    if (rank != nullptr) *rank = r;
    const Eigen::MatrixXd& v = eig.eigenvectors();
    Eigen::MatrixXd out = v * inv.asDiagonal() * v.transpose();
    return 0.5 * (out + out.transpose());
}

FittedSieve fit_sieve(const Sample& sample, const TensorSplineBasis& basis) {
    if (sample.size() < 1) throw InvalidArgument("cannot fit a sieve to an empty sample");
    if (sample.dim() != basis.dimension()) {
        throw InvalidArgument("sample dimension does not match the sieve basis");
    }
    const Eigen::Index n = sample.size();
    const int k = basis.total_count();
    const int d = sample.dim();

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(k);
    SparseBasisRow row;
    std::vector<double> point(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) point[j] = sample.x(i, j);
        basis.evaluate_sparse(point, row);
        for (int a = 0; a < row.count; ++a) {
            const double va = row.value[a];
            cross[row.index[a]] += va * sample.y[i];
            for (int b = 0; b < row.count; ++b) gram(row.index[a], row.index[b]) += va * row.value[b];
        }
    }
    gram /= static_cast<double>(n);
    cross /= static_cast<double>(n);

    FittedSieve fit(basis);
    fit.gram_inverse_ = symmetric_pseudo_inverse(gram, kPseudoInverseTolerance, &fit.design_rank_);
    fit.coefficients_ = fit.gram_inverse_ * cross;
    fit.gram_ = std::move(gram);
    fit.design_points_ = sample.x;
    fit.residuals_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) point[j] = sample.x(i, j);
        fit.residuals_[i] = sample.y[i] - fit.predict(point);
    }
    return fit;
}

double FittedSieve::predict(std::span<const double> x) const {
    thread_local SparseBasisRow row;
    basis_.evaluate_sparse(x, row);
    double value = 0.0;
    for (int a = 0; a < row.count; ++a) value += row.value[a] * coefficients_[row.index[a]];
    return value;
}

Eigen::VectorXd FittedSieve::predict_gradient(std::span<const double> x) const {
    return basis_.evaluate_gradient(x).transpose() * coefficients_;
}

ScalarField FittedSieve::as_field() const {
    return [this](std::span<const double> x) { return predict(x); };
}

}  // namespace subman
