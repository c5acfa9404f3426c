#include "compfw/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace compfw {

Vector Matrix::apply(const Vector& x) const {
    assert(static_cast<int>(x.size()) == cols);
    Vector y(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
        const double* r = data.data() + static_cast<size_t>(i) * cols;
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += r[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Vector Matrix::apply_transposed(const Vector& x) const {
    assert(static_cast<int>(x.size()) == rows);
    Vector y(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
        const double* r = data.data() + static_cast<size_t>(i) * cols;
        const double xi = x[i];
        for (int j = 0; j < cols; ++j) y[j] += r[j] * xi;
    }
    return y;
}

Vector Matrix::row(int i) const {
    return Vector(data.begin() + static_cast<size_t>(i) * cols,
                  data.begin() + static_cast<size_t>(i + 1) * cols);
}

Matrix Matrix::transposed() const {
    Matrix t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius_norm() const {
    double acc = 0.0;
    for (double v : data) acc += v * v;
    return std::sqrt(acc);
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    assert(a.rows == b.rows && a.cols == b.cols);
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    assert(a.rows == b.rows && a.cols == b.cols);
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

double dot(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector operator+(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    Vector c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

Vector operator-(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    Vector c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    return c;
}

Vector operator*(double s, const Vector& a) {
    Vector c = a;
    for (double& v : c) v *= s;
    return c;
}

Vector axpy(const Vector& a, double s, const Vector& b) {
    assert(a.size() == b.size());
    Vector c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] += s * b[i];
    return c;
}

bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) { return all_finite(m.data); }

void NoiseSpec::validate() const {
    if (!(moment_order_r > 1.0 && moment_order_r <= 2.0))
        throw ConfigError("noise moment order r must be in (1, 2]");
    if (scale < 0.0) throw ConfigError("noise scale must be nonnegative");
    if (family == NoiseFamily::symmetric_pareto && !(tail_index > moment_order_r))
        throw ConfigError("pareto tail index must exceed the moment order r");
}

Vector sample_noise_vector(const NoiseSpec& spec, int dim, RngState& rng) {
    if (dim < 1) throw ConfigError("noise dimension must be >= 1");
    spec.validate();
    Vector out(dim, 0.0);
    switch (spec.family) {
        case NoiseFamily::none:
            break;
        case NoiseFamily::gaussian:
            for (double& v : out) v = spec.scale * rng.normal();
            break;
        case NoiseFamily::laplace:
            // Inverse CDF with diversity b = scale (variance 2 b^2).
            for (double& v : out) {
                const double u = rng.uniform() - 0.5;
                v = -spec.scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
            }
            break;
        case NoiseFamily::symmetric_pareto: {
            // S * scale * (P - E[P]) with P Pareto(tail_index), x_m = 1 and a
            // uniform random sign S; the sign makes every odd moment vanish.
            const double a = spec.tail_index;
            const double mean_p = a / (a - 1.0);
            for (double& v : out) {
                const double s = rng.coin() ? 1.0 : -1.0;
                const double p = std::pow(rng.uniform(), -1.0 / a);
                v = s * spec.scale * (p - mean_p);
            }
            break;
        }
    }
    return out;
}

double vbe_constant(double r) {
    if (!(r > 1.0 && r <= 2.0)) throw ConfigError("von Bahr-Esseen constant requires r in (1, 2]");
    return r < 2.0 ? 2.0 : 1.0;
}

namespace {

constexpr uint64_t kPowerIterationSeed = 0x70F0C0FFEE5EEDULL;

Vector normalized_or_zero(const Vector& v) {
    const double n = norm2(v);
    if (n <= 0.0) return Vector(v.size(), 0.0);
    return (1.0 / n) * v;
}

}  // namespace

SingularPair top_singular_pair(const Matrix& m, double tol, int max_iter) {
    RngState rng(kPowerIterationSeed);
    return top_singular_pair(m, tol, max_iter, rng);
}

SingularPair top_singular_pair(const Matrix& m, double tol, int max_iter, RngState& rng) {
    if (m.frobenius_norm() == 0.0) throw OracleError("top_singular_pair: zero matrix");
    if (!(tol > 0.0)) throw ConfigError("top_singular_pair: tol must be positive");

    Vector v(m.cols);
    for (double& x : v) x = rng.normal();
    v = normalized_or_zero(v);

    SingularPair out;
    double prev_residual = std::numeric_limits<double>::infinity();
    int stagnant = 0;
    int restarts = 0;
    for (int it = 1; it <= max_iter; ++it) {
        const Vector mv = m.apply(v);
        const double sigma = norm2(mv);
        if (sigma == 0.0) {
            // v landed in the null space; restart from a fresh direction.
            for (double& x : v) x = rng.normal();
            v = normalized_or_zero(v);
            continue;
        }
        const Vector u = (1.0 / sigma) * mv;
        const Vector w = m.apply_transposed(u);
        // M v = sigma u holds exactly for this triple, so convergence is
        // governed by the adjoint equation M^T u = sigma v.
        const double rnorm = norm2(w - sigma * v);

        out.u = u;
        out.sigma = sigma;
        out.v = v;
        out.iterations = it;
        out.residual = rnorm;
        if (rnorm <= tol * sigma) return out;

        v = normalized_or_zero(w);
        // restart only to escape a degenerate start; a residual pinned by a
        // clustered spectrum is not helped by rerolling the direction
        if (std::abs(rnorm - prev_residual) <= 1e-14 * (1.0 + rnorm)) {
            if (++stagnant >= 10 && restarts < 2) {
                for (double& x : v) x = rng.normal();
                v = normalized_or_zero(v);
                stagnant = 0;
                ++restarts;
            }
        } else {
            stagnant = 0;
        }
        prev_residual = rnorm;
    }
    throw OracleError("top_singular_pair: no convergence after " + std::to_string(max_iter) +
                      " iterations, residual " + std::to_string(out.residual));
}

double sym_opnorm_upper(const Matrix& q, int iters) {
    assert(q.rows == q.cols);
    if (q.frobenius_norm() == 0.0) return 0.0;
    RngState rng(kPowerIterationSeed ^ 0xA5A5A5A5ULL);
    Vector v(q.cols);
    for (double& x : v) x = rng.normal();
    v = normalized_or_zero(v);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector w = q.apply(v);
        const double n = norm2(w);
        if (n == 0.0) break;
        lambda = dot(v, w);
        v = (1.0 / n) * w;
    }
    Vector w = q.apply(v);
    lambda = dot(v, w);
    const double residual = norm2(w - lambda * v);
    return std::abs(lambda) + residual;
}

}  // namespace compfw
