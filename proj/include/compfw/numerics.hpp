#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Dense vectors/matrices, counter-based RNG, heavy-tailed noise samplers and
// the power-iteration top-singular-pair used by the nuclear-norm LMO.

namespace compfw {

using Vector = std::vector<double>;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct OracleError : std::runtime_error {
    explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Row-major dense matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    // y = M x
    Vector apply(const Vector& x) const;
    // y = M^T x
    Vector apply_transposed(const Vector& x) const;
    Vector row(int i) const;
    Matrix transposed() const;
    double frobenius_norm() const;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& a);
// a + s*b
Vector axpy(const Vector& a, double s, const Vector& b);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Counter-based generator: value i of the stream is a pure function of
// (seed, i), so identical seed + identical call sequence replays the exact
// stream, and substreams can be derived without touching the parent state.
struct RngState {
    uint64_t seed = 0;
    uint64_t counter = 0;

    RngState() = default;
    explicit RngState(uint64_t s) : seed(s), counter(0) {}

    uint64_t next_u64() {
        uint64_t z = seed + (++counter) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1); never returns 0 so log() is safe.
    double uniform() {
        const double u = (next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Box-Muller; consumes exactly two uniforms per call.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool coin() { return (next_u64() & 1ULL) != 0; }

    // Independent child stream derived from (seed, tag); does not advance this
    // stream. Used for per-step substreams that must be replayable.
    RngState substream(uint64_t tag) const {
        uint64_t z = seed ^ (0xD1B54A32D192ED03ULL + tag * 0x8CB92BA72F3D8DD7ULL);
        z = (z ^ (z >> 29)) * 0xFF51AFD7ED558CCDULL;
        z = (z ^ (z >> 32)) * 0xC4CEB9FE1A85EC53ULL;
        return RngState(z ^ (z >> 32));
    }

    // Child stream keyed by the current position; advances this stream once.
    RngState spawn() { return substream(next_u64()); }
};

enum class NoiseFamily { gaussian, symmetric_pareto, laplace, none };

// Heavy-tailed oracle noise: family + scale, with the tail index and the
// moment order r in (1, 2] that the bound calculators consume.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::none;
    double scale = 0.0;
    double tail_index = 2.5;    // symmetric_pareto only
    double moment_order_r = 2.0;

    static NoiseSpec none() { return NoiseSpec{}; }
    static NoiseSpec gaussian(double scale) { return NoiseSpec{NoiseFamily::gaussian, scale, 2.5, 2.0}; }
    static NoiseSpec laplace(double scale) { return NoiseSpec{NoiseFamily::laplace, scale, 2.5, 2.0}; }
    static NoiseSpec pareto(double scale, double r) {
        return NoiseSpec{NoiseFamily::symmetric_pareto, scale, r + 0.5, r};
    }

    void validate() const;
};

// Mean-zero i.i.d. noise vector from the given family.
Vector sample_noise_vector(const NoiseSpec& spec, int dim, RngState& rng);

// von Bahr-Esseen martingale constant C_r for r in (1, 2]: 1 at r = 2
// (an equality for independent terms), 2 below.
double vbe_constant(double r);

struct SingularPair {
    Vector u;
    double sigma = 0.0;
    Vector v;
    int iterations = 0;
    double residual = 0.0;
};

// Leading singular triple of M by power iteration on M^T M with a
// deterministic seeded start; restarts the direction when the residual
// stagnates. Throws OracleError if the residual is still above tol * sigma
// after max_iter sweeps.
SingularPair top_singular_pair(const Matrix& m, double tol = 1e-10, int max_iter = 20000);
SingularPair top_singular_pair(const Matrix& m, double tol, int max_iter, RngState& rng);

// Upper bound on the spectral norm of a symmetric matrix: Rayleigh quotient
// from power iteration plus the residual norm (valid for symmetric matrices).
double sym_opnorm_upper(const Matrix& q, int iters = 200);

}  // namespace compfw
