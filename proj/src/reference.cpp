#include "pc2/reference.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <Eigen/Sparse>

#include "pc2/errors.hpp"
#include "pc2/sampling.hpp"

namespace pc2 {

double heat2d_initial(double x, double y) {
    return 0.5 * (std::sin(4.0 * M_PI * x) + std::sin(4.0 * M_PI * y));
}

namespace {

Eigen::VectorXd linspace(double lo, double hi, std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        v[static_cast<Eigen::Index>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

/// Index and weight for linear interpolation on a uniform grid.
void locate(const Eigen::VectorXd& grid, double x, Eigen::Index& i0, double& frac) {
    const Eigen::Index n = grid.size();
    const double lo = grid[0], hi = grid[n - 1];
    const double span = hi - lo;
    if (x < lo - 1e-12 * span || x > hi + 1e-12 * span)
        throw Error("interpolation point outside the solution grid");
    const double pos = (x - lo) / span * static_cast<double>(n - 1);
    i0 = static_cast<Eigen::Index>(pos);
    if (i0 >= n - 1) i0 = n - 2;
    frac = std::min(std::max(pos - static_cast<double>(i0), 0.0), 1.0);
}

} // namespace

double Heat2dSolution::at(double x, double y, double t) const {
    Eigen::Index ix, iy, it;
    double fx, fy, ft;
    locate(xs, x, ix, fx);
    locate(ys, y, iy, fy);
    locate(ts, t, it, ft);
    double v = 0.0;
    for (int dt = 0; dt <= 1; ++dt) {
        const Eigen::MatrixXd& f = frames[static_cast<std::size_t>(it + dt)];
        const double bilin =
            f(ix, iy) * (1 - fx) * (1 - fy) + f(ix + 1, iy) * fx * (1 - fy) +
            f(ix, iy + 1) * (1 - fx) * fy + f(ix + 1, iy + 1) * fx * fy;
        v += bilin * (dt == 0 ? 1 - ft : ft);
    }
    return v;
}

Heat2dSolution heat2d_solve(const Heat2dParams& params) {
    if (params.nx < 3 || params.ny < 3 || params.nt < 1)
        throw SolverError("heat2d_solve: grid too small");
    if (!(params.alpha > 0.0) || !(params.t_end > 0.0))
        throw SolverError("heat2d_solve: alpha and t_end must be positive");

    const std::size_t nx = params.nx, ny = params.ny;
    const Eigen::Index n = static_cast<Eigen::Index>(nx * ny);
    const double dx = 1.0 / static_cast<double>(nx - 1);
    const double dy = 1.0 / static_cast<double>(ny - 1);
    const double dt = params.t_end / static_cast<double>(params.nt);
    const double rx = params.alpha / (dx * dx);
    const double ry = params.alpha / (dy * dy);

    const auto id = [ny](std::size_t i, std::size_t j) {
        return static_cast<Eigen::Index>(i * ny + j);
    };

    // A = alpha * Laplacian with mirrored ghost nodes (Neumann walls).
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 5);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const Eigen::Index row = id(i, j);
            trips.emplace_back(row, row, -2.0 * (rx + ry));
            if (i == 0) {
                trips.emplace_back(row, id(1, j), 2.0 * rx);
            } else if (i == nx - 1) {
                trips.emplace_back(row, id(nx - 2, j), 2.0 * rx);
            } else {
                trips.emplace_back(row, id(i - 1, j), rx);
                trips.emplace_back(row, id(i + 1, j), rx);
            }
            if (j == 0) {
                trips.emplace_back(row, id(i, 1), 2.0 * ry);
            } else if (j == ny - 1) {
                trips.emplace_back(row, id(i, ny - 2), 2.0 * ry);
            } else {
                trips.emplace_back(row, id(i, j - 1), ry);
                trips.emplace_back(row, id(i, j + 1), ry);
            }
        }
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());

    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    const Eigen::SparseMatrix<double> lhs = identity - (0.5 * dt) * a;
    const Eigen::SparseMatrix<double> rhs = identity + (0.5 * dt) * a;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(lhs);
    if (lu.info() != Eigen::Success)
        throw SolverError("heat2d_solve: factorization failed");

    Heat2dSolution sol;
    sol.params = params;
    sol.xs = linspace(0.0, 1.0, nx);
    sol.ys = linspace(0.0, 1.0, ny);
    sol.ts = linspace(0.0, params.t_end, params.nt + 1);
    sol.frames.reserve(params.nt + 1);

    Eigen::VectorXd u(n);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            u[id(i, j)] = heat2d_initial(sol.xs[static_cast<Eigen::Index>(i)],
                                         sol.ys[static_cast<Eigen::Index>(j)]);

    const auto to_frame = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j)
                f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    v[id(i, j)];
        return f;
    };

    sol.frames.push_back(to_frame(u));
    for (std::size_t k = 0; k < params.nt; ++k) {
        u = lu.solve(rhs * u);
        if (lu.info() != Eigen::Success || !u.allFinite())
            throw SolverError("heat2d_solve: time step failed");
        sol.frames.push_back(to_frame(u));
    }
    return sol;
}

double burgers_initial(double x) { return std::sin(M_PI * x); }

double BurgersSolution::at(double x, double t) const {
    Eigen::Index ix, it;
    double fx, ft;
    locate(xs, x, ix, fx);
    locate(ts, t, it, ft);
    const double lo = frames(it, ix) * (1 - fx) + frames(it, ix + 1) * fx;
    const double hi = frames(it + 1, ix) * (1 - fx) + frames(it + 1, ix + 1) * fx;
    return lo * (1 - ft) + hi * ft;
}

namespace {

/// Tridiagonal solve (Thomas), overwrites the inputs.
void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag,
                       std::vector<double>& sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

} // namespace

BurgersSolution burgers_solve(const BurgersParams& params) {
    if (params.nx < 5 || params.nt < 1)
        throw SolverError("burgers_solve: grid too small");
    if (!(params.nu > 0.0) || !(params.t_end > 0.0))
        throw SolverError("burgers_solve: nu and t_end must be positive");

    const std::size_t nx = params.nx;
    const std::size_t m = nx - 2; // interior unknowns
    const double dx = 1.0 / static_cast<double>(nx - 1);
    const double dt = params.t_end / static_cast<double>(params.nt);
    const double r = params.nu / (dx * dx);

    BurgersSolution sol;
    sol.params = params;
    sol.xs = linspace(0.0, 1.0, nx);
    sol.ts = linspace(0.0, params.t_end, params.nt + 1);
    sol.frames.resize(static_cast<Eigen::Index>(params.nt + 1),
                      static_cast<Eigen::Index>(nx));

    std::vector<double> u(nx);
    for (std::size_t i = 0; i < nx; ++i)
        u[i] = burgers_initial(sol.xs[static_cast<Eigen::Index>(i)]);
    u[0] = u[nx - 1] = 0.0;

    // f_i = nu u_xx - (u^2/2)_x with central differences; ends stay zero.
    const auto rate = [&](const std::vector<double>& v, std::vector<double>& f) {
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double diff = r * (v[i - 1] - 2.0 * v[i] + v[i + 1]);
            const double conv =
                (v[i + 1] * v[i + 1] - v[i - 1] * v[i - 1]) / (4.0 * dx);
            f[i] = diff - conv;
        }
    };

    for (std::size_t i = 0; i < nx; ++i) sol.frames(0, static_cast<Eigen::Index>(i)) = u[i];

    std::vector<double> fn(nx, 0.0), fv(nx, 0.0), v(nx, 0.0);
    std::vector<double> sub(m), diag(m), sup(m), rhs(m);
    for (std::size_t k = 0; k < params.nt; ++k) {
        rate(u, fn);
        v = u;

        // Crank-Nicolson residual G(v) = v - u - dt/2 (f(v) + f(u)).
        bool converged = false;
        for (int iter = 0; iter < 12; ++iter) {
            rate(v, fv);
            double res_norm = 0.0;
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                rhs[i - 1] = -(v[i] - u[i] - 0.5 * dt * (fv[i] + fn[i]));
                res_norm = std::max(res_norm, std::abs(rhs[i - 1]));
            }
            if (res_norm < 1e-12) {
                converged = true;
                break;
            }
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                // d f_i / d v_{i-1}, v_i, v_{i+1}
                const double jl = r + v[i - 1] / (2.0 * dx);
                const double jd = -2.0 * r;
                const double ju = r - v[i + 1] / (2.0 * dx);
                sub[i - 1] = -0.5 * dt * jl;
                diag[i - 1] = 1.0 - 0.5 * dt * jd;
                sup[i - 1] = -0.5 * dt * ju;
            }
            solve_tridiagonal(sub, diag, sup, rhs);
            for (std::size_t i = 1; i + 1 < nx; ++i) v[i] += rhs[i - 1];
        }
        if (!converged)
            throw SolverError("burgers_solve: Newton iteration did not converge");

        u = v;
        for (std::size_t i = 0; i < nx; ++i)
            sol.frames(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(i)) = u[i];
    }
    return sol;
}

double beam_moment(double x, double length, double load) {
    return 0.5 * load * x * (x - length);
}

double BeamSolution::at(double x) const {
    Eigen::Index i0;
    double frac;
    locate(xs, x, i0, frac);
    return w[i0] * (1.0 - frac) + w[i0 + 1] * frac;
}

BeamSolution beam_solve(const BeamParams& params) {
    if (!params.modulus) throw SolverError("beam_solve: modulus function not set");
    if (params.nx < 3) throw SolverError("beam_solve: grid too small");
    if (!(params.length > 0.0) || !(params.inertia > 0.0))
        throw SolverError("beam_solve: length and inertia must be positive");

    const std::size_t n = params.nx;
    const double h = params.length / static_cast<double>(n - 1);

    BeamSolution sol;
    sol.xs = linspace(0.0, params.length, n);
    sol.w.resize(static_cast<Eigen::Index>(n));

    Eigen::VectorXd curvature(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sol.xs[static_cast<Eigen::Index>(i)];
        const double e = params.modulus(x);
        if (!(e > 0.0)) throw SolverError("beam_solve: modulus must stay positive");
        curvature[static_cast<Eigen::Index>(i)] =
            beam_moment(x, params.length, params.load) / (e * params.inertia);
    }

    // w'' = curvature; integrate twice (trapezoid), then remove the linear
    // part so both supports stay at zero.
    Eigen::VectorXd slope(static_cast<Eigen::Index>(n));
    slope[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        slope[static_cast<Eigen::Index>(i)] =
            slope[static_cast<Eigen::Index>(i - 1)] +
            0.5 * h * (curvature[static_cast<Eigen::Index>(i - 1)] +
                       curvature[static_cast<Eigen::Index>(i)]);
    sol.w[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        sol.w[static_cast<Eigen::Index>(i)] =
            sol.w[static_cast<Eigen::Index>(i - 1)] +
            0.5 * h * (slope[static_cast<Eigen::Index>(i - 1)] +
                       slope[static_cast<Eigen::Index>(i)]);
    const double w_end = sol.w[static_cast<Eigen::Index>(n - 1)];
    for (std::size_t i = 0; i < n; ++i)
        sol.w[static_cast<Eigen::Index>(i)] -=
            sol.xs[static_cast<Eigen::Index>(i)] / params.length * w_end;
    return sol;
}

namespace {

struct MomentAcc {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
};

MomentAcc merge(const MomentAcc& a, const MomentAcc& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    MomentAcc out;
    out.n = a.n + b.n;
    const double delta = b.mean - a.mean;
    const double nb = static_cast<double>(b.n), na = static_cast<double>(a.n);
    out.mean = a.mean + delta * nb / static_cast<double>(out.n);
    out.m2 = a.m2 + b.m2 + delta * delta * na * nb / static_cast<double>(out.n);
    return out;
}

MomentAcc accumulate_tree(std::size_t lo, std::size_t hi,
                          const std::function<double(std::size_t)>& sample) {
    if (hi - lo <= 256) {
        MomentAcc acc;
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = sample(i);
            ++acc.n;
            const double delta = x - acc.mean;
            acc.mean += delta / static_cast<double>(acc.n);
            acc.m2 += delta * (x - acc.mean);
        }
        return acc;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return merge(accumulate_tree(lo, mid, sample), accumulate_tree(mid, hi, sample));
}

} // namespace

McsResult mcs_moments(std::size_t n,
                      const std::function<double(std::size_t)>& sample) {
    if (n == 0) throw Error("mcs_moments: need at least one sample");
    const MomentAcc acc = accumulate_tree(0, n, sample);
    McsResult out;
    out.mean = acc.mean;
    out.variance = n > 1 ? acc.m2 / static_cast<double>(n - 1) : 0.0;
    out.count = n;
    if (!std::isfinite(out.mean) || !std::isfinite(out.variance))
        throw NonFiniteError("mcs_moments: non-finite moments");
    return out;
}

namespace {

std::string cache_file(const std::string& dir, const std::string& key) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(key));
    return dir + "/" + buf + ".cache";
}

} // namespace

bool cache_load_matrix(const std::string& dir, const std::string& key,
                       Eigen::MatrixXd& out) {
    std::ifstream in(cache_file(dir, key), std::ios::binary);
    if (!in) return false;

    std::string line;
    if (!std::getline(in, line) || line != "pc2-cache/1") return false;
    if (!std::getline(in, line) || line != "key " + key) return false;

    std::size_t rows = 0, cols = 0;
    if (!std::getline(in, line) ||
        std::sscanf(line.c_str(), "rows %zu cols %zu", &rows, &cols) != 2)
        return false;
    if (rows == 0 || cols == 0) return false;

    std::string body{std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>()};
    const std::size_t tail = body.rfind("checksum ");
    if (tail == std::string::npos || (tail > 0 && body[tail - 1] != '\n'))
        return false;
    const std::string payload = body.substr(0, tail);
    char* end = nullptr;
    const std::uint64_t stated =
        std::strtoull(body.c_str() + tail + 9, &end, 16);
    if (end == body.c_str() + tail + 9 || fnv1a64(payload) != stated)
        return false;

    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
    std::istringstream values(payload);
    std::string tok;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            if (!(values >> tok)) return false;
            end = nullptr;
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::strtod(tok.c_str(), &end);
            if (end == tok.c_str()) return false;
        }
    out = std::move(m);
    return true;
}

void cache_store_matrix(const std::string& dir, const std::string& key,
                        const Eigen::MatrixXd& matrix) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cache_store_matrix: cannot create " + dir);
    const std::string path = cache_file(dir, key);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cache_store_matrix: cannot open " + path);
    out << "pc2-cache/1\nkey " << key << "\nrows " << matrix.rows() << " cols "
        << matrix.cols() << "\n";
    char buf[48];
    std::string payload;
    payload.reserve(static_cast<std::size_t>(matrix.size()) * 24);
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%a", matrix(i, j));
            payload += buf;
            payload += (j + 1 == matrix.cols() ? '\n' : ' ');
        }
    }
    out << payload;
    std::snprintf(buf, sizeof buf, "checksum %016" PRIx64, fnv1a64(payload));
    out << buf << "\n";
    if (!out) throw IoError("cache_store_matrix: write failed for " + path);
}

} // namespace pc2
