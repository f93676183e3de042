#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gravloc/cm.hpp"
#include "gravloc/solver.hpp"

namespace gravloc {

/// Uniform symmetric grid for one axis of the density-matrix slice;
/// odd counts put a node at x = 0.
struct SliceGrid1D {
    int n = 0;
    double x_max = 0;
    double dx = 0;

    static SliceGrid1D symmetric(int n, double x_max) {
        if (n < 3 || !(x_max > 0)) throw std::invalid_argument("SliceGrid1D: bad parameters");
        return {n, x_max, 2.0 * x_max / (n - 1)};
    }
    double x(int i) const { return -x_max + dx * i; }
};

/// Hermitian kernel rho~(x_i, x_j) = rho(x_i,0,0; x_j,0,0), stored dense.
struct DensityMatrixSlice {
    SliceGrid1D grid;
    std::vector<cplx> kernel;  // row-major n x n
    bool unit_trace = false;

    cplx& at(int i, int j) { return kernel[static_cast<size_t>(i) * grid.n + j]; }
    const cplx& at(int i, int j) const { return kernel[static_cast<size_t>(i) * grid.n + j]; }

    double trace() const {
        double s = 0;
        for (int i = 0; i < grid.n; ++i) s += at(i, i).real();
        return s * grid.dx;
    }

    double max_abs() const {
        double m = 0;
        for (const cplx& k : kernel) m = std::max(m, std::abs(k));
        return m;
    }

    double hermiticity_error() const {
        double e = 0;
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < i; ++j) e = std::max(e, std::abs(at(i, j) - std::conj(at(j, i))));
        return e;
    }

    void normalize_trace() {
        const double tr = trace();
        if (!(tr > 0)) throw std::runtime_error("DensityMatrixSlice: non-positive trace");
        for (cplx& k : kernel) k /= tr;
        unit_trace = true;
    }
};

/// Tr K^2 / (Tr K)^2 by double trapezoidal sum; independent of normalization.
inline double purity(const DensityMatrixSlice& slice) {
    const double tr = slice.trace();
    if (!(tr > 0)) throw std::runtime_error("purity: non-positive trace, corrupted slice");
    double s = 0;
    for (const cplx& k : slice.kernel) s += std::norm(k);
    s *= slice.grid.dx * slice.grid.dx;
    return s / (tr * tr);
}

/// chi(r) = u(r)/r from a propagated state: linear between nodes, linear
/// extrapolation from the first two nodes down to r = 0, zero beyond r_max.
struct ChiInterpolator {
    const RadialState* state = nullptr;
    cplx chi0;

    explicit ChiInterpolator(const RadialState& s) : state(&s) {
        const cplx c0 = s.u[0] / s.grid.r(0);
        const cplx c1 = s.u[1] / s.grid.r(1);
        chi0 = c0 - (c1 - c0) / (s.grid.r(1) - s.grid.r(0)) * s.grid.r(0);
    }

    cplx operator()(double r) const {
        const RadialGrid& g = state->grid;
        if (r >= g.r(g.n_points - 1)) return {0.0, 0.0};
        if (r <= g.r(0)) {
            const double f = r / g.r(0);
            return chi0 + f * (state->u[0] / g.r(0) - chi0);
        }
        const int i = static_cast<int>(r / g.dr) - 1;  // node index with r(i) <= r
        const double r0 = g.r(i);
        const double f = (r - r0) / g.dr;
        const cplx c0 = state->u[i] / r0;
        const cplx c1 = state->u[i + 1] / g.r(i + 1);
        return c0 + f * (c1 - c0);
    }
};

/// Full meta-wavefunction Xi(X, Y) = psi_cm(|X+Y|^2/4) chi(|X-Y|);
/// symmetric under X <-> Y by construction.
template <class RelAmp>
cplx meta_wavefunction(const CmState& cm, RelAmp&& chi, const std::array<double, 3>& X,
                       const std::array<double, 3>& Y) {
    double s_sq = 0, r_sq = 0;
    for (int k = 0; k < 3; ++k) {
        const double p = X[k] + Y[k];
        const double m = X[k] - Y[k];
        s_sq += p * p;
        r_sq += m * m;
    }
    return cm_amplitude(cm, s_sq / 4.0) * chi(std::sqrt(r_sq));
}

/// Trapezoidal quadrature for the hidden-body integral, reduced to 2D by
/// cylindrical symmetry about the slice axis: Y = (y, s cos a, s sin a),
/// weight 2 pi s.
struct QuadratureSpec {
    int n_axis = 512;    // points along y in [-y_half, y_half]
    int n_radial = 256;  // points along s in [0, s_max]
    double y_half = 0;
    double s_max = 0;
};

inline QuadratureSpec default_quadrature(const CmState& cm, double rel_r_max) {
    QuadratureSpec q;
    const double cm_width = cm.lambda0 / std::sqrt(2.0) * cm.spread_factor();
    q.y_half = 4.0 * std::max(cm_width, cm.lambda0);
    q.s_max = 4.0 * std::max(cm_width, rel_r_max);
    return q;
}

/// Thrown when the integrand has not decayed at the quadrature box edge.
struct QuadratureExtentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// K(x_i, x_j) = int d^3Y Xi(x_i e1, Y) conj(Xi(x_j e1, Y)).
///
/// Each quadrature node q contributes w_q f(x_i, q) conj(f(x_j, q)) with
/// f(x, q) = psi_cm(((x+y)^2 + s^2)/4) chi(sqrt((x-y)^2 + s^2)), so the
/// kernel is assembled as a weighted Gram matrix of per-row factor vectors,
/// blocked over q to bound memory. Every entry is an independent sum in a
/// fixed q order, so the result is bit-identical for any thread count.
template <class RelAmp>
DensityMatrixSlice trace_out_slice(const CmState& cm, RelAmp&& chi, const SliceGrid1D& grid,
                                   const QuadratureSpec& quad, int n_threads = 1) {
    if (quad.n_axis < 2 || quad.n_radial < 2 || !(quad.y_half > 0) || !(quad.s_max > 0))
        throw std::invalid_argument("trace_out_slice: bad quadrature spec");
    if (n_threads < 1) n_threads = 1;

    const int n = grid.n;
    const int ny = quad.n_axis;
    const int ns = quad.n_radial;
    const double dy = 2.0 * quad.y_half / (ny - 1);
    const double ds = quad.s_max / (ns - 1);
    const size_t nq = static_cast<size_t>(ny) * ns;

    // sqrt of the trapezoid weight, folded into the factor vectors
    std::vector<double> sqrt_w(nq);
    std::vector<double> yv(nq), sv(nq);
    for (int j = 0; j < ny; ++j) {
        const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
        for (int k = 0; k < ns; ++k) {
            const double ws = (k == 0 || k == ns - 1) ? 0.5 : 1.0;
            const double s = ds * k;
            const size_t q = static_cast<size_t>(j) * ns + k;
            yv[q] = -quad.y_half + dy * j;
            sv[q] = s;
            sqrt_w[q] = std::sqrt(2.0 * M_PI * s * wy * ws * dy * ds);
        }
    }

    DensityMatrixSlice slice;
    slice.grid = grid;
    slice.kernel.assign(static_cast<size_t>(n) * n, cplx{});

    const size_t block = 8192;
    std::vector<cplx> F(static_cast<size_t>(n) * std::min(block, nq));
    std::vector<double> max_abs_f(n_threads, 0.0), max_edge_f(n_threads, 0.0);

    auto parallel_for = [&](int count, auto&& body) {
        if (n_threads == 1) {
            for (int i = 0; i < count; ++i) body(i, 0);
            return;
        }
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int tid = 0; tid < n_threads; ++tid) {
            pool.emplace_back([&, tid] {
                for (int i = tid; i < count; i += n_threads) body(i, tid);
            });
        }
        for (auto& th : pool) th.join();
    };

    for (size_t q0 = 0; q0 < nq; q0 += block) {
        const size_t bl = std::min(block, nq - q0);

        parallel_for(n, [&](int i, int tid) {
            const double x = grid.x(i);
            cplx* row = F.data() + static_cast<size_t>(i) * bl;
            for (size_t q = 0; q < bl; ++q) {
                const double y = yv[q0 + q];
                const double s = sv[q0 + q];
                const double xp = x + y;
                const double xm = x - y;
                const cplx f = cm_amplitude(cm, (xp * xp + s * s) / 4.0) *
                               chi(std::sqrt(xm * xm + s * s));
                row[q] = f * sqrt_w[q0 + q];
                const double af = std::abs(f);
                max_abs_f[tid] = std::max(max_abs_f[tid], af);
                const size_t jq = (q0 + q) / ns, kq = (q0 + q) % ns;
                if (jq == 0 || jq == static_cast<size_t>(ny - 1) || kq == static_cast<size_t>(ns - 1))
                    max_edge_f[tid] = std::max(max_edge_f[tid], af);
            }
        });

        parallel_for(n, [&](int i, int) {
            const cplx* ri = F.data() + static_cast<size_t>(i) * bl;
            for (int j = 0; j <= i; ++j) {
                const cplx* rj = F.data() + static_cast<size_t>(j) * bl;
                cplx acc{};
                for (size_t q = 0; q < bl; ++q) acc += ri[q] * std::conj(rj[q]);
                slice.at(i, j) += acc;
            }
        });
    }

    const double fmax = *std::max_element(max_abs_f.begin(), max_abs_f.end());
    const double fedge = *std::max_element(max_edge_f.begin(), max_edge_f.end());
    if (fmax > 0 && fedge > 1e-6 * fmax) {
        throw QuadratureExtentError("trace_out_slice: integrand at quadrature box edge is " +
                                    std::to_string(fedge / fmax) + " of its maximum");
    }

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) slice.at(i, j) = std::conj(slice.at(j, i));
    return slice;
}

/// Gravity-free control: both CM and relative parts evolve as exact
/// Gaussians, so the product meta-state is traced with the analytic
/// relative amplitude. Returned in unit-trace mode.
inline DensityMatrixSlice free_density_slice(const PhysicalSetup& setup, double lambda0, double t,
                                             const SliceGrid1D& grid, const QuadratureSpec& quad,
                                             int n_threads = 1) {
    CmState cm{setup, lambda0, t};
    FreeRelativeAmplitude rel{setup, lambda0, t};
    DensityMatrixSlice s = trace_out_slice(cm, rel, grid, quad, n_threads);
    s.normalize_trace();
    return s;
}

}  // namespace gravloc
