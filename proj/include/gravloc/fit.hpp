#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gravloc/densmat.hpp"

namespace gravloc {

struct GaussianFit {
    double amplitude = 0;     // kernel units
    double lambda_plus = 0;   // cm, diagonal (ensemble) width
    double lambda_minus = 0;  // cm, off-diagonal (coherence) width
    double rms_residual = 0;  // relative to max |K|
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Solves the 3x3 system M x = b in place; M symmetric positive definite.
inline void solve3(double M[3][3], const double b[3], double x[3]) {
    double a[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a[i][j] = M[i][j];
        a[i][3] = b[i];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int i = col + 1; i < 3; ++i)
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        if (a[piv][col] == 0) throw std::runtime_error("fit: singular normal equations");
        if (piv != col)
            for (int j = 0; j < 4; ++j) std::swap(a[piv][j], a[col][j]);
        for (int i = col + 1; i < 3; ++i) {
            const double f = a[i][col] / a[col][col];
            for (int j = col; j < 4; ++j) a[i][j] -= f * a[col][j];
        }
    }
    for (int i = 2; i >= 0; --i) {
        double s = a[i][3];
        for (int j = i + 1; j < 3; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
}

}  // namespace detail

/// Least-squares fit of A exp(-u^2/L+^2) exp(-v^2/L-^2) to |K| in rotated
/// coordinates u = x_i + x_j, v = x_i - x_j. Damped Gauss-Newton
/// (Levenberg-Marquardt) with a second-moment initial guess; converged when
/// every relative parameter update falls below 1e-10.
inline GaussianFit fit_double_gaussian(const DensityMatrixSlice& slice, int max_iterations = 200) {
    const int n = slice.grid.n;
    std::vector<double> absK(slice.kernel.size());
    double kmax = 0;
    for (size_t q = 0; q < slice.kernel.size(); ++q) {
        absK[q] = std::abs(slice.kernel[q]);
        kmax = std::max(kmax, absK[q]);
    }
    if (!(kmax > 0)) throw std::runtime_error("fit_double_gaussian: degenerate all-zero slice");

    // moment-based initialization: <u^2> of the model is L+^2/2
    double su = 0, sv = 0, sw = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double w = absK[static_cast<size_t>(i) * n + j];
            const double u = slice.grid.x(i) + slice.grid.x(j);
            const double v = slice.grid.x(i) - slice.grid.x(j);
            su += w * u * u;
            sv += w * v * v;
            sw += w;
        }
    }
    double A = kmax;
    double lp = std::sqrt(2.0 * su / sw);
    double lm = std::sqrt(2.0 * sv / sw);

    double mu = 1e-3;  // LM damping
    double prev_cost = -1;
    GaussianFit fit;
    for (int it = 0; it < max_iterations; ++it) {
        double JtJ[3][3] = {{0}}, Jtr[3] = {0, 0, 0};
        double cost = 0;
        const double ilp2 = 1.0 / (lp * lp), ilm2 = 1.0 / (lm * lm);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double u = slice.grid.x(i) + slice.grid.x(j);
                const double v = slice.grid.x(i) - slice.grid.x(j);
                const double e = std::exp(-u * u * ilp2 - v * v * ilm2);
                const double m = A * e;
                const double r = absK[static_cast<size_t>(i) * n + j] - m;
                cost += r * r;
                const double J0 = e;
                const double J1 = m * 2.0 * u * u * ilp2 / lp;
                const double J2 = m * 2.0 * v * v * ilm2 / lm;
                const double J[3] = {J0, J1, J2};
                for (int a = 0; a < 3; ++a) {
                    Jtr[a] += J[a] * r;
                    for (int b = a; b < 3; ++b) JtJ[a][b] += J[a] * J[b];
                }
            }
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < a; ++b) JtJ[a][b] = JtJ[b][a];

        if (prev_cost >= 0) {
            if (cost < prev_cost)
                mu = std::max(mu * 0.3, 1e-12);
            else
                mu = std::min(mu * 4.0, 1e8);
        }
        prev_cost = cost;

        double M[3][3];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) M[a][b] = JtJ[a][b] + (a == b ? mu * JtJ[a][a] : 0.0);
        double d[3];
        detail::solve3(M, Jtr, d);

        // keep widths positive; back off along the step if needed
        double scale = 1.0;
        while (lp + scale * d[1] <= 0 || lm + scale * d[2] <= 0) scale *= 0.5;
        A += scale * d[0];
        lp += scale * d[1];
        lm += scale * d[2];
        fit.iterations = it + 1;

        const double rel = std::max({std::abs(d[0]) * scale / std::max(std::abs(A), 1e-300),
                                     std::abs(d[1]) * scale / lp, std::abs(d[2]) * scale / lm});
        if (rel < 1e-10) {
            fit.converged = true;
            break;
        }
    }

    double cost = 0;
    const double ilp2 = 1.0 / (lp * lp), ilm2 = 1.0 / (lm * lm);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = slice.grid.x(i) + slice.grid.x(j);
            const double v = slice.grid.x(i) - slice.grid.x(j);
            const double r = absK[static_cast<size_t>(i) * n + j] - A * std::exp(-u * u * ilp2 - v * v * ilm2);
            cost += r * r;
        }
    }
    fit.amplitude = A;
    fit.lambda_plus = std::abs(lp);
    fit.lambda_minus = std::abs(lm);
    fit.rms_residual = std::sqrt(cost / (static_cast<double>(n) * n)) / kmax;
    return fit;
}

}  // namespace gravloc
