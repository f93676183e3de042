#include <catch2/catch_amalgamated.hpp>

#include "gravloc/densmat.hpp"
#include "gravloc/solver.hpp"

using namespace gravloc;
using Catch::Matchers::WithinRel;

namespace {
PhysicalSetup paper_setup() {
    const double mass_mp = 0.38e12;
    const double R = 4.8e-5;
    PhysicalSetup s =
        make_setup(mass_mp, mass_mp * kCgs.m_p / (4.0 / 3.0 * M_PI * R * R * R), 5.6);
    return with_initial_width(s, 5.6 * 1.6e-6);
}

SliceGrid1D small_slice_grid(const PhysicalSetup& s) {
    return SliceGrid1D::symmetric(81, 3.0 * std::sqrt(2.0) * s.lambda0);
}

QuadratureSpec small_quad(const CmState& cm, double rel_r_max) {
    QuadratureSpec q = default_quadrature(cm, rel_r_max);
    q.n_axis = 256;
    q.n_radial = 128;
    return q;
}
}  // namespace

TEST_CASE("slice grid geometry") {
    const SliceGrid1D g = SliceGrid1D::symmetric(101, 2.0);
    CHECK(g.x(0) == -2.0);
    CHECK(g.x(100) == 2.0);
    CHECK(g.x(50) == 0.0);  // odd count -> node at the origin
    CHECK_THAT(g.dx, WithinRel(0.04, 1e-14));
    CHECK_THROWS_AS(SliceGrid1D::symmetric(2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(SliceGrid1D::symmetric(11, 0.0), std::invalid_argument);
}

TEST_CASE("chi interpolator: nodes, origin extrapolation, tail cutoff") {
    const PhysicalSetup s = paper_setup();
    const RadialGrid grid = RadialGrid::uniform(400, s.radius / 2.0);
    const RadialState st = initial_state(s, grid);
    const ChiInterpolator chi(st);

    for (const int i : {0, 7, 200, 398}) {
        CHECK(std::abs(chi(grid.r(i)) - st.u[i] / grid.r(i)) < 1e-14 * std::abs(chi(grid.r(0))));
    }
    // between nodes: exactly the chord midpoint
    const cplx mid = chi(0.5 * (grid.r(10) + grid.r(11)));
    const cplx chord = 0.5 * (st.u[10] / grid.r(10) + st.u[11] / grid.r(11));
    CHECK(std::abs(mid - chord) < 1e-14 * std::abs(mid));

    // a Gaussian chi is flat at the origin; the linear extrapolation from
    // the first two nodes lands within O((dr/lambda)^2) of the exact chi(0)
    const double exact0 = std::abs(chi(grid.r(0))) / std::exp(-grid.r(0) * grid.r(0) /
                                                              (2.0 * s.lambda0 * s.lambda0));
    CHECK(std::abs(std::abs(chi(0.0)) - exact0) < 1e-4 * exact0);

    CHECK(chi(grid.r_max) == cplx{});
    CHECK(chi(2.0 * grid.r_max) == cplx{});
}

TEST_CASE("meta-wavefunction: exchange symmetry and factorized value") {
    const PhysicalSetup s = paper_setup();
    const CmState cm = make_cm_state(s, 3.0);
    const FreeRelativeAmplitude chi{s, s.lambda0, 3.0};

    const std::array<double, 3> X{1e-6, -2e-6, 0.5e-6};
    const std::array<double, 3> Y{-0.3e-6, 1.1e-6, 2e-6};
    const cplx a = meta_wavefunction(cm, chi, X, Y);
    const cplx b = meta_wavefunction(cm, chi, Y, X);
    CHECK(a == b);

    double s_sq = 0, r_sq = 0;
    for (int k = 0; k < 3; ++k) {
        s_sq += (X[k] + Y[k]) * (X[k] + Y[k]) / 4.0;
        r_sq += (X[k] - Y[k]) * (X[k] - Y[k]);
    }
    const cplx want = cm_amplitude(cm, s_sq) * chi(std::sqrt(r_sq));
    CHECK(std::abs(a - want) < 1e-14 * std::abs(want));

    // t = 0: a pure real Gaussian in both collective coordinates
    const CmState cm0 = make_cm_state(s, 0.0);
    const FreeRelativeAmplitude chi0{s, s.lambda0, 0.0};
    const cplx v = meta_wavefunction(cm0, chi0, X, Y);
    const double L2 = s.lambda0 * s.lambda0;
    const double gauss = std::abs(meta_wavefunction(cm0, chi0, {0, 0, 0}, {0, 0, 0})) *
                         std::exp(-2.0 * s_sq / L2 - r_sq / (2.0 * L2));
    CHECK(v.imag() == 0.0);
    CHECK_THAT(v.real(), WithinRel(gauss, 1e-12));
}

TEST_CASE("t = 0 product state traces to a pure slice") {
    // equal CM and relative widths factorize the pair state, so the
    // reduced state of the visible body is itself pure
    const PhysicalSetup s = paper_setup();
    // wall at 6 lambda0 so the Dirichlet truncation is negligible against
    // the untruncated analytic reference
    const RadialGrid rgrid = RadialGrid::uniform(3000, 6.0 * s.lambda0);
    const RadialState st = initial_state(s, rgrid);
    const CmState cm = make_cm_state(s, 0.0);
    const SliceGrid1D grid = small_slice_grid(s);

    DensityMatrixSlice slice =
        trace_out_slice(cm, ChiInterpolator(st), grid, small_quad(cm, rgrid.r_max), 2);

    CHECK(slice.hermiticity_error() < 1e-14 * slice.max_abs());
    for (int i = 0; i < grid.n; ++i) {
        CHECK(slice.at(i, i).imag() == 0.0);
        CHECK(slice.at(i, i).real() >= 0.0);
    }
    CHECK_THAT(purity(slice), WithinRel(1.0, 1e-3));

    // and it matches the fully analytic gravity-free kernel
    const DensityMatrixSlice analytic =
        free_density_slice(s, s.lambda0, 0.0, grid, small_quad(cm, rgrid.r_max), 2);
    slice.normalize_trace();
    double diff = 0;
    for (size_t q = 0; q < slice.kernel.size(); ++q)
        diff = std::max(diff, std::abs(slice.kernel[q] - analytic.kernel[q]));
    CHECK(diff < 1e-3 * analytic.max_abs());
}

TEST_CASE("double-Gaussian kernel has purity Lambda-/Lambda+") {
    const double lp = 2.0e-5, lm = 0.4e-5;
    const SliceGrid1D grid = SliceGrid1D::symmetric(401, 4.0 * lp);
    DensityMatrixSlice slice;
    slice.grid = grid;
    slice.kernel.resize(static_cast<size_t>(grid.n) * grid.n);
    for (int i = 0; i < grid.n; ++i) {
        for (int j = 0; j < grid.n; ++j) {
            const double u = grid.x(i) + grid.x(j);
            const double v = grid.x(i) - grid.x(j);
            slice.at(i, j) = std::exp(-u * u / (lp * lp) - v * v / (lm * lm));
        }
    }
    CHECK_THAT(purity(slice), WithinRel(lm / lp, 1e-6));
}

TEST_CASE("purity of exact rank-1 and rank-2 kernels") {
    const SliceGrid1D grid = SliceGrid1D::symmetric(201, 5.0);

    // two exactly orthonormal vectors in the discrete inner product
    std::vector<double> p0(grid.n), p1(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        p0[i] = std::exp(-x * x / 2.0);
        p1[i] = x * std::exp(-x * x / 2.0);  // odd, orthogonal to p0
    }
    auto normalize = [&](std::vector<double>& p) {
        double s = 0;
        for (double v : p) s += v * v;
        s = std::sqrt(s * grid.dx);
        for (double& v : p) v /= s;
    };
    normalize(p0);
    normalize(p1);

    DensityMatrixSlice slice;
    slice.grid = grid;
    slice.kernel.resize(static_cast<size_t>(grid.n) * grid.n);

    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j) slice.at(i, j) = p0[i] * p0[j];
    CHECK_THAT(purity(slice), WithinRel(1.0, 1e-12));

    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            slice.at(i, j) = 0.5 * (p0[i] * p0[j] + p1[i] * p1[j]);
    CHECK_THAT(purity(slice), WithinRel(0.5, 1e-12));
}

TEST_CASE("quadrature refinement leaves the purity unchanged") {
    const PhysicalSetup s = paper_setup();
    const double t = 10.0;
    const CmState cm = make_cm_state(s, t);
    const SliceGrid1D grid = SliceGrid1D::symmetric(61, 3.0 * std::sqrt(2.0) * s.lambda0);

    QuadratureSpec coarse = default_quadrature(cm, s.radius / 2.0);
    coarse.n_axis = 128;
    coarse.n_radial = 64;
    QuadratureSpec fine = coarse;
    fine.n_axis *= 2;
    fine.n_radial *= 2;

    const double pc = purity(free_density_slice(s, s.lambda0, t, grid, coarse, 2));
    const double pf = purity(free_density_slice(s, s.lambda0, t, grid, fine, 2));
    CHECK(std::abs(pc - pf) < 1e-3);
}

TEST_CASE("trace-out is bit-identical for any thread count") {
    const PhysicalSetup s = paper_setup();
    const CmState cm = make_cm_state(s, 10.0);
    const FreeRelativeAmplitude chi{s, s.lambda0, 10.0};
    const SliceGrid1D grid = SliceGrid1D::symmetric(41, 3.0 * std::sqrt(2.0) * s.lambda0);
    const QuadratureSpec quad = small_quad(cm, s.radius / 2.0);

    const DensityMatrixSlice a = trace_out_slice(cm, chi, grid, quad, 1);
    const DensityMatrixSlice b = trace_out_slice(cm, chi, grid, quad, 4);
    const DensityMatrixSlice c = trace_out_slice(cm, chi, grid, quad, 7);
    REQUIRE(a.kernel.size() == b.kernel.size());
    for (size_t q = 0; q < a.kernel.size(); ++q) {
        CHECK(a.kernel[q] == b.kernel[q]);
        CHECK(a.kernel[q] == c.kernel[q]);
    }
}

TEST_CASE("undersized quadrature box is rejected") {
    const PhysicalSetup s = paper_setup();
    const CmState cm = make_cm_state(s, 0.0);
    const FreeRelativeAmplitude chi{s, s.lambda0, 0.0};
    const SliceGrid1D grid = SliceGrid1D::symmetric(21, 2.0 * s.lambda0);

    QuadratureSpec quad;
    quad.n_axis = 32;
    quad.n_radial = 16;
    quad.y_half = 0.5 * s.lambda0;  // integrand still large at the box edge
    quad.s_max = 0.5 * s.lambda0;
    CHECK_THROWS_AS(trace_out_slice(cm, chi, grid, quad, 1), QuadratureExtentError);

    QuadratureSpec bad;
    bad.n_axis = 1;
    CHECK_THROWS_AS(trace_out_slice(cm, chi, grid, bad, 1), std::invalid_argument);
}
