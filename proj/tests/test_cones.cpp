#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "vecbeck/beckmann.hpp"
#include "vecbeck/cones.hpp"
#include "vecbeck/grid.hpp"
#include "vecbeck/lq.hpp"
#include "vecbeck/rng.hpp"
#include "vecbeck/schatten.hpp"

using namespace vecbeck;
using doctest::Approx;

namespace {

GridSpec interval(int n, double len = 1.0) {
    GridSpec g;
    g.dim = 1;
    g.cells[0] = n;
    g.spacing[0] = len / n;
    g.validate();
    return g;
}

GridSpec square(int n, double len = 1.0) {
    GridSpec g;
    g.dim = 2;
    g.cells = {n, n, 1};
    g.spacing = {len / n, len / n, 1.0};
    g.validate();
    return g;
}

// Smooth compactly supported profile, zero within two cells of every boundary.
double bump(const GridSpec& g, int k, double radius_frac = 0.3) {
    const auto x = g.center(k);
    double r2 = 0.0;
    for (int d = 0; d < g.dim; ++d) {
        const double len = g.cells[d] * g.spacing[d];
        const double c = g.origin[d] + 0.5 * len;
        const double rho = radius_frac * len;
        const double t = (x[d] - c) / rho;
        r2 += t * t;
    }
    const double w = std::max(0.0, 1.0 - r2);
    return w * w * w;
}

// phi * I on each cell, stored as a density.
MatrixField bump_identity_field(const GridSpec& g, double amp) {
    MatrixField s(g, g.dim, g.dim, FieldKind::density);
    const int cells = g.cell_count();
    for (int k = 0; k < cells; ++k) {
        const double phi = amp * bump(g, k);
        double* a = s.cell(k);
        for (int i = 0; i < g.dim; ++i) a[i * g.dim + i] = phi;
    }
    return s;
}

VectorMeasure two_dirac(const GridSpec& g, int ka, int kb, const std::vector<double>& v) {
    VectorMeasure mu(g, static_cast<int>(v.size()));
    for (size_t c = 0; c < v.size(); ++c) {
        mu.at(ka, static_cast<int>(c)) += v[c];
        mu.at(kb, static_cast<int>(c)) -= v[c];
    }
    return mu;
}

// Divergence of a mass-valued matrix field written out directly from the
// stencil, as a cross-check on the library routine.
VectorMeasure divergence_by_hand(const MatrixField& sm) {
    const GridSpec& g = sm.grid;
    VectorMeasure nu(g, sm.m);
    const int cells = g.cell_count();
    for (int k = 0; k < cells; ++k) {
        const auto idx = g.unravel(k);
        for (int c = 0; c < sm.m; ++c) {
            double acc = 0.0;
            for (int d = 0; d < g.dim; ++d) {
                auto down = idx;
                if (idx[d] >= 1) {
                    down[d] -= 1;
                    acc += sm.cell(g.ravel(down))[c * sm.n + d] / g.spacing[d];
                }
                if (idx[d] <= g.cells[d] - 2) acc -= sm.cell(k)[c * sm.n + d] / g.spacing[d];
            }
            nu.at(k, c) = acc;
        }
    }
    return nu;
}

double dirichlet_dot(const MatrixField& a, const MatrixField& b) {
    long double s = 0.0L;
    for (size_t i = 0; i < a.val.size(); ++i)
        s += static_cast<long double>(a.val[i]) * b.val[i];
    return static_cast<double>(s) * a.grid.cell_volume();
}

}  // namespace

TEST_CASE("psd_field_to_measure: zero field, constant field, bump field") {
    const GridSpec g1 = interval(8, 4.0);  // h = 0.5

    MatrixField zero(g1, 1, 1, FieldKind::density);
    const VectorMeasure mz = psd_field_to_measure(zero);
    for (double v : mz.mass) CHECK(v == 0.0);

    // Constant scalar density c: only the boundary cells carry mass, -c and +c.
    MatrixField cst(g1, 1, 1, FieldKind::density);
    for (int k = 0; k < 8; ++k) cst.cell(k)[0] = 3.7;
    const VectorMeasure mc = psd_field_to_measure(cst);
    CHECK(mc.at(0, 0) == Approx(-3.7).epsilon(1e-14));
    CHECK(mc.at(7, 0) == Approx(3.7).epsilon(1e-14));
    for (int k = 1; k < 7; ++k) CHECK(std::abs(mc.at(k, 0)) <= 1e-14);

    const GridSpec g2 = square(12);
    const MatrixField s = bump_identity_field(g2, 2.0);
    const VectorMeasure mu = psd_field_to_measure(s);

    // Matches the stencil written out by hand.
    const VectorMeasure oracle = divergence_by_hand(to_mass(s));
    REQUIRE(oracle.mass.size() == mu.mass.size());
    for (size_t i = 0; i < mu.mass.size(); ++i)
        CHECK(mu.mass[i] == Approx(oracle.mass[i]).epsilon(1e-13).scale(1.0));

    // Each component is balanced and the coordinate pairing recovers the trace.
    CHECK(is_balanced(mu));
    const double pv = pairing_measure(coordinate_field(g2), mu);
    const MatrixField sm = to_mass(s);
    long double tr = 0.0L;
    for (int k = 0; k < g2.cell_count(); ++k) {
        const double* a = sm.cell(k);
        for (int i = 0; i < 2; ++i) tr += a[i * 2 + i];
    }
    CHECK(pv == Approx(static_cast<double>(tr)).epsilon(1e-12));
}

TEST_CASE("psd_field_to_measure: rejects asymmetric, indefinite, mis-shaped cells") {
    const GridSpec g = square(4);

    MatrixField asym(g, 2, 2, FieldKind::mass);
    double* a = asym.cell(5);
    a[0] = 1.0;
    a[1] = 0.5;
    a[2] = -0.5;
    a[3] = 1.0;
    CHECK_THROWS_AS(psd_field_to_measure(asym), std::invalid_argument);

    MatrixField indef(g, 2, 2, FieldKind::mass);
    double* b = indef.cell(3);
    b[0] = 1.0;
    b[3] = -1.0;
    CHECK_THROWS_AS(psd_field_to_measure(indef), std::invalid_argument);

    MatrixField wrong(g, 1, 1, FieldKind::mass);
    CHECK_THROWS_AS(psd_field_to_measure(wrong), std::invalid_argument);
}

TEST_CASE("monotone_witness: gradient is symmetric PSD away from the top boundary") {
    const GridSpec g = square(10);
    Rng rng(404);
    for (int trial = 0; trial < 8; ++trial) {
        const VectorField w = monotone_witness(g, rng);

        double top = 0.0;
        for (int k = 0; k < g.cell_count(); ++k) {
            double s = 0.0;
            for (int c = 0; c < 2; ++c) s += w.at(k, c) * w.at(k, c);
            top = std::max(top, std::sqrt(s));
        }
        CHECK(top <= 1.0 + 1e-12);

        const MatrixField dw = discrete_gradient(w);
        for (int k = 0; k < g.cell_count(); ++k) {
            const auto idx = g.unravel(k);
            bool interior = true;
            for (int d = 0; d < g.dim; ++d)
                if (idx[d] > g.cells[d] - 2) interior = false;
            if (!interior) continue;
            const Matrix a = dw.cell_matrix(k);
            const double fro = a.frobenius();
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    CHECK(std::abs(a(i, j) - a(j, i)) <= 1e-12 * (1.0 + fro));
            Matrix s(2, 2);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
            const SymEig e = sym_eig(s);
            CHECK(e.lambda.back() >= -1e-12 * (1.0 + std::abs(e.lambda.front())));
        }
    }

    Rng r1(77), r2(77);
    const VectorField w1 = monotone_witness(g, r1);
    const VectorField w2 = monotone_witness(g, r2);
    for (size_t i = 0; i < w1.val.size(); ++i) CHECK(w1.val[i] == w2.val[i]);
}

TEST_CASE("monotone_membership: zero measure belongs to the polar cone") {
    const GridSpec g = square(8);
    VectorMeasure mu(g, 2);
    const PolarConeReport rep = monotone_membership(mu, {}, 8, 5);
    CHECK(rep.member);
    CHECK(rep.gap == 0.0);
    CHECK(rep.pairing_value == 0.0);
    CHECK(rep.trace_identity == 0.0);
    CHECK(rep.witness_violations.empty());
    CHECK(rep.solver.iterations == 0);
}

TEST_CASE("monotone_membership: divergence of a PSD bump is accepted with a clean certificate") {
    const GridSpec g = square(12);
    const MatrixField s = bump_identity_field(g, 2.0);
    const VectorMeasure mu = psd_field_to_measure(s);

    SolverParams params;
    params.gap_tol = 1e-4;
    params.feas_tol = 1e-4;
    params.max_iters = 400000;
    const PolarConeReport rep = monotone_membership(mu, params, 16, 11);

    REQUIRE(rep.solver.converged);
    CHECK(rep.member);
    CHECK(std::abs(rep.gap) <= rep.tol);
    CHECK(rep.cert_symmetry_max <= 1e-6);
    CHECK(rep.cert_psd_max <= 1e-6);
    CHECK(rep.trace_identity <= 1e-6 * std::max(1.0, std::abs(rep.pairing_value)));
    CHECK(rep.witness_violations.empty());
    CHECK(rep.worst_witness >= -1e-9 * std::max(1.0, total_abs_mass(mu)));

    // The refined certificate still satisfies the divergence constraint.
    VectorMeasure r = adjoint_divergence_raw(rep.certificate);
    for (size_t i = 0; i < r.mass.size(); ++i) r.mass[i] -= mu.mass[i];
    CHECK(measure_norm(r) <= 1e-7 * std::max(1.0, measure_norm(mu)));

    // Scaling the measure does not change the verdict.
    VectorMeasure mu2 = mu;
    for (double& v : mu2.mass) v *= 2.5;
    const PolarConeReport rep2 = monotone_membership(mu2, params);
    CHECK(rep2.member == rep.member);
}

TEST_CASE("monotone_membership: anti-aligned dirac pair is rejected with the predicted gap") {
    const GridSpec g = square(16);
    const int ka = g.ravel({4, 4, 0});
    const int kb = g.ravel({11, 11, 0});
    const auto xa = g.center(ka);
    const auto xb = g.center(kb);
    std::vector<double> v(2);
    double d2 = 0.0;
    for (int c = 0; c < 2; ++c) {
        v[c] = xb[c] - xa[c];
        d2 += v[c] * v[c];
    }
    const VectorMeasure mu = two_dirac(g, ka, kb, v);

    SolverParams params;
    params.gap_tol = 5e-4;
    params.feas_tol = 1e-4;
    params.max_iters = 400000;
    const PolarConeReport rep = monotone_membership(mu, params, 64, 21);

    REQUIRE(rep.solver.converged);
    CHECK(!rep.member);
    CHECK(rep.gap == Approx(2.0 * d2).epsilon(0.05));
    CHECK(rep.worst_witness < -1e-8);
    CHECK(!rep.witness_violations.empty());

    // Scaled copy keeps the verdict.
    VectorMeasure mu2 = mu;
    for (double& x : mu2.mass) x *= 2.5;
    const PolarConeReport rep2 = monotone_membership(mu2, params);
    CHECK(rep2.member == rep.member);
}

TEST_CASE("monotone_membership and monotone_witness_check: shape checks and pinned signs") {
    const GridSpec g = square(8);
    VectorMeasure bad(g, 1);
    CHECK_THROWS_AS(monotone_membership(bad), std::invalid_argument);
    CHECK_THROWS_AS(monotone_witness_check(bad, 4, 1), std::invalid_argument);

    VectorMeasure zero(g, 2);
    CHECK(monotone_witness_check(zero, 16, 3) == 0.0);
    CHECK(monotone_witness_check(zero, 0, 3) == 0.0);

    const MatrixField s = bump_identity_field(g, 1.0);
    const VectorMeasure mu = psd_field_to_measure(s);
    CHECK(monotone_witness_check(mu, 32, 9) >= -1e-8);

    const int ka = g.ravel({1, 1, 0});
    const int kb = g.ravel({6, 6, 0});
    const auto xa = g.center(ka);
    const auto xb = g.center(kb);
    const VectorMeasure anti = two_dirac(g, ka, kb, {xb[0] - xa[0], xb[1] - xa[1]});
    CHECK(monotone_witness_check(anti, 64, 9) < -1e-8);
}

TEST_CASE("tangent_cone_check: identity base point reproduces the monotone verdict") {
    const GridSpec g = square(12);
    SolverParams params;
    params.gap_tol = 5e-4;
    params.feas_tol = 1e-4;
    params.max_iters = 400000;
    const VectorField id = coordinate_field(g);

    const MatrixField s = bump_identity_field(g, 2.0);
    const VectorMeasure member_mu = psd_field_to_measure(s);
    const PolarConeReport mono_m = monotone_membership(member_mu, params);
    const PolarConeReport tang_m = tangent_cone_check(member_mu, id, params);
    CHECK(tang_m.member == mono_m.member);
    CHECK(tang_m.gap == mono_m.gap);
    CHECK(tang_m.member);

    const int ka = g.ravel({3, 3, 0});
    const int kb = g.ravel({8, 8, 0});
    const auto xa = g.center(ka);
    const auto xb = g.center(kb);
    const VectorMeasure anti = two_dirac(g, ka, kb, {xb[0] - xa[0], xb[1] - xa[1]});
    const PolarConeReport mono_a = monotone_membership(anti, params);
    const PolarConeReport tang_a = tangent_cone_check(anti, id, params);
    CHECK(tang_a.member == mono_a.member);
    CHECK(tang_a.gap == mono_a.gap);
    CHECK(!tang_a.member);
}

TEST_CASE("tangent_cone_check: rank-one base point separates aligned from orthogonal pairs") {
    const GridSpec g = square(16);
    // f(x) = v * x_0 with |v| = 1: every cell gradient is v e_0^T.
    const double r = 1.0 / std::sqrt(5.0);
    VectorField f(g, 2);
    for (int k = 0; k < g.cell_count(); ++k) {
        const auto x = g.center(k);
        f.at(k, 0) = r * x[0];
        f.at(k, 1) = 2.0 * r * x[0];
    }

    SolverParams params;
    params.gap_tol = 5e-4;
    params.feas_tol = 1e-4;
    params.max_iters = 400000;

    // Displacement along +e_0, mass along v: pairing equals the cost.
    const int ka = g.ravel({12, 7, 0});
    const int kb = g.ravel({3, 7, 0});
    const auto xa = g.center(ka);
    const auto xb = g.center(kb);
    const VectorMeasure aligned = two_dirac(g, ka, kb, {r, 2.0 * r});
    const PolarConeReport rep_in = tangent_cone_check(aligned, f, params);
    REQUIRE(rep_in.solver.converged);
    CHECK(rep_in.member);
    CHECK(rep_in.pairing_value == Approx(xa[0] - xb[0]).epsilon(1e-10));
    CHECK(rep_in.cert_symmetry_mean <= 0.1);
    CHECK(rep_in.cert_isometry_mean <= 0.1);

    // Displacement along e_1 is invisible to f: the whole cost is gap.
    const int kc = g.ravel({7, 12, 0});
    const int kd = g.ravel({7, 3, 0});
    const auto xc = g.center(kc);
    const auto xd = g.center(kd);
    const VectorMeasure perp = two_dirac(g, kc, kd, {r, 2.0 * r});
    const PolarConeReport rep_out = tangent_cone_check(perp, f, params);
    REQUIRE(rep_out.solver.converged);
    CHECK(!rep_out.member);
    CHECK(std::abs(rep_out.pairing_value) <= 1e-10);
    CHECK(rep_out.gap == Approx(xc[1] - xd[1]).epsilon(0.05));
}

TEST_CASE("tangent_cone_check: base point must have unit operator norm") {
    const GridSpec g = square(8);
    VectorField f = coordinate_field(g);
    for (double& x : f.val) x *= 2.0;
    VectorMeasure mu(g, 2);
    CHECK_THROWS_AS(tangent_cone_check(mu, f, {}), std::invalid_argument);
}

TEST_CASE("sobolev_cone_check: gradient direction of the solution is a member") {
    const GridSpec g = square(12);
    const double pi = 3.14159265358979323846;
    VectorMeasure h(g, 2);
    const double vol = g.cell_volume();
    for (int k = 0; k < g.cell_count(); ++k) {
        const auto x = g.center(k);
        h.at(k, 0) = std::cos(pi * x[0]) * vol;
        h.at(k, 1) = 0.4 * std::cos(2.0 * pi * x[1]) * vol;
    }

    const NeumannOracle oracle = neumann_oracle(h);
    SolverParams params;
    params.gap_tol = 1e-6;
    params.max_iters = 1000000;
    const PolarConeReport rep = sobolev_cone_check(h, oracle.f, 2.0, params, 16, 31);

    REQUIRE(rep.solver.converged);
    CHECK(rep.member);
    CHECK(std::abs(rep.gap) <= rep.tol);
    CHECK(rep.dual_value == Approx(oracle.value).epsilon(1e-3));
    for (double resid : rep.divv) CHECK(resid <= 1e-3);
    CHECK(rep.witness_violations.empty());

    // Orthogonal base point: the pairing vanishes and the full value is gap.
    VectorField gdir(g, 2);
    for (int k = 0; k < g.cell_count(); ++k) {
        const auto x = g.center(k);
        gdir.at(k, 0) = std::cos(2.0 * pi * x[0]) + 0.3 * std::cos(pi * x[1]);
        gdir.at(k, 1) = std::cos(pi * x[0]) * std::cos(pi * x[1]);
    }
    const MatrixField df_star = discrete_gradient(oracle.f);
    const MatrixField dg = discrete_gradient(gdir);
    const double c = dirichlet_dot(dg, df_star) / dirichlet_dot(df_star, df_star);
    for (size_t i = 0; i < gdir.val.size(); ++i) gdir.val[i] -= c * oracle.f.val[i];
    const double n2 = lp_field_norm(discrete_gradient(gdir), 2.0);
    REQUIRE(n2 > 0.0);
    for (double& x : gdir.val) x /= n2;

    const PolarConeReport rep_out = sobolev_cone_check(h, gdir, 2.0, params);
    REQUIRE(rep_out.solver.converged);
    CHECK(!rep_out.member);
    CHECK(std::abs(rep_out.pairing_value) <= 1e-6 * oracle.value);
    CHECK(rep_out.gap == Approx(oracle.value).epsilon(0.05));
}

TEST_CASE("sobolev_cone_check: zero load is a trivial member, bad inputs throw") {
    const GridSpec g = square(8);
    const double pi = 3.14159265358979323846;
    VectorField f(g, 2);
    for (int k = 0; k < g.cell_count(); ++k) f.at(k, 0) = std::cos(pi * g.center(k)[0]);
    const double n = lp_field_norm(discrete_gradient(f), 2.0);
    for (double& x : f.val) x /= n;

    VectorMeasure zero(g, 2);
    const PolarConeReport rep = sobolev_cone_check(zero, f, 2.0);
    CHECK(rep.member);
    CHECK(rep.gap == 0.0);
    for (double resid : rep.divv) CHECK(resid == 0.0);

    CHECK_THROWS_AS(sobolev_cone_check(zero, f, 1.0), std::invalid_argument);
    VectorField f2 = f;
    for (double& x : f2.val) x *= 3.0;
    CHECK_THROWS_AS(sobolev_cone_check(zero, f2, 2.0), std::invalid_argument);
}

TEST_CASE("monotone_membership: repeated runs are bitwise identical") {
    const GridSpec g = interval(48);
    MatrixField s(g, 1, 1, FieldKind::density);
    for (int k = 0; k < 48; ++k) s.cell(k)[0] = 1.5 * bump(g, k);
    const VectorMeasure mu = psd_field_to_measure(s);

    const PolarConeReport r1 = monotone_membership(mu, {}, 8, 13);
    const PolarConeReport r2 = monotone_membership(mu, {}, 8, 13);
    CHECK(r1.member == r2.member);
    CHECK(r1.gap == r2.gap);
    CHECK(r1.worst_witness == r2.worst_witness);
    CHECK(r1.cert_psd_max == r2.cert_psd_max);
    for (size_t i = 0; i < r1.certificate.val.size(); ++i)
        CHECK(r1.certificate.val[i] == r2.certificate.val[i]);
    CHECK(r1.member);
}
