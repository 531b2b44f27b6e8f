#include "vecbeck/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecbeck/beckmann.hpp"
#include "vecbeck/schatten.hpp"

namespace vecbeck {

namespace {

double cell_frobenius(int m, int n, const double* a) {
    long double s = 0.0L;
    for (int i = 0; i < m * n; ++i) s += static_cast<long double>(a[i]) * a[i];
    return std::sqrt(static_cast<double>(s));
}

// asymmetry plus negative-eigenvalue mass, scaled by 1 + ||A||_F
double psd_violation_cell(int m, const double* a) {
    Matrix s(m, m);
    long double asym2 = 0.0L;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double d = 0.5 * (a[i * m + j] - a[j * m + i]);
            asym2 += static_cast<long double>(d) * d;
            s(i, j) = 0.5 * (a[i * m + j] + a[j * m + i]);
        }
    const SymEig e = sym_eig(s);
    const double neg = e.lambda.empty() ? 0.0 : std::max(0.0, -e.lambda.back());
    return (std::sqrt(static_cast<double>(asym2)) + neg) / (1.0 + cell_frobenius(m, m, a));
}

// nearest symmetric PSD cell in Frobenius distance, in place
void clamp_psd_cell(int m, double* a) {
    Matrix s(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) = 0.5 * (a[i * m + j] + a[j * m + i]);
    const SymEig e = sym_eig(s);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            long double v = 0.0L;
            for (int r = 0; r < m; ++r) {
                const double lr = e.lambda[r];
                if (lr <= 0.0) continue;
                v += static_cast<long double>(lr) * e.V(i, r) * e.V(j, r);
            }
            a[i * m + j] = static_cast<double>(v);
        }
}

// Alternate between the affine divergence constraint and the per-cell
// symmetric PSD cone. Ends on the affine side with the cone violation small,
// so the result is feasible and PSD up to the stopping threshold.
void refine_certificate(MatrixField& M, const VectorMeasure& mu) {
    const int cells = M.grid.cell_count();
    const double mu_norm = std::max(measure_norm(mu), 1e-300);
    const int max_rounds = 2000;
    for (int round = 0; round < max_rounds; ++round) {
        VectorMeasure r = adjoint_divergence_raw(M);
        for (size_t i = 0; i < r.mass.size(); ++i) r.mass[i] -= mu.mass[i];
        const double rn = measure_norm(r);
        if (rn > 0.0) {
            const double rel = std::clamp(1e-10 * mu_norm / rn, 1e-12, 0.5);
            const VectorField phi = gram_solve(r, rel);
            const MatrixField dphi = discrete_gradient(phi);
            for (size_t i = 0; i < M.val.size(); ++i) M.val[i] -= dphi.val[i];
        }
        double worst = 0.0;
        for (int k = 0; k < cells; ++k) worst = std::max(worst, psd_violation_cell(M.m, M.cell(k)));
        // Stop on the affine side even when capped: feasibility stays exact and
        // the remaining cone violation is reported through the residual fields.
        if (worst <= 5e-9 || round + 1 == max_rounds) break;
        for (int k = 0; k < cells; ++k) clamp_psd_cell(M.m, M.cell(k));
    }
}

double membership_tol(double dual_value, double primal, double gap_tol) {
    return std::max(1e-3 * std::abs(dual_value), 10.0 * gap_tol * std::max(primal, 0.0));
}

VectorField smooth_test_field(const GridSpec& g, int m, Rng& rng) {
    const double pi = 3.14159265358979323846;
    const int waves = 3;
    VectorField v(g, m);
    std::vector<double> amp(static_cast<size_t>(m) * waves);
    std::vector<int> freq(static_cast<size_t>(m) * waves * 3, 0);
    for (int c = 0; c < m; ++c)
        for (int w = 0; w < waves; ++w) {
            amp[static_cast<size_t>(c) * waves + w] = rng.normal();
            for (int d = 0; d < g.dim; ++d)
                freq[(static_cast<size_t>(c) * waves + w) * 3 + d] = static_cast<int>(rng.index(3));
        }
    const int cells = g.cell_count();
    for (int k = 0; k < cells; ++k) {
        const auto x = g.center(k);
        for (int c = 0; c < m; ++c) {
            double val = 0.0;
            for (int w = 0; w < waves; ++w) {
                double term = amp[static_cast<size_t>(c) * waves + w];
                for (int d = 0; d < g.dim; ++d) {
                    const double len = g.cells[d] * g.spacing[d];
                    const int f = freq[(static_cast<size_t>(c) * waves + w) * 3 + d];
                    term *= std::cos(pi * f * (x[d] - g.origin[d]) / len);
                }
                val += term;
            }
            v.at(k, c) = val;
        }
    }
    remove_mean(v);
    double top = 0.0;
    for (int k = 0; k < cells; ++k) {
        long double s = 0.0L;
        for (int c = 0; c < m; ++c) s += static_cast<long double>(v.at(k, c)) * v.at(k, c);
        top = std::max(top, std::sqrt(static_cast<double>(s)));
    }
    if (top > 0.0)
        for (double& x : v.val) x /= top;
    return v;
}

}  // namespace

PolarConeReport monotone_membership(const VectorMeasure& mu, const SolverParams& params,
                                    int witness_count, uint64_t witness_seed) {
    mu.grid.validate();
    if (mu.m != mu.grid.dim)
        throw std::invalid_argument("monotone cone needs m equal to the grid dimension");

    PolarConeReport rep;
    rep.mode = "monotone";
    BeckmannSolution sol = solve_beckmann(mu, params);
    rep.solver = sol.report;
    rep.dual_value = sol.report.dual;
    rep.pairing_value = pairing_measure(coordinate_field(mu.grid), mu);
    rep.gap = rep.dual_value - rep.pairing_value;
    rep.tol = membership_tol(rep.dual_value, sol.report.primal, params.gap_tol);
    rep.member = sol.report.converged && std::abs(rep.gap) <= rep.tol;

    rep.certificate = std::move(sol.M);
    if (rep.member) refine_certificate(rep.certificate, mu);

    const int cells = rep.certificate.grid.cell_count();
    const int m = rep.certificate.m;
    long double wsum = 0.0L, sym_acc = 0.0L, psd_acc = 0.0L, trace = 0.0L;
    for (int k = 0; k < cells; ++k) {
        const double* a = rep.certificate.cell(k);
        const auto idx = rep.certificate.grid.unravel(k);
        const double nuc = cell_nuclear_norm(m, m, a);
        const double fro = cell_frobenius(m, m, a);
        Matrix s(m, m);
        long double asym2 = 0.0L;
        for (int i = 0; i < m; ++i) {
            // The trace pairs against the discrete gradient of x, which is the
            // identity on cells with an outgoing face in direction i and zero on
            // the last cell along that axis, so the dead diagonal entry there
            // never reaches the divergence and is excluded from the identity.
            if (idx[i] + 1 < rep.certificate.grid.cells[i]) trace += a[i * m + i];
            for (int j = 0; j < m; ++j) {
                const double d = 0.5 * (a[i * m + j] - a[j * m + i]);
                asym2 += static_cast<long double>(d) * d;
                s(i, j) = 0.5 * (a[i * m + j] + a[j * m + i]);
            }
        }
        const SymEig e = sym_eig(s);
        const double neg = e.lambda.empty() ? 0.0 : std::max(0.0, -e.lambda.back());
        const double r_sym = std::sqrt(static_cast<double>(asym2)) / (1.0 + fro);
        const double r_psd = neg / (1.0 + fro);
        rep.cert_symmetry_max = std::max(rep.cert_symmetry_max, r_sym);
        rep.cert_psd_max = std::max(rep.cert_psd_max, r_psd);
        wsum += nuc;
        sym_acc += static_cast<long double>(nuc) * r_sym;
        psd_acc += static_cast<long double>(nuc) * r_psd;
    }
    const double w = std::max(static_cast<double>(wsum), 1e-300);
    rep.cert_symmetry_mean = static_cast<double>(sym_acc) / w;
    rep.cert_psd_mean = static_cast<double>(psd_acc) / w;
    rep.trace_identity = std::abs(static_cast<double>(trace) - rep.pairing_value);

    if (witness_count > 0) {
        Rng rng(witness_seed);
        rep.witness_count = witness_count;
        const double scale = std::max(1.0, total_abs_mass(mu));
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < witness_count; ++i) {
            const VectorField wfield = monotone_witness(mu.grid, rng);
            const double pv = pairing_measure(wfield, mu);
            worst = std::min(worst, pv);
            if (pv < -1e-9 * scale) rep.witness_violations.push_back({i, pv});
        }
        rep.worst_witness = worst;
    }
    return rep;
}

VectorMeasure psd_field_to_measure(const MatrixField& S) {
    S.grid.validate();
    if (S.m != S.n || S.m != S.grid.dim)
        throw std::invalid_argument("psd_field_to_measure needs square cells matching the grid dimension");
    const MatrixField Sm = S.kind == FieldKind::density ? to_mass(S) : S;
    const int cells = Sm.grid.cell_count();
    for (int k = 0; k < cells; ++k) {
        const double* a = Sm.cell(k);
        const double fro = cell_frobenius(Sm.m, Sm.m, a);
        Matrix s(Sm.m, Sm.m);
        double asym = 0.0;
        for (int i = 0; i < Sm.m; ++i)
            for (int j = 0; j < Sm.m; ++j) {
                asym = std::max(asym, std::abs(a[i * Sm.m + j] - a[j * Sm.m + i]));
                s(i, j) = 0.5 * (a[i * Sm.m + j] + a[j * Sm.m + i]);
            }
        if (asym > tol_cert * (1.0 + fro))
            throw std::invalid_argument("cell " + std::to_string(k) + " is not symmetric");
        const SymEig e = sym_eig(s);
        const double lmax = e.lambda.empty() ? 0.0 : std::max(0.0, e.lambda.front());
        if (!e.lambda.empty() && e.lambda.back() < -tol_cert * (1.0 + lmax))
            throw std::invalid_argument("cell " + std::to_string(k) + " is not positive semidefinite");
    }
    return discrete_divergence(Sm);
}

double monotone_witness_check(const VectorMeasure& mu, int count, uint64_t seed) {
    mu.grid.validate();
    if (mu.m != mu.grid.dim)
        throw std::invalid_argument("monotone cone needs m equal to the grid dimension");
    if (count <= 0) return 0.0;
    Rng rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i)
        worst = std::min(worst, pairing_measure(monotone_witness(mu.grid, rng), mu));
    return worst;
}

PolarConeReport tangent_cone_check(const VectorMeasure& mu, const VectorField& f,
                                   const SolverParams& params) {
    mu.grid.validate();
    if (!f.grid.same_geometry(mu.grid) || f.m != mu.m)
        throw std::invalid_argument("tangent_cone_check shape mismatch");
    const MatrixField df = discrete_gradient(f);
    const int cells = mu.grid.cell_count();
    double top = 0.0;
    for (int k = 0; k < cells; ++k) top = std::max(top, cell_op_norm(df.m, df.n, df.cell(k)));
    if (std::abs(top - 1.0) > 1e-6)
        throw std::invalid_argument("tangent cone base point needs max cell ||Df||_op = 1");

    PolarConeReport rep;
    rep.mode = "tangent";
    BeckmannSolution sol = solve_beckmann(mu, params);
    rep.solver = sol.report;
    rep.dual_value = sol.report.dual;
    rep.pairing_value = pairing_measure(f, mu);
    rep.gap = rep.dual_value - rep.pairing_value;
    rep.tol = membership_tol(rep.dual_value, sol.report.primal, params.gap_tol);
    rep.member = sol.report.converged && std::abs(rep.gap) <= rep.tol;
    rep.certificate = std::move(sol.M);

    // Equality-case residuals of each supported flux direction against Df.
    long double total = 0.0L;
    for (int k = 0; k < cells; ++k)
        total += cell_nuclear_norm(rep.certificate.m, rep.certificate.n, rep.certificate.cell(k));
    const double cutoff = support_cutoff * static_cast<double>(total);
    long double wsum = 0.0L, sym_acc = 0.0L, psd_acc = 0.0L, iso_acc = 0.0L;
    for (int k = 0; k < cells; ++k) {
        const double nuc = cell_nuclear_norm(rep.certificate.m, rep.certificate.n, rep.certificate.cell(k));
        if (nuc <= cutoff) continue;
        Matrix a = rep.certificate.cell_matrix(k);
        for (double& x : a.a) x /= nuc;
        const EqualityCertificate cert = certify_equality_q1(a, df.cell_matrix(k));
        rep.cert_symmetry_max = std::max(rep.cert_symmetry_max, cert.residual_symmetry);
        rep.cert_psd_max = std::max(rep.cert_psd_max, cert.residual_psd);
        rep.cert_isometry_max = std::max(rep.cert_isometry_max, cert.residual_isometry_or_power);
        wsum += nuc;
        sym_acc += static_cast<long double>(nuc) * cert.residual_symmetry;
        psd_acc += static_cast<long double>(nuc) * cert.residual_psd;
        iso_acc += static_cast<long double>(nuc) * cert.residual_isometry_or_power;
    }
    const double w = std::max(static_cast<double>(wsum), 1e-300);
    rep.cert_symmetry_mean = static_cast<double>(sym_acc) / w;
    rep.cert_psd_mean = static_cast<double>(psd_acc) / w;
    rep.cert_isometry_mean = static_cast<double>(iso_acc) / w;
    return rep;
}

PolarConeReport sobolev_cone_check(const VectorMeasure& h, const VectorField& f, double p,
                                   const SolverParams& params, int witness_count,
                                   uint64_t witness_seed) {
    h.grid.validate();
    if (!f.grid.same_geometry(h.grid) || f.m != h.m)
        throw std::invalid_argument("sobolev_cone_check shape mismatch");
    if (!(p > 1.0) || !std::isfinite(p))
        throw std::invalid_argument("sobolev_cone_check needs p in (1, inf)");
    const double q = conjugate_exponent(p);
    const MatrixField df = discrete_gradient(f);
    const double fn = lp_field_norm(df, p);
    if (std::abs(fn - 1.0) > 1e-6)
        throw std::invalid_argument("sobolev base point needs ||Df||_{L^p} = 1");

    PolarConeReport rep;
    rep.mode = "sobolev";
    LqInstance inst;
    inst.grid = h.grid;
    inst.m = h.m;
    inst.p = p;
    inst.q = q;
    inst.h = h;
    inst.validate();
    LqSolution sol = solve_lq(inst, params);
    rep.solver = sol.report;
    rep.dual_value = sol.report.dual;
    rep.pairing_value = pairing_measure(f, h);
    rep.gap = rep.dual_value - rep.pairing_value;
    rep.tol = membership_tol(rep.dual_value, sol.report.primal, params.gap_tol);
    rep.member = sol.report.converged && std::abs(rep.gap) <= rep.tol;
    if (lp_field_norm(sol.H, q) > 0.0) rep.divv = check_optifun(f, sol.H, q);
    rep.certificate = std::move(sol.H);

    if (witness_count > 0) {
        Rng rng(witness_seed);
        rep.witness_count = witness_count;
        const double scale = std::max(1.0, total_abs_mass(h));
        double worst = std::numeric_limits<double>::infinity();
        bool any = false;
        for (int i = 0; i < witness_count; ++i) {
            VectorField g = smooth_test_field(h.grid, h.m, rng);
            double dd = directional_derivative(f, g, p);
            if (dd < 0.0) {
                for (double& x : g.val) x = -x;
                dd = -dd;
            }
            const double pv = pairing_measure(g, h);
            worst = std::min(worst, pv);
            any = true;
            if (pv < -1e-9 * scale) rep.witness_violations.push_back({i, pv});
        }
        rep.worst_witness = any ? worst : 0.0;
    }
    return rep;
}

VectorField monotone_witness(const GridSpec& g, Rng& rng) {
    g.validate();
    const int n = g.dim;
    Matrix r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = rng.normal() / std::sqrt(static_cast<double>(n));
    const Matrix qmat = r.transposed() * r;
    std::vector<double> shift(n);
    for (int c = 0; c < n; ++c) shift[c] = rng.normal();

    const int kinks = 3;
    std::vector<double> slope0(n), kink_pos(static_cast<size_t>(n) * kinks),
        kink_w(static_cast<size_t>(n) * kinks);
    for (int d = 0; d < n; ++d) {
        slope0[d] = std::abs(rng.normal());
        const double lo = g.origin[d];
        const double hi = lo + g.cells[d] * g.spacing[d];
        for (int j = 0; j < kinks; ++j) {
            kink_pos[static_cast<size_t>(d) * kinks + j] = rng.uniform(lo, hi);
            kink_w[static_cast<size_t>(d) * kinks + j] = std::abs(rng.normal());
        }
    }

    const int cells = g.cell_count();
    VectorField u(g, n);
    for (int k = 0; k < cells; ++k) {
        const auto x = g.center(k);
        for (int c = 0; c < n; ++c) {
            double v = shift[c];
            for (int d = 0; d < n; ++d) v += qmat(c, d) * x[d];
            v += slope0[c] * (x[c] - g.origin[c]);
            for (int j = 0; j < kinks; ++j)
                v += kink_w[static_cast<size_t>(c) * kinks + j] *
                     std::max(x[c] - kink_pos[static_cast<size_t>(c) * kinks + j], 0.0);
            u.at(k, c) = v;
        }
    }
    double top = 1.0;
    for (int k = 0; k < cells; ++k) {
        long double s = 0.0L;
        for (int c = 0; c < n; ++c) s += static_cast<long double>(u.at(k, c)) * u.at(k, c);
        top = std::max(top, std::sqrt(static_cast<double>(s)));
    }
    for (double& x : u.val) x /= top;
    return u;
}

}  // namespace vecbeck
