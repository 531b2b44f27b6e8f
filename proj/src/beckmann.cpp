#include "vecbeck/beckmann.hpp"

#include <cmath>
#include <stdexcept>

#include "vecbeck/parallel.hpp"
#include "vecbeck/rng.hpp"

namespace vecbeck {

namespace {

// Mean-zero copy of u rescaled into the dual-feasible set; scale is the
// factor divided out (>= 1).
VectorField feasible_potential(const VectorField& u, double* scale_out) {
    VectorField ut = u;
    remove_mean(ut);
    const MatrixField Du = discrete_gradient(ut);
    double top = 0.0;
    const int cells = ut.grid.cell_count();
    for (int k = 0; k < cells; ++k) top = std::max(top, cell_op_norm(Du.m, Du.n, Du.cell(k)));
    // Scaling to the constraint boundary is the best dual value on this ray.
    const double scale = top > 0.0 ? top : 1.0;
    for (double& v : ut.val) v /= scale;
    if (scale_out) *scale_out = scale;
    return ut;
}

}  // namespace

double gradient_op_norm(const GridSpec& g) {
    g.validate();
    const int cells = g.cell_count();
    VectorField f(g, 1);
    Rng rng(12345);
    for (double& v : f.val) v = rng.normal();
    remove_mean(f);
    double est = 0.0;
    for (int it = 0; it < 50; ++it) {
        const VectorMeasure w = adjoint_divergence_raw(discrete_gradient(f));
        double nw = 0.0, nf = 0.0;
        for (int k = 0; k < cells; ++k) {
            nw += w.at(k, 0) * w.at(k, 0);
            nf += f.at(k, 0) * f.at(k, 0);
        }
        if (nw == 0.0) break;
        est = std::sqrt(std::sqrt(nw / nf));  // sqrt of the K^T K Rayleigh growth
        const double inv = 1.0 / std::sqrt(nw);
        for (int k = 0; k < cells; ++k) f.at(k, 0) = w.at(k, 0) * inv;
    }
    // Safety margin: power iteration approaches the norm from below.
    return est * 1.01;
}

BeckmannSolution solve_beckmann(const VectorMeasure& mu, const SolverParams& params) {
    mu.grid.validate();
    if (!is_balanced(mu)) throw std::invalid_argument("solve_beckmann requires a balanced measure");
    const GridSpec& g = mu.grid;
    const int m = mu.m, n = g.dim;
    const int cells = g.cell_count();

    BeckmannSolution sol{MatrixField(g, m, n, FieldKind::mass), VectorField(g, m), {}};
    const double mu_norm = measure_norm(mu);
    if (mu_norm == 0.0) {
        sol.report.converged = true;
        return sol;
    }

    const double knorm = gradient_op_norm(g);
    const double tau = params.tau > 0.0 ? params.tau : 0.99 / knorm;
    const double sigma = params.sigma > 0.0 ? params.sigma : 0.99 / knorm;
    const double theta = params.theta;
    const int check_every = std::max(1, params.check_every);

    MatrixField M(g, m, n, FieldKind::mass);
    MatrixField Mbar(g, m, n, FieldKind::mass);
    VectorField u(g, m);
    const size_t words = M.val.size();

    SolveReport rep;
    int iter = 0;
    while (iter < params.max_iters) {
        ++iter;
        // dual ascent on u: u += sigma * (mu - K^T Mbar)
        const VectorMeasure div_bar = discrete_divergence(Mbar);
        for (size_t i = 0; i < u.val.size(); ++i)
            u.val[i] += sigma * (mu.mass[i] - div_bar.mass[i]);

        // primal descent: singular-value soft-threshold of M + tau * Du
        const MatrixField Du = discrete_gradient(u);
        for (size_t i = 0; i < words; ++i) Mbar.val[i] = M.val[i] + tau * Du.val[i];
        parallel_for(cells, [&](size_t k) {
            cell_prox_nuclear(m, n, Mbar.cell(static_cast<int>(k)), tau);
        });
        for (size_t i = 0; i < words; ++i) {
            const double next = Mbar.val[i];
            Mbar.val[i] = next + theta * (next - M.val[i]);
            M.val[i] = next;
        }

        if (iter % check_every != 0 && iter != params.max_iters) continue;

        rep.primal = lp_field_norm(M, 1.0);
        const VectorField ut = feasible_potential(u, nullptr);
        rep.dual = pairing_measure(ut, mu);
        rep.gap = rep.primal - rep.dual;
        const VectorMeasure div_now = discrete_divergence(M);
        long double r2 = 0.0L;
        for (size_t i = 0; i < div_now.mass.size(); ++i) {
            const double d = div_now.mass[i] - mu.mass[i];
            r2 += static_cast<long double>(d) * d;
        }
        rep.div_residual = static_cast<double>(std::sqrt(static_cast<double>(r2))) / mu_norm;
        rep.iterations = iter;
        if (rep.gap <= params.gap_tol * std::max(rep.primal, 1e-300) &&
            rep.div_residual <= params.feas_tol) {
            rep.converged = true;
            break;
        }
    }

    sol.M = M;
    sol.u = feasible_potential(u, nullptr);
    rep.dual = pairing_measure(sol.u, mu);
    rep.gap = rep.primal - rep.dual;
    sol.report = rep;
    return sol;
}

double check_optimality(const MatrixField& M, const VectorField& u) {
    if (M.kind != FieldKind::mass) throw std::invalid_argument("check_optimality expects a mass-flagged flux");
    if (!M.grid.same_geometry(u.grid) || M.m != u.m)
        throw std::invalid_argument("check_optimality shape mismatch");
    const double total = lp_field_norm(M, 1.0);
    if (total <= 0.0) throw std::invalid_argument("check_optimality: zero flux");
    const MatrixField Du = discrete_gradient(u);
    const int cells = M.grid.cell_count();
    const double cutoff = support_cutoff * total;
    long double weighted = 0.0L, weight = 0.0L;
    const int mn = M.m * M.n;
    for (int k = 0; k < cells; ++k) {
        const double nuc = cell_nuclear_norm(M.m, M.n, M.cell(k));
        if (nuc <= cutoff) continue;
        const double* a = Du.cell(k);
        const double* b = M.cell(k);
        double dot = 0.0;
        for (int i = 0; i < mn; ++i) dot += a[i] * b[i];
        weighted += nuc * std::fabs(dot / nuc - 1.0);
        weight += nuc;
    }
    return weight > 0.0L ? static_cast<double>(weighted / weight) : 0.0;
}

Oracle1d oracle_1d(const VectorMeasure& mu) {
    mu.grid.validate();
    if (mu.grid.dim != 1) throw std::invalid_argument("oracle_1d requires a 1-D grid");
    if (!is_balanced(mu)) throw std::invalid_argument("oracle_1d requires a balanced measure");
    const int cells = mu.grid.cells[0];
    const int m = mu.m;
    const double h = mu.grid.spacing[0];

    Oracle1d out;
    out.M = MatrixField(mu.grid, m, 1, FieldKind::mass);
    std::vector<long double> partial(m, 0.0L);
    long double value = 0.0L;
    for (int k = 0; k + 1 < cells; ++k) {
        long double norm2 = 0.0L;
        for (int c = 0; c < m; ++c) {
            partial[c] += mu.at(k, c);
            out.M.cell(k)[c] = static_cast<double>(-h * partial[c]);
            norm2 += partial[c] * partial[c];
        }
        value += h * std::sqrt(static_cast<double>(norm2));
    }
    out.value = static_cast<double>(value);
    return out;
}

}  // namespace vecbeck
