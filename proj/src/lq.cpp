#include "vecbeck/lq.hpp"

#include <cmath>
#include <stdexcept>

#include "vecbeck/parallel.hpp"

namespace vecbeck {

namespace {

// |A|^r as an n-by-n matrix via the singular vectors of A.
Matrix abs_power_of(const Matrix& A, double r) {
    const SvdDecomposition d = svd(A);
    const int n = A.cols, k = static_cast<int>(d.sigma.size());
    Matrix R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int t = 0; t < k; ++t)
                if (d.sigma[t] > 0.0) s += d.V(i, t) * std::pow(d.sigma[t], r) * d.V(j, t);
            R(i, j) = s;
        }
    return R;
}

}  // namespace

void LqInstance::validate() const {
    grid.validate();
    if (m < 1) throw std::invalid_argument("lq instance needs m >= 1");
    if (!(p > 1.0) || !(q > 1.0) || !std::isfinite(p) || !std::isfinite(q))
        throw std::invalid_argument("lq exponents must lie in (1,inf)");
    if (std::fabs(1.0 / p + 1.0 / q - 1.0) > 1e-12)
        throw std::invalid_argument("lq exponents must be conjugate");
    if (!h.grid.same_geometry(grid) || h.m != m) throw std::invalid_argument("lq density shape mismatch");
    if (!is_balanced(h)) throw std::invalid_argument("lq density must have zero mean");
}

LqSolution solve_lq(const LqInstance& inst, const SolverParams& params) {
    inst.validate();
    const GridSpec& g = inst.grid;
    const int m = inst.m, n = g.dim;
    const int cells = g.cell_count();
    const double vol = g.cell_volume();
    const double q = inst.q, p = inst.p;

    LqSolution sol{VectorField(g, m), MatrixField(g, m, n, FieldKind::density), {}};
    std::vector<double> h_den(inst.h.mass.size());
    long double hn2 = 0.0L;
    for (size_t i = 0; i < h_den.size(); ++i) {
        h_den[i] = inst.h.mass[i] / vol;
        hn2 += static_cast<long double>(h_den[i]) * h_den[i];
    }
    const double h_norm = std::sqrt(static_cast<double>(hn2));
    if (h_norm == 0.0) {
        sol.report.converged = true;
        return sol;
    }

    const double knorm = gradient_op_norm(g);
    const double tau = params.tau > 0.0 ? params.tau : 0.99 / knorm;
    const double sigma = params.sigma > 0.0 ? params.sigma : 0.99 / knorm;
    const double theta = params.theta;
    const int check_every = std::max(1, params.check_every);

    MatrixField H(g, m, n, FieldKind::density);
    MatrixField Hbar(g, m, n, FieldKind::density);
    VectorField f(g, m);
    const size_t words = H.val.size();

    auto dual_of = [&](const VectorField& pot, VectorField* out, double* scale_out) {
        VectorField ft = pot;
        remove_mean(ft);
        const double s = lp_field_norm(discrete_gradient(ft), p);
        const double scale = s > 0.0 ? s : 1.0;
        const double dual = pairing_measure(ft, inst.h) / scale;
        if (out) {
            for (double& v : ft.val) v /= scale;
            *out = ft;
        }
        if (scale_out) *scale_out = scale;
        return dual;
    };

    SolveReport rep;
    int iter = 0;
    while (iter < params.max_iters) {
        ++iter;
        const VectorMeasure adj = adjoint_divergence_raw(Hbar);
        for (size_t i = 0; i < f.val.size(); ++i) f.val[i] += sigma * (h_den[i] - adj.mass[i]);

        const MatrixField Df = discrete_gradient(f);
        for (size_t i = 0; i < words; ++i) Hbar.val[i] = H.val[i] + tau * Df.val[i];
        parallel_for(cells, [&](size_t k) {
            cell_prox_qpower(m, n, Hbar.cell(static_cast<int>(k)), tau, q);
        });
        for (size_t i = 0; i < words; ++i) {
            const double next = Hbar.val[i];
            Hbar.val[i] = next + theta * (next - H.val[i]);
            H.val[i] = next;
        }

        if (iter % check_every != 0 && iter != params.max_iters) continue;

        rep.primal = lp_field_norm(H, q);
        rep.dual = dual_of(f, nullptr, nullptr);
        rep.gap = rep.primal - rep.dual;
        const VectorMeasure div_now = adjoint_divergence_raw(H);
        long double r2 = 0.0L;
        for (size_t i = 0; i < div_now.mass.size(); ++i) {
            const double d = div_now.mass[i] - h_den[i];
            r2 += static_cast<long double>(d) * d;
        }
        rep.div_residual = std::sqrt(static_cast<double>(r2)) / h_norm;
        rep.iterations = iter;
        if (rep.gap <= params.gap_tol * std::max(rep.primal, 1e-300) &&
            rep.div_residual <= params.feas_tol) {
            rep.converged = true;
            break;
        }
    }

    rep.dual = dual_of(f, &sol.f, nullptr);
    rep.gap = rep.primal - rep.dual;
    sol.H = H;
    sol.report = rep;
    return sol;
}

VectorField gram_solve(const VectorMeasure& b, double rel_tol, int max_iters) {
    const GridSpec& g = b.grid;
    g.validate();
    const int cells = g.cell_count();
    const int m = b.m;
    if (max_iters <= 0) max_iters = 40 * cells + 200;

    VectorField x(g, m), r(g, m), pdir(g, m);
    r.val = b.mass;
    remove_mean(r);
    pdir.val = r.val;

    auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
        long double s = 0.0L;
        for (size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * c[i];
        return static_cast<double>(s);
    };

    double rs = dot(r.val, r.val);
    const double stop = rel_tol * rel_tol * rs;
    for (int it = 0; it < max_iters && rs > stop && rs > 0.0; ++it) {
        const VectorMeasure Ap = adjoint_divergence_raw(discrete_gradient(pdir));
        const double pAp = dot(pdir.val, Ap.mass);
        if (pAp <= 0.0) break;  // direction fell into the constant kernel
        const double alpha = rs / pAp;
        for (size_t i = 0; i < x.val.size(); ++i) {
            x.val[i] += alpha * pdir.val[i];
            r.val[i] -= alpha * Ap.mass[i];
        }
        remove_mean(r);
        const double rs_new = dot(r.val, r.val);
        const double beta = rs_new / rs;
        rs = rs_new;
        for (size_t i = 0; i < pdir.val.size(); ++i) pdir.val[i] = r.val[i] + beta * pdir.val[i];
    }
    remove_mean(x);
    return x;
}

NeumannOracle neumann_oracle(const VectorMeasure& h) {
    h.grid.validate();
    if (!is_balanced(h)) throw std::invalid_argument("neumann_oracle requires a zero-mean density");
    const double vol = h.grid.cell_volume();
    VectorMeasure rhs = h;
    for (double& v : rhs.mass) v /= vol;  // masses to densities

    NeumannOracle out;
    out.f = gram_solve(rhs);
    const double s = lp_field_norm(discrete_gradient(out.f), 2.0);
    if (s == 0.0) {
        out.f = VectorField(h.grid, h.m);
        out.value = 0.0;
        return out;
    }
    for (double& v : out.f.val) v /= s;
    out.value = pairing_measure(out.f, h);
    return out;
}

std::array<double, 4> check_optifun(const VectorField& f, const MatrixField& H, double q) {
    if (H.kind != FieldKind::density) throw std::invalid_argument("check_optifun expects a density field");
    if (!f.grid.same_geometry(H.grid) || f.m != H.m) throw std::invalid_argument("check_optifun shape mismatch");
    if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("check_optifun requires q in (1,inf)");
    const double nq = lp_field_norm(H, q);
    if (nq == 0.0) throw std::invalid_argument("check_optifun: zero flux density");
    const double p = conjugate_exponent(q);
    const double vol = H.grid.cell_volume();
    const MatrixField Df = discrete_gradient(f);
    const int cells = H.grid.cell_count();

    long double d12 = 0.0L, d13 = 0.0L, d14 = 0.0L, d34 = 0.0L;
    const double inv_nq = 1.0 / nq;
    const double inv_nqq = 1.0 / std::pow(nq, q);
    for (int k = 0; k < cells; ++k) {
        const Matrix Dfk = Df.cell_matrix(k);
        const Matrix Hk = H.cell_matrix(k);
        const Matrix T1 = inv_nq * (Dfk.transposed() * Hk);
        const Matrix T2 = T1.transposed();  // H^T Df = (Df^T H)^T
        const Matrix T3 = inv_nqq * abs_power_of(Hk, q);
        const Matrix T4 = abs_power_of(Dfk, p);
        d12 += vol * schatten_norm(T1 - T2, 1.0);
        d13 += vol * schatten_norm(T1 - T3, 1.0);
        d14 += vol * schatten_norm(T1 - T4, 1.0);
        d34 += vol * schatten_norm(T3 - T4, 1.0);
    }
    return {static_cast<double>(d12), static_cast<double>(d13), static_cast<double>(d14),
            static_cast<double>(d34)};
}

double directional_derivative(const VectorField& f, const VectorField& g, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("directional_derivative requires p in (1,inf)");
    if (!f.grid.same_geometry(g.grid) || f.m != g.m)
        throw std::invalid_argument("directional_derivative shape mismatch");
    const MatrixField Df = discrete_gradient(f);
    const double norm_f = lp_field_norm(Df, p);
    if (std::fabs(norm_f - 1.0) > 1e-6)
        throw std::invalid_argument("directional_derivative requires ||Df||_p = 1");
    const MatrixField Dg = discrete_gradient(g);
    const double vol = f.grid.cell_volume();
    const int cells = f.grid.cell_count();

    long double acc = 0.0L;
    for (int k = 0; k < cells; ++k) {
        const Matrix Dfk = Df.cell_matrix(k);
        const Matrix Dgk = Dg.cell_matrix(k);
        const Matrix S = Dfk * Dfk.transposed();
        const Matrix P = psd_power(S, p / 2.0 - 1.0);
        const Matrix X = Dfk * Dgk.transposed() + Dgk * Dfk.transposed();
        double tr = 0.0;
        for (int i = 0; i < P.rows; ++i)
            for (int j = 0; j < P.cols; ++j) tr += P(i, j) * X(j, i);
        acc += 0.5L * vol * tr;
    }
    return static_cast<double>(acc);
}

}  // namespace vecbeck
