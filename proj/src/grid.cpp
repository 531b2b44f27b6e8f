#include "vecbeck/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "vecbeck/parallel.hpp"

namespace vecbeck {

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim must be 1, 2 or 3");
    long total = 1;
    for (int d = 0; d < 3; ++d) {
        if (d < dim) {
            if (cells[d] < 1) throw std::invalid_argument("cells per axis must be positive");
            if (!(spacing[d] > 0.0) || !std::isfinite(spacing[d]))
                throw std::invalid_argument("spacing must be positive and finite");
            if (!std::isfinite(origin[d])) throw std::invalid_argument("origin must be finite");
            total *= cells[d];
        } else if (cells[d] != 1 || spacing[d] != 1.0 || origin[d] != 0.0) {
            throw std::invalid_argument("unused grid axes must stay at cells=1, spacing=1, origin=0");
        }
    }
    if (total < 2) throw std::invalid_argument("grid needs at least 2 cells");
}

int GridSpec::cell_count() const {
    int total = 1;
    for (int d = 0; d < dim; ++d) total *= cells[d];
    return total;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= spacing[d];
    return v;
}

std::array<int, 3> GridSpec::unravel(int k) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        idx[d] = k % cells[d];
        k /= cells[d];
    }
    return idx;
}

int GridSpec::ravel(const std::array<int, 3>& idx) const {
    int k = 0;
    for (int d = dim - 1; d >= 0; --d) k = k * cells[d] + idx[d];
    return k;
}

int GridSpec::neighbor_up(int k, int d) const {
    int stride = 1;
    int rest = k;
    for (int e = 0; e < d; ++e) {
        rest /= cells[e];
        stride *= cells[e];
    }
    const int coord = rest % cells[d];
    return (coord + 1 < cells[d]) ? k + stride : -1;
}

std::array<double, 3> GridSpec::center(int k) const {
    const auto idx = unravel(k);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) x[d] = origin[d] + (idx[d] + 0.5) * spacing[d];
    return x;
}

bool GridSpec::same_geometry(const GridSpec& o) const {
    return dim == o.dim && cells == o.cells && spacing == o.spacing && origin == o.origin;
}

VectorMeasure::VectorMeasure(const GridSpec& g, int m_) : grid(g), m(m_) {
    grid.validate();
    if (m < 1) throw std::invalid_argument("measure target dimension must be positive");
    mass.assign(static_cast<size_t>(grid.cell_count()) * m, 0.0);
}

VectorField::VectorField(const GridSpec& g, int m_) : grid(g), m(m_) {
    grid.validate();
    if (m < 1) throw std::invalid_argument("field target dimension must be positive");
    val.assign(static_cast<size_t>(grid.cell_count()) * m, 0.0);
}

MatrixField::MatrixField(const GridSpec& g, int m_, int n_, FieldKind kind_)
    : grid(g), m(m_), n(n_), kind(kind_) {
    grid.validate();
    if (m < 1 || n < 1) throw std::invalid_argument("field shape must be positive");
    val.assign(static_cast<size_t>(grid.cell_count()) * m * n, 0.0);
}

Matrix MatrixField::cell_matrix(int k) const {
    Matrix A(m, n);
    const double* src = cell(k);
    std::copy(src, src + static_cast<size_t>(m) * n, A.a.begin());
    return A;
}

MatrixField discrete_gradient(const VectorField& f) {
    const GridSpec& g = f.grid;
    const int n = g.dim, m = f.m;
    MatrixField out(g, m, n, FieldKind::density);
    const int cells = g.cell_count();
    parallel_for(cells, [&](size_t k) {
        double* dst = out.cell(static_cast<int>(k));
        for (int d = 0; d < n; ++d) {
            const int up = g.neighbor_up(static_cast<int>(k), d);
            if (up < 0) continue;  // replicate ghost: zero column
            const double inv_h = 1.0 / g.spacing[d];
            for (int c = 0; c < m; ++c)
                dst[c * n + d] = (f.at(up, c) - f.at(static_cast<int>(k), c)) * inv_h;
        }
    });
    return out;
}

VectorMeasure discrete_divergence(const MatrixField& M) {
    if (M.kind != FieldKind::mass)
        throw std::invalid_argument("discrete_divergence expects a mass-flagged field; convert first");
    return adjoint_divergence_raw(M);
}

VectorMeasure adjoint_divergence_raw(const MatrixField& M) {
    const GridSpec& g = M.grid;
    if (M.n != g.dim) throw std::invalid_argument("field column count must match grid dim");
    const int n = g.dim, m = M.m;
    VectorMeasure nu(g, m);
    const int cells = g.cell_count();
    parallel_for(cells, [&](size_t kk) {
        const int k = static_cast<int>(kk);
        const auto idx = g.unravel(k);
        int stride = 1;
        for (int d = 0; d < n; ++d) {
            const double inv_h = 1.0 / g.spacing[d];
            const double* own = M.cell(k);
            if (idx[d] + 1 < g.cells[d])
                for (int c = 0; c < m; ++c) nu.at(k, c) -= own[c * n + d] * inv_h;
            if (idx[d] >= 1) {
                const double* below = M.cell(k - stride);
                for (int c = 0; c < m; ++c) nu.at(k, c) += below[c * n + d] * inv_h;
            }
            stride *= g.cells[d];
        }
    });
    return nu;
}

double pairing_measure(const VectorField& f, const VectorMeasure& mu) {
    if (!f.grid.same_geometry(mu.grid) || f.m != mu.m)
        throw std::invalid_argument("pairing_measure shape mismatch");
    long double s = 0.0L;
    for (size_t i = 0; i < f.val.size(); ++i) s += static_cast<long double>(f.val[i]) * mu.mass[i];
    return static_cast<double>(s);
}

double pairing_grad(const VectorField& f, const MatrixField& M) {
    if (!f.grid.same_geometry(M.grid) || f.m != M.m)
        throw std::invalid_argument("pairing_grad shape mismatch");
    if (M.kind != FieldKind::mass)
        throw std::invalid_argument("pairing_grad expects a mass-flagged field");
    const MatrixField Df = discrete_gradient(f);
    long double s = 0.0L;
    for (size_t i = 0; i < Df.val.size(); ++i) s += static_cast<long double>(Df.val[i]) * M.val[i];
    return static_cast<double>(s);
}

double lp_field_norm(const MatrixField& F, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_field_norm requires p >= 1");
    const int cells = F.grid.cell_count();
    if (F.kind == FieldKind::mass) {
        if (p != 1.0)
            throw std::invalid_argument("mass-flagged fields only support the total-variation norm (p = 1)");
        long double s = 0.0L;
        for (int k = 0; k < cells; ++k) s += cell_nuclear_norm(F.m, F.n, F.cell(k));
        return static_cast<double>(s);
    }
    const double vol = F.grid.cell_volume();
    if (p == p_inf) {
        double top = 0.0;
        for (int k = 0; k < cells; ++k) top = std::max(top, cell_op_norm(F.m, F.n, F.cell(k)));
        return top;
    }
    const int kdim = std::min(F.m, F.n);
    long double s = 0.0L;
    double sigma[max_cell_dim];
    for (int k = 0; k < cells; ++k) {
        cell_singular_values(F.m, F.n, F.cell(k), sigma);
        long double cell_sum = 0.0L;
        for (int i = 0; i < kdim; ++i) cell_sum += std::pow(sigma[i], p);
        s += vol * cell_sum;
    }
    return static_cast<double>(std::pow(static_cast<double>(s), 1.0 / p));
}

MatrixField to_density(const MatrixField& M) {
    if (M.kind == FieldKind::density) return M;
    MatrixField H = M;
    H.kind = FieldKind::density;
    const double inv_vol = 1.0 / M.grid.cell_volume();
    for (double& v : H.val) v *= inv_vol;
    return H;
}

MatrixField to_mass(const MatrixField& H) {
    if (H.kind == FieldKind::mass) return H;
    MatrixField M = H;
    M.kind = FieldKind::mass;
    const double vol = H.grid.cell_volume();
    for (double& v : M.val) v *= vol;
    return M;
}

std::vector<double> total_mass(const VectorMeasure& mu) {
    std::vector<long double> acc(mu.m, 0.0L);
    const int cells = mu.grid.cell_count();
    for (int k = 0; k < cells; ++k)
        for (int c = 0; c < mu.m; ++c) acc[c] += mu.at(k, c);
    std::vector<double> out(mu.m);
    for (int c = 0; c < mu.m; ++c) out[c] = static_cast<double>(acc[c]);
    return out;
}

double total_abs_mass(const VectorMeasure& mu) {
    long double s = 0.0L;
    for (double v : mu.mass) s += std::fabs(v);
    return static_cast<double>(s);
}

bool is_balanced(const VectorMeasure& mu) {
    const auto tm = total_mass(mu);
    double norm = 0.0;
    for (double v : tm) norm += v * v;
    norm = std::sqrt(norm);
    return norm <= tol_mass_factor * total_abs_mass(mu);
}

double measure_norm(const VectorMeasure& mu) {
    long double s = 0.0L;
    for (double v : mu.mass) s += static_cast<long double>(v) * v;
    return static_cast<double>(std::sqrt(static_cast<double>(s)));
}

void remove_mean(VectorField& f) {
    const int cells = f.grid.cell_count();
    for (int c = 0; c < f.m; ++c) {
        long double s = 0.0L;
        for (int k = 0; k < cells; ++k) s += f.at(k, c);
        const double mean = static_cast<double>(s / cells);
        for (int k = 0; k < cells; ++k) f.at(k, c) -= mean;
    }
}

VectorField coordinate_field(const GridSpec& g) {
    g.validate();
    VectorField f(g, g.dim);
    const int cells = g.cell_count();
    for (int k = 0; k < cells; ++k) {
        const auto x = g.center(k);
        for (int c = 0; c < g.dim; ++c) f.at(k, c) = x[c];
    }
    return f;
}

}  // namespace vecbeck
