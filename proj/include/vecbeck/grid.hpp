#pragma once

#include <array>
#include <vector>

#include "vecbeck/schatten.hpp"

namespace vecbeck {

// Balanced-measure tolerance factor: |sum of masses| <= tol_mass_factor * (total absolute mass).
inline constexpr double tol_mass_factor = 1e-10;

// Cell-centered box grid, 1 <= dim <= 3. Axis 0 is the fastest index.
// Unused axes must keep cells = 1, spacing = 1, origin = 0.
struct GridSpec {
    int dim = 1;
    std::array<int, 3> cells{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    void validate() const;
    int cell_count() const;
    double cell_volume() const;
    std::array<int, 3> unravel(int k) const;
    int ravel(const std::array<int, 3>& idx) const;
    // Linear index of the idx+e_d neighbor, or -1 past the top boundary.
    int neighbor_up(int k, int d) const;
    std::array<double, 3> center(int k) const;
    bool same_geometry(const GridSpec& o) const;
};

// Signed m-vector of masses per cell.
struct VectorMeasure {
    GridSpec grid;
    int m = 1;
    std::vector<double> mass;  // mass[k*m + c]

    VectorMeasure() = default;
    VectorMeasure(const GridSpec& g, int m_);
    double& at(int k, int c) { return mass[static_cast<size_t>(k) * m + c]; }
    double at(int k, int c) const { return mass[static_cast<size_t>(k) * m + c]; }
};

// Potential values per cell.
struct VectorField {
    GridSpec grid;
    int m = 1;
    std::vector<double> val;  // val[k*m + c]

    VectorField() = default;
    VectorField(const GridSpec& g, int m_);
    double& at(int k, int c) { return val[static_cast<size_t>(k) * m + c]; }
    double at(int k, int c) const { return val[static_cast<size_t>(k) * m + c]; }
};

enum class FieldKind { mass, density };

// m-by-n matrix per cell; kind states whether entries are cell masses
// (measure M) or densities (H, Df). Conversion scales by cell volume.
struct MatrixField {
    GridSpec grid;
    int m = 1;
    int n = 1;
    FieldKind kind = FieldKind::mass;
    std::vector<double> val;  // val[(k*m + i)*n + j]

    MatrixField() = default;
    MatrixField(const GridSpec& g, int m_, int n_, FieldKind kind_);
    double* cell(int k) { return val.data() + static_cast<size_t>(k) * m * n; }
    const double* cell(int k) const { return val.data() + static_cast<size_t>(k) * m * n; }
    Matrix cell_matrix(int k) const;
};

// Forward differences over spacing; the gradient column is zero at the top
// boundary of each axis (ghost cell replicates the boundary value).
MatrixField discrete_gradient(const VectorField& f);

// Exact negative adjoint of discrete_gradient: returns nu with
// pairing_measure(f, nu) = pairing_grad(f, M) for every f. Requires masses.
VectorMeasure discrete_divergence(const MatrixField& M);

// Same linear map without the mass-flag contract; solvers apply it to
// density fields as the plain transpose of the gradient.
VectorMeasure adjoint_divergence_raw(const MatrixField& F);

double pairing_measure(const VectorField& f, const VectorMeasure& mu);
double pairing_grad(const VectorField& f, const MatrixField& M);

// Densities: (sum_k V * tr|F_k|^p)^(1/p), p = inf the max operator norm.
// Masses: p = 1 only, the total variation sum_k ||F_k||_S1.
double lp_field_norm(const MatrixField& F, double p);

MatrixField to_density(const MatrixField& M);
MatrixField to_mass(const MatrixField& H);

std::vector<double> total_mass(const VectorMeasure& mu);
double total_abs_mass(const VectorMeasure& mu);
bool is_balanced(const VectorMeasure& mu);
double measure_norm(const VectorMeasure& mu);  // Euclidean over all entries

void remove_mean(VectorField& f);

// f(x) = x at cell centers; m = grid.dim.
VectorField coordinate_field(const GridSpec& g);

}  // namespace vecbeck
