#pragma once

#include <array>

#include "vecbeck/beckmann.hpp"

namespace vecbeck {

// min ||H||_{L^q} over -div H = h with no-flux boundary; h is stored as
// cell masses, density = mass / cell volume.
struct LqInstance {
    GridSpec grid;
    int m = 1;
    double p = 2.0;
    double q = 2.0;
    VectorMeasure h;

    void validate() const;  // conjugacy to 1e-12, zero mean, matching shapes
};

struct LqSolution {
    VectorField f;  // mean-zero, ||Df||_{L^p} <= 1
    MatrixField H;  // density
    SolveReport report;
};

LqSolution solve_lq(const LqInstance& inst, const SolverParams& params = {});

// Conjugate-gradient solve of (K^T K) x = b component-wise, K the discrete
// gradient; b.mass holds the right-hand side and must be mean-zero per
// component. Returns a mean-zero field.
VectorField gram_solve(const VectorMeasure& b, double rel_tol = 1e-12, int max_iters = 0);

struct NeumannOracle {
    VectorField f;  // mean-zero, ||Df||_{L^2} = 1
    double value = 0.0;
};

// Direct p = q = 2 optimum: solve the vector Neumann problem and normalize.
NeumannOracle neumann_oracle(const VectorMeasure& h);

// Integrated Schatten-1 discrepancies of the four optimality fields
// T1 = Df^T H/||H||, T2 = H^T Df/||H||, T3 = |H|^q/||H||^q, T4 = |Df|^p,
// for the pairs (T1,T2), (T1,T3), (T1,T4), (T3,T4).
std::array<double, 4> check_optifun(const VectorField& f, const MatrixField& H, double q);

// (1/2) sum_k V tr((Df Df^T)^(p/2-1) (Df Dg^T + Dg Df^T)) at cell k;
// the derivative of eps -> (1 - ||Df - eps Dg||_{L^p})/eps at 0+.
// Requires ||Df||_{L^p} = 1 within 1e-6.
double directional_derivative(const VectorField& f, const VectorField& g, double p);

}  // namespace vecbeck
