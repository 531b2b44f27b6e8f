#pragma once

#include "vecbeck/grid.hpp"

namespace vecbeck {

// Cells carrying less than this fraction of the total flux mass are outside
// the discrete support for optimality checks.
inline constexpr double support_cutoff = 1e-6;

struct SolverParams {
    double tau = 0.0;    // step sizes; 0 means 0.99 / (gradient norm estimate)
    double sigma = 0.0;
    double theta = 1.0;  // overrelaxation, in [0,1]
    int max_iters = 200000;
    double gap_tol = 1e-5;   // relative duality gap target
    double feas_tol = 1e-6;  // relative divergence residual target
    int check_every = 25;
};

struct SolveReport {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;  // primal - dual
    double div_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct BeckmannSolution {
    MatrixField M;  // masses, -div M = mu up to feas_tol
    VectorField u;  // mean-zero potential, per-cell ||Du||_op <= 1
    SolveReport report;
};

// Operator norm of the discrete gradient, power iteration (50 rounds).
double gradient_op_norm(const GridSpec& g);

// min ||M||_1 subject to -div M = mu, via primal-dual hybrid gradient;
// dual sup <u,mu> over per-cell ||Du||_op <= 1 reported from a rescaled u.
BeckmannSolution solve_beckmann(const VectorMeasure& mu, const SolverParams& params = {});

// Mass-weighted average of |<Du, M/||M||_S1> - 1| over supported cells.
double check_optimality(const MatrixField& M, const VectorField& u);

struct Oracle1d {
    double value = 0.0;
    MatrixField M;
};

// Closed-form 1-D optimum: the flux is the vector of partial sums.
Oracle1d oracle_1d(const VectorMeasure& mu);

}  // namespace vecbeck
