#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vecbeck/lq.hpp"
#include "vecbeck/rng.hpp"

namespace vecbeck {

struct WitnessViolation {
    int id = 0;
    double pairing = 0.0;
};

struct PolarConeReport {
    std::string mode;
    bool member = false;
    double gap = 0.0;            // dual value minus the pairing with the tested map
    double dual_value = 0.0;
    double pairing_value = 0.0;
    double tol = 0.0;

    // per-cell certificate residuals (max and mass-weighted mean)
    double cert_symmetry_max = 0.0, cert_symmetry_mean = 0.0;
    double cert_psd_max = 0.0, cert_psd_mean = 0.0;
    double cert_isometry_max = 0.0, cert_isometry_mean = 0.0;
    std::array<double, 4> divv{0.0, 0.0, 0.0, 0.0};  // sobolev mode only
    double trace_identity = 0.0;                     // monotone mode only

    int witness_count = 0;
    double worst_witness = 0.0;
    std::vector<WitnessViolation> witness_violations;

    SolveReport solver;
    MatrixField certificate;  // flux measure M (masses) or density H
};

// Membership in the dual cone of monotone maps: dual value equals the
// coordinate pairing. On membership the flux certificate is refined by
// alternating projections to per-cell symmetric PSD form.
PolarConeReport monotone_membership(const VectorMeasure& mu, const SolverParams& params = {},
                                    int witness_count = 0, uint64_t witness_seed = 1);

// -div S for a field of symmetric PSD cells; rejects other inputs.
VectorMeasure psd_field_to_measure(const MatrixField& S);

// Worst pairing of mu against `count` sampled monotone maps.
double monotone_witness_check(const VectorMeasure& mu, int count, uint64_t seed);

// Membership in the polar of the tangent cone at a unit-Lipschitz f:
// dual value equals the pairing with f; per-cell isometry and symmetry
// residuals of the optimal flux direction against Df are reported.
PolarConeReport tangent_cone_check(const VectorMeasure& mu, const VectorField& f,
                                   const SolverParams& params = {});

// Membership in the Sobolev polar at f with ||Df||_{L^p} = 1: dual value of
// the conjugate-exponent flux problem equals the integral pairing with f.
PolarConeReport sobolev_cone_check(const VectorMeasure& h, const VectorField& f, double p,
                                   const SolverParams& params = {}, int witness_count = 0,
                                   uint64_t witness_seed = 1);

// One monotone test map: affine with PSD linear part plus separable
// nondecreasing piecewise-linear terms, scaled to unit max cell norm.
VectorField monotone_witness(const GridSpec& g, Rng& rng);

}  // namespace vecbeck
