#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/flat_system.hpp"
#include "imr/orthopoly.hpp"
#include "imr/problem.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace imr {

/// Random inputs of a stochastic Galerkin problem: independent uniform
/// variables, how they map onto tensor dimensions, and the pointwise
/// coefficient multiplying the spatial factor of each operator term.
struct StochasticModel {
    std::vector<StochasticBasis> variables;
    /// For tensor dimension mu >= 1, the variables it spans (first fastest).
    std::vector<std::vector<int>> dim_variables;
    /// Coefficient of operator term t at a sample xi (one entry per variable).
    std::vector<std::function<double(const Vector&)>> term_coefficient;

    /// One draw of every variable from its uniform law.
    Vector sample(std::mt19937_64& gen) const;
    /// Basis values of tensor dimension mu (>= 1) at xi.
    Vector basis_at(Index mu, const Vector& xi) const;
    /// Spatial field of u at xi: sum_i u_i^0 prod_mu psi^mu(xi)^T u_i^mu.
    Vector evaluate(const CanonicalTensor& u, const Vector& xi) const;
};

struct Rad2dSpec {
    double xi1_lo = -350.0;
    double xi1_hi = 350.0;
    std::vector<double> xi1_breaks{0.0};
    int xi1_degree = 5;
    double xi2_lo = -2.302585092994046;  // log 0.1
    double xi2_hi = 2.302585092994046;   // log 10
    int xi2_degree = 5;
    Box omega1{0.45, 0.55, 0.15, 0.25};
    Box omega2{0.45, 0.55, 0.75, 0.85};
    Box qoi_region{0.15, 0.25, 0.45, 0.55};
};

struct HighdimSpec {
    int degree = 7;
    /// Diffusion modes kept, among the eight trigonometric ones.
    int modes = 8;
    double kappa0 = 10.0;
    /// Multiplies every diffusion mode; 0 drops them.
    double mode_scale = 1.0;
    double xi0_lo = 0.0;
    double xi0_hi = 4000.0;
    Box source1{0.45, 0.55, 0.15, 0.25};
    Box source2{0.45, 0.55, 0.75, 0.85};
    Box qoi_region{0.15, 0.25, 0.45, 0.55};
};

/// Problem plus its random-input description.
struct StochasticProblem {
    Problem problem;
    StochasticModel model;
    /// Spatial stiffness (kappa = 1), used as the V-norm of samples.
    SparseMatrix spatial_norm;
};

/// Order-2 reaction-advection-diffusion benchmark (space x flattened
/// stochastic space, stochastic index j1 + p1 * j2).
StochasticProblem build_rad2d(int mesh_n, const Rad2dSpec& spec = {});

/// Diffusion with trigonometric modes and random advection; dimensions are
/// space, xi_0 (advection), xi_1..xi_modes.
StochasticProblem build_highdim_diffusion(int mesh_n, const HighdimSpec& spec = {});

/// D_w ⊗ I ⊗ ... with D_w = diag(w(x_i)^2), w = weight at nodes in the
/// closed region and 1 elsewhere.
RankOneMetric build_weighted_metric(const Problem& problem, const Box& region, double weight);

/// Flat direct solve (order 2 or small order > 2).
std::shared_ptr<ReferenceSolution> reference_solve(const Problem& problem, double guard = kFlatSolveGuard);

struct McEstimate {
    double rel_error = 0.0;
    /// Estimated relative standard deviation of rel_error.
    double rel_std = 0.0;
    int samples = 0;
};

/// Monte-Carlo estimate of |u - u_ref| / |u| in L2(Xi; V), sampling until
/// the relative standard deviation drops below `target_rsd`. `exact_at`
/// gives u at a sample.
McEstimate mc_relative_error(const StochasticProblem& sp, const std::function<Vector(const Vector&)>& exact_at,
                             const CanonicalTensor& u_ref, double target_rsd, std::uint64_t seed,
                             int min_samples = 20, int max_samples = 100000);

struct SurrogateReference {
    CanonicalTensor u;
    McEstimate estimate;
};

/// High-rank greedy canonical-residual solve (rank-one corrections plus
/// updates of the stochastic dimensions), grown until the Monte-Carlo
/// estimate against `exact_at` drops below `tol`, checked every `check_every` ranks.
SurrogateReference surrogate_reference(const StochasticProblem& sp, const std::function<Vector(const Vector&)>& exact_at,
                                       double tol, int max_rank, std::uint64_t seed, double target_rsd = 0.1,
                                       int check_every = 5);

/// Pointwise deterministic solve at a sample: (sum_t g_t(xi) A_t^0) u = b(xi).
Vector solve_at_sample(const StochasticProblem& sp, const Vector& xi);

}  // namespace imr
