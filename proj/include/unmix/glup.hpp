#pragma once

#include <limits>
#include <vector>

#include "unmix/core.hpp"

namespace unmix {

struct GlupConfig {
    double mu = 10.0;
    double rho = 100.0;
    double eps_primal = 1e-5;
    double eps_dual = 1e-5;
    std::size_t max_iterations = 5000;

    /// Throws InvalidParameter if any field is out of range.
    void validate() const;
};

/// ADMM iterate for the split X = Z, 1'X = 1'.
///
/// `lambda` stacks the consensus multipliers (first N' rows) above the
/// sum-to-one multipliers (last row).
struct AdmmState {
    Matrix x;
    Matrix z;
    Matrix lambda;
    double primal_residual_norm = std::numeric_limits<double>::infinity();
    double dual_residual_norm = std::numeric_limits<double>::infinity();
    std::size_t iteration = 0;

    /// Z = 0, Lambda = 0.
    static AdmmState zeros(Index candidates, Index pixels);
};

struct ResidualSample {
    double primal;
    double dual;
};

struct SolveReport {
    AbundanceEstimate abundance;   // the Z iterate
    std::size_t iterations = 0;
    bool converged = false;
    double final_primal_residual = 0.0;
    double final_dual_residual = 0.0;
    double objective_value = 0.0;
    std::vector<ResidualSample> history;
    /// Ridge added to the Gram matrix when plain factorization failed.
    double ridge_applied = 0.0;
    /// NGLUP only: outer iterations performed (0 for GLUP).
    std::size_t outer_iterations = 0;
    /// NGLUP only: sigma^2 of the returned estimate.
    double noise_variance = 0.0;
};

/// Precomputed products shared by every iteration.
struct UnmixingProblem {
    const SpectralScene* scene;
    const CandidateSet* candidates;
    Matrix gram;   // S_w' S_w, N' x N'
    Matrix cross;  // S_w' S,   N' x N

    UnmixingProblem(const SpectralScene& scene, const CandidateSet& candidates);

    Index candidate_count() const { return gram.rows(); }
    Index pixel_count() const { return cross.cols(); }
};

/// Cholesky factorization of S_w'S_w + rho (I + 11').
class GramSolver {
public:
    /// Retries once with ridge 1e-10 * trace/N' on failure, then throws NumericalError.
    GramSolver(const Matrix& gram, double rho);

    Matrix solve(const Matrix& rhs) const;
    double ridge_applied() const { return ridge_; }

private:
    Eigen::LLT<Matrix> llt_;
    double ridge_ = 0.0;
};

/// A'[Lambda + rho (B Z - C)] = (Lambda_1 - rho Z) + 1 (lambda_2 - rho 1)'.
Matrix constraint_term(const Matrix& z, const Matrix& lambda, double rho);

Matrix glup_x_step(const UnmixingProblem& problem, const GramSolver& solver, const Matrix& z,
                   const Matrix& lambda, double rho);

/// Row-wise positive MiSTO of X + Lambda_1 / rho with threshold mu / rho.
Matrix glup_z_step(const Matrix& x, const Matrix& lambda, double mu, double rho);

struct DualUpdate {
    Matrix lambda;
    double primal_residual;
    double dual_residual;
};

/// Lambda += rho (AX + BZ - C). Residual norms are Frobenius: primal is
/// ||[X - Z; 1'X - 1']||, dual is ||rho A'B (Z - Z_old)|| = rho ||Z - Z_old||.
DualUpdate glup_dual_step(const Matrix& lambda, const Matrix& x, const Matrix& z, const Matrix& z_old,
                          double rho);

/// One full X / Z / dual iteration, updating `state` in place.
void glup_iterate(const UnmixingProblem& problem, const GramSolver& solver, const GlupConfig& config,
                  AdmmState& state);

/// 0.5 ||S - S_w X||_F^2 + mu * sum_k ||x_k||_2.
double glup_objective(const UnmixingProblem& problem, const Matrix& x, double mu);

/// Solves min 0.5||S - S_w X||^2 + mu sum ||x_k|| s.t. X >= 0, 1'X = 1'.
SolveReport glup_solve(const SpectralScene& scene, const CandidateSet& candidates, const GlupConfig& config);

/// Same, starting from a given state; used by warm starts and tests.
SolveReport glup_solve_from(const UnmixingProblem& problem, const GlupConfig& config, AdmmState state);

} // namespace unmix
