#include "unmix/glup.hpp"

#include <cmath>
#include <string>

#include "unmix/errors.hpp"
#include "unmix/prox.hpp"

namespace unmix {

void GlupConfig::validate() const
{
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InvalidParameter("mu must be finite and >= 0");
    }
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw InvalidParameter("rho must be finite and > 0");
    }
    if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) {
        throw InvalidParameter("ADMM tolerances must be > 0");
    }
    if (max_iterations < 1) {
        throw InvalidParameter("max_iterations must be >= 1");
    }
}

AdmmState AdmmState::zeros(Index candidates, Index pixels)
{
    AdmmState s;
    s.x = Matrix::Zero(candidates, pixels);
    s.z = Matrix::Zero(candidates, pixels);
    s.lambda = Matrix::Zero(candidates + 1, pixels);
    return s;
}

UnmixingProblem::UnmixingProblem(const SpectralScene& scene_, const CandidateSet& candidates_)
    : scene(&scene_), candidates(&candidates_)
{
    if (candidates_.columns.rows() != scene_.band_count()) {
        throw DimensionError("candidate spectra have " + std::to_string(candidates_.columns.rows()) +
                             " bands, scene has " + std::to_string(scene_.band_count()));
    }
    if (candidates_.size() < 1 || candidates_.columns.cols() != candidates_.size()) {
        throw DimensionError("candidate set indices and columns disagree");
    }
    require_finite(candidates_.columns, "candidate spectra");
    gram.noalias() = candidates_.columns.transpose() * candidates_.columns;
    cross.noalias() = candidates_.columns.transpose() * scene_.data();
}

GramSolver::GramSolver(const Matrix& gram, double rho)
{
    const Index n = gram.rows();
    Matrix system = gram;
    system.array() += rho;
    system.diagonal().array() += rho;
    llt_.compute(system);
    if (llt_.info() == Eigen::Success) {
        return;
    }
    ridge_ = 1e-10 * system.trace() / static_cast<double>(n);
    system.diagonal().array() += ridge_;
    llt_.compute(system);
    if (llt_.info() != Eigen::Success) {
        throw NumericalError("X-step Gram matrix is not positive definite even after ridge");
    }
}

Matrix GramSolver::solve(const Matrix& rhs) const { return llt_.solve(rhs); }

Matrix constraint_term(const Matrix& z, const Matrix& lambda, double rho)
{
    const Index n_cand = z.rows();
    Matrix term = lambda.topRows(n_cand) - rho * z;
    const Eigen::RowVectorXd sum_row = lambda.row(n_cand).array() - rho;
    term.rowwise() += sum_row;
    return term;
}

Matrix glup_x_step(const UnmixingProblem& problem, const GramSolver& solver, const Matrix& z,
                   const Matrix& lambda, double rho)
{
    if (z.rows() != problem.candidate_count() || z.cols() != problem.pixel_count() ||
        lambda.rows() != z.rows() + 1 || lambda.cols() != z.cols()) {
        throw DimensionError("X-step: iterate dimensions do not match the problem");
    }
    return solver.solve(problem.cross - constraint_term(z, lambda, rho));
}

Matrix glup_z_step(const Matrix& x, const Matrix& lambda, double mu, double rho)
{
    if (lambda.rows() != x.rows() + 1 || lambda.cols() != x.cols()) {
        throw DimensionError("Z-step: multiplier dimensions do not match X");
    }
    if (!(rho > 0.0)) {
        throw InvalidParameter("rho must be > 0");
    }
    const double alpha = mu / rho;
    if (!(alpha >= 0.0)) {
        throw InvalidParameter("prox threshold must be >= 0");
    }
    Matrix z = (x + lambda.topRows(x.rows()) / rho).cwiseMax(0.0);
    if (!z.allFinite()) {
        throw InvalidInput("Z-step input contains non-finite values");
    }
    for (Index i = 0; i < z.rows(); ++i) {
        z.row(i) *= misto_shrink_factor(z.row(i).norm(), alpha);
    }
    return z;
}

DualUpdate glup_dual_step(const Matrix& lambda, const Matrix& x, const Matrix& z, const Matrix& z_old,
                          double rho)
{
    const Index n_cand = x.rows();
    if (z.rows() != n_cand || z.cols() != x.cols() || z_old.rows() != n_cand || z_old.cols() != x.cols() ||
        lambda.rows() != n_cand + 1 || lambda.cols() != x.cols()) {
        throw DimensionError("dual step: inconsistent iterate dimensions");
    }
    const Matrix consensus = x - z;
    const Eigen::RowVectorXd sums = x.colwise().sum().array() - 1.0;

    DualUpdate out;
    out.lambda = lambda;
    out.lambda.topRows(n_cand) += rho * consensus;
    out.lambda.row(n_cand) += rho * sums;
    out.primal_residual = std::sqrt(consensus.squaredNorm() + sums.squaredNorm());
    out.dual_residual = rho * (z - z_old).norm();
    return out;
}

void glup_iterate(const UnmixingProblem& problem, const GramSolver& solver, const GlupConfig& config,
                  AdmmState& state)
{
    state.x = glup_x_step(problem, solver, state.z, state.lambda, config.rho);
    Matrix z_old = std::move(state.z);
    state.z = glup_z_step(state.x, state.lambda, config.mu, config.rho);
    auto dual = glup_dual_step(state.lambda, state.x, state.z, z_old, config.rho);
    state.lambda = std::move(dual.lambda);
    state.primal_residual_norm = dual.primal_residual;
    state.dual_residual_norm = dual.dual_residual;
    ++state.iteration;
}

double glup_objective(const UnmixingProblem& problem, const Matrix& x, double mu)
{
    const Matrix residual = problem.scene->data() - problem.candidates->columns * x;
    return 0.5 * residual.squaredNorm() + mu * x.rowwise().norm().sum();
}

SolveReport glup_solve_from(const UnmixingProblem& problem, const GlupConfig& config, AdmmState state)
{
    config.validate();
    const GramSolver solver(problem.gram, config.rho);

    SolveReport report;
    report.ridge_applied = solver.ridge_applied();
    report.history.reserve(std::min<std::size_t>(config.max_iterations, 4096));
    for (std::size_t k = 0; k < config.max_iterations; ++k) {
        glup_iterate(problem, solver, config, state);
        report.history.push_back({state.primal_residual_norm, state.dual_residual_norm});
        if (state.primal_residual_norm <= config.eps_primal && state.dual_residual_norm <= config.eps_dual) {
            report.converged = true;
            break;
        }
    }
    report.iterations = state.iteration;
    report.final_primal_residual = state.primal_residual_norm;
    report.final_dual_residual = state.dual_residual_norm;
    report.objective_value = glup_objective(problem, state.z, config.mu);
    report.abundance = AbundanceEstimate(std::move(state.z));
    return report;
}

SolveReport glup_solve(const SpectralScene& scene, const CandidateSet& candidates, const GlupConfig& config)
{
    config.validate();
    const UnmixingProblem problem(scene, candidates);
    return glup_solve_from(problem, config, AdmmState::zeros(problem.candidate_count(), problem.pixel_count()));
}

} // namespace unmix
