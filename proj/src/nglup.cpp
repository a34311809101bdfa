#include "unmix/nglup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "unmix/errors.hpp"

namespace unmix {

void NglupConfig::validate() const
{
    glup.validate();
    warm_start.validate();
    if (j_max < 1) {
        throw InvalidParameter("j_max must be >= 1");
    }
    if (!(eps_outer > 0.0)) {
        throw InvalidParameter("eps_outer must be > 0");
    }
    if (max_outer_iterations < 1) {
        throw InvalidParameter("max_outer_iterations must be >= 1");
    }
    if (!(weight_ridge >= 0.0) || !std::isfinite(weight_ridge)) {
        throw InvalidParameter("weight_ridge must be finite and >= 0");
    }
}

// ---------------------------------------------------------------------------
// SpectralWeight

SpectralWeight::SpectralWeight(Index n, double base, Matrix basis, Vector values)
    : n_(n), base_(base), basis_(std::move(basis)), values_(std::move(values))
{
    if (basis_.rows() != n_ || basis_.cols() != values_.size() || basis_.cols() > n_) {
        throw DimensionError("spectral weight: basis and eigenvalues disagree");
    }
}

SpectralWeight SpectralWeight::from_dense(const Matrix& w)
{
    if (w.rows() != w.cols()) {
        throw DimensionError("weight matrix must be square");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(w);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the weight matrix failed");
    }
    const Vector& values = eig.eigenvalues();
    return SpectralWeight(w.rows(), values.size() > 0 ? values.minCoeff() : 1.0, eig.eigenvectors(), values);
}

SpectralWeight SpectralWeight::identity(Index n) { return SpectralWeight(n, 1.0, Matrix(n, 0), Vector(0)); }

double SpectralWeight::min_eigenvalue() const
{
    const double low = values_.size() > 0 ? values_.minCoeff() : std::numeric_limits<double>::infinity();
    return full_rank_basis() ? low : std::min(low, base_);
}

double SpectralWeight::trace() const
{
    if (full_rank_basis()) {
        return values_.sum();
    }
    return base_ * static_cast<double>(n_ - basis_.cols()) + values_.sum();
}

Matrix SpectralWeight::dense() const
{
    Matrix out = basis_ * values_.asDiagonal() * basis_.transpose();
    if (!full_rank_basis()) {
        out.noalias() -= base_ * (basis_ * basis_.transpose());
        out.diagonal().array() += base_;
    }
    return out;
}

Matrix SpectralWeight::right_multiply(const Matrix& m) const
{
    if (m.cols() != n_) {
        throw DimensionError("spectral weight: operand has wrong column count");
    }
    const Matrix projected = m * basis_;
    if (full_rank_basis()) {
        return (projected * values_.asDiagonal()) * basis_.transpose();
    }
    Matrix out = base_ * m;
    out.noalias() += (projected * (values_.array() - base_).matrix().asDiagonal()) * basis_.transpose();
    return out;
}

SpectralWeight SpectralWeight::scaled(double factor) const
{
    return SpectralWeight(n_, base_ * factor, basis_, values_ * factor);
}

// ---------------------------------------------------------------------------
// Weight estimation

Matrix compute_c_matrix(const Matrix& x, std::span<const Index> omega, Index n)
{
    if (x.rows() != static_cast<Index>(omega.size()) || x.cols() != n) {
        throw DimensionError("C(X): X is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                             ", expected " + std::to_string(omega.size()) + "x" + std::to_string(n));
    }
    // K = I - I_w X: subtract row i of X from row omega[i] of the identity.
    Matrix k = Matrix::Identity(n, n);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const Index row = omega[i];
        if (row < 0 || row >= n) {
            throw InvalidIndex("C(X): candidate index out of range");
        }
        k.row(row) -= x.row(static_cast<Index>(i));
    }
    Matrix c(n, n);
    c.noalias() = k.transpose() * k;
    return c;
}

double c_ridge(double c_trace, Index n, double weight_ridge)
{
    const double mean_diag = c_trace / static_cast<double>(n);
    return weight_ridge * (mean_diag > 0.0 ? mean_diag : 1.0);
}

SpectralWeight regularized_c_spectral(const Matrix& x, std::span<const Index> omega, Index n,
                                      double weight_ridge)
{
    if (x.rows() != static_cast<Index>(omega.size()) || x.cols() != n) {
        throw DimensionError("C(X): X does not match candidates x pixels");
    }
    std::vector<Index> support;
    for (Index i = 0; i < x.rows(); ++i) {
        if ((x.row(i).array() != 0.0).any()) {
            support.push_back(i);
        }
    }
    const auto p = static_cast<Index>(support.size());
    if (4 * p >= n) {
        Matrix c = compute_c_matrix(x, omega, n);
        c.diagonal().array() += c_ridge(c.trace(), n, weight_ridge);
        return SpectralWeight::from_dense(c);
    }

    // I_w X = E Y with E = [e_omega(i)] and Y the nonzero rows of X, so
    // C - I = -Y'E' - EY + Y'Y lives in span[E, Y'].
    Matrix e = Matrix::Zero(n, p);
    Matrix y(p, n);
    for (Index r = 0; r < p; ++r) {
        const Index i = support[static_cast<std::size_t>(r)];
        const Index row = omega[static_cast<std::size_t>(i)];
        if (row < 0 || row >= n) {
            throw InvalidIndex("C(X): candidate index out of range");
        }
        e(row, r) = 1.0;
        y.row(r) = x.row(i);
    }
    Matrix span(n, 2 * p);
    span << e, y.transpose();
    const Eigen::ColPivHouseholderQR<Matrix> qr(span);
    const Index rank = qr.rank();
    const Matrix q = qr.householderQ() * Matrix::Identity(n, rank);

    const Matrix qe = q.transpose() * e;
    const Matrix qy = q.transpose() * y.transpose();
    Matrix compressed = qy * qy.transpose() - qy * qe.transpose() - qe * qy.transpose();
    compressed.diagonal().array() += 1.0;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(compressed);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the compressed C(X) failed");
    }
    const Vector c_values = eig.eigenvalues().cwiseMax(0.0);
    const double trace = static_cast<double>(n - rank) + c_values.sum();
    const double ridge = c_ridge(trace, n, weight_ridge);
    return SpectralWeight(n, 1.0 + ridge, q * eig.eigenvectors(), c_values.array() + ridge);
}

double sigma_squared_floor(const SpectralScene& scene)
{
    return 1e-12 * scene.data().squaredNorm() / static_cast<double>(scene.pixel_count() * scene.band_count());
}

double estimate_sigma_squared(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                              const Matrix& c_regularized)
{
    const Index n = scene.pixel_count();
    if (c_regularized.rows() != n || c_regularized.cols() != n || x.rows() != candidates.size() ||
        x.cols() != n) {
        throw DimensionError("sigma^2: inconsistent dimensions");
    }
    const Matrix residual_t = (scene.data() - candidates.columns * x).transpose();  // N x L
    const Eigen::LLT<Matrix> llt(c_regularized);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("C(X) is not positive definite after ridge");
    }
    const Matrix solved = llt.solve(residual_t);
    const double trace = residual_t.cwiseProduct(solved).sum();
    return std::max(0.0, trace) / static_cast<double>(n * scene.band_count());
}

double estimate_sigma_squared(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                              const SpectralWeight& c_regularized)
{
    const Index n = scene.pixel_count();
    if (c_regularized.size() != n || x.rows() != candidates.size() || x.cols() != n) {
        throw DimensionError("sigma^2: inconsistent dimensions");
    }
    if (!(c_regularized.min_eigenvalue() > 0.0)) {
        throw NumericalError("C(X) is not positive definite after ridge");
    }
    const Matrix residual = scene.data() - candidates.columns * x;  // L x N
    const Matrix projected = residual * c_regularized.basis();
    const Vector energy = projected.colwise().squaredNorm().transpose();
    double trace = (energy.array() / c_regularized.values().array()).sum();
    if (!c_regularized.full_rank_basis()) {
        trace += (residual.squaredNorm() - energy.sum()) / c_regularized.base();
    }
    return std::max(0.0, trace) / static_cast<double>(n * scene.band_count());
}

WeightModel estimate_weight(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                            double weight_ridge)
{
    const Index n = scene.pixel_count();
    WeightModel model;
    model.c_matrix = compute_c_matrix(x, candidates.indices, n);
    model.w_ridge_applied = c_ridge(model.c_matrix.trace(), n, weight_ridge);
    model.c_matrix.diagonal().array() += model.w_ridge_applied;
    model.sigma_squared =
        std::max(estimate_sigma_squared(scene, candidates, x, model.c_matrix), sigma_squared_floor(scene));
    model.w_matrix = model.sigma_squared * model.c_matrix;
    return model;
}

// ---------------------------------------------------------------------------
// Sylvester X-step

SylvesterSolver::SylvesterSolver(const Matrix& gram, double rho) : rho_(rho)
{
    if (!(rho > 0.0)) {
        throw InvalidParameter("rho must be > 0");
    }
    const Index n = gram.rows();
    Matrix m2 = Matrix::Constant(n, n, rho);
    m2.diagonal().array() += rho;

    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(gram, m2,
                                                                  Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (pencil.info() != Eigen::Success) {
        throw NumericalError("generalized eigendecomposition of the X-step pencil failed");
    }
    pencil_vectors_ = pencil.eigenvectors();
    // S_w'S_w is PSD; clip rounding noise below zero.
    pencil_values_ = pencil.eigenvalues().cwiseMax(0.0);
}

void SylvesterSolver::set_weight(const Matrix& w) { set_weight(SpectralWeight::from_dense(w)); }

void SylvesterSolver::set_weight(SpectralWeight w)
{
    if (!(w.min_eigenvalue() > 0.0)) {
        throw NumericalError("weight matrix is not positive definite");
    }
    weight_ = std::move(w);
}

Matrix SylvesterSolver::solve(const UnmixingProblem& problem, const Matrix& z, const Matrix& lambda) const
{
    const Index n_cand = problem.candidate_count();
    const Index n = problem.pixel_count();
    if (weight_.size() != n) {
        throw DimensionError("weight matrix size does not match the pixel count");
    }
    if (pencil_vectors_.rows() != n_cand || z.rows() != n_cand || z.cols() != n || lambda.rows() != n_cand + 1 ||
        lambda.cols() != n) {
        throw DimensionError("Sylvester X-step: iterate dimensions do not match the problem");
    }
    // G = S_w'S - A'[Lambda + rho(BZ - C)] W
    Matrix rhs = problem.cross;
    rhs -= weight_.right_multiply(constraint_term(z, lambda, rho_));

    const Matrix h = pencil_vectors_.transpose() * rhs;
    const Matrix& basis = weight_.basis();
    const Matrix hb = h * basis;
    const Vector& w = weight_.values();

    Matrix inner(n_cand, basis.cols());
    for (Index j = 0; j < basis.cols(); ++j) {
        inner.col(j) = hb.col(j).array() / (pencil_values_.array() + w(j));
    }
    if (weight_.full_rank_basis()) {
        return pencil_vectors_ * (inner * basis.transpose());
    }
    // Complement of the basis: every direction has eigenvalue `base`.
    const Eigen::ArrayXd base_scale = (pencil_values_.array() + weight_.base()).inverse();
    inner -= (hb.array().colwise() * base_scale).matrix();
    Matrix coeffs = (h.array().colwise() * base_scale).matrix();
    coeffs.noalias() += inner * basis.transpose();
    return pencil_vectors_ * coeffs;
}

Matrix nglup_x_step(const UnmixingProblem& problem, const SylvesterSolver& solver, const Matrix& z,
                    const Matrix& lambda)
{
    return solver.solve(problem, z, lambda);
}

double sylvester_residual(const UnmixingProblem& problem, const Matrix& w, const Matrix& x, const Matrix& z,
                          const Matrix& lambda, double rho)
{
    const Matrix data_part = problem.gram * x;
    Matrix penalty_part = rho * x;
    penalty_part.rowwise() += rho * x.colwise().sum();
    const Matrix penalty_w = penalty_part * w;
    const Matrix term_w = constraint_term(z, lambda, rho) * w;

    const double scale = std::max({data_part.norm() + penalty_w.norm(), problem.cross.norm() + term_w.norm(),
                                   std::numeric_limits<double>::min()});
    return (data_part + penalty_w - problem.cross + term_w).norm() / scale;
}

void nglup_iterate(const UnmixingProblem& problem, const SylvesterSolver& solver, const GlupConfig& config,
                   AdmmState& state)
{
    state.x = nglup_x_step(problem, solver, state.z, state.lambda);
    Matrix z_old = std::move(state.z);
    state.z = glup_z_step(state.x, state.lambda, config.mu, config.rho);
    auto dual = glup_dual_step(state.lambda, state.x, state.z, z_old, config.rho);
    state.lambda = std::move(dual.lambda);
    state.primal_residual_norm = dual.primal_residual;
    state.dual_residual_norm = dual.dual_residual;
    ++state.iteration;
}

// ---------------------------------------------------------------------------
// Outer loop

SolveReport nglup_solve(const SpectralScene& scene, const CandidateSet& candidates, const NglupConfig& config)
{
    config.validate();
    const UnmixingProblem problem(scene, candidates);
    const Index n_cand = problem.candidate_count();
    const Index n = problem.pixel_count();

    const SolveReport warm = glup_solve_from(problem, config.warm_start, AdmmState::zeros(n_cand, n));

    AdmmState state;
    state.x = warm.abundance.x;
    state.z = state.x;
    state.lambda = Matrix::Zero(n_cand + 1, n);

    SylvesterSolver solver(problem.gram, config.glup.rho);
    if (config.pin_identity_weight) {
        solver.set_weight(SpectralWeight::identity(n));
    }
    const double floor = sigma_squared_floor(scene);
    const auto weight_input = [&]() -> const Matrix& {
        return config.weight_source == WeightSource::Consensus ? state.z : state.x;
    };

    SolveReport report;
    report.ridge_applied = warm.ridge_applied;
    const auto inner_pending = [&] {
        return state.primal_residual_norm >= config.glup.eps_primal ||
               state.dual_residual_norm >= config.glup.eps_dual;
    };
    for (std::size_t outer = 0; outer < config.max_outer_iterations; ++outer) {
        if (!config.pin_identity_weight) {
            SpectralWeight c = regularized_c_spectral(weight_input(), candidates.indices, n, config.weight_ridge);
            if (config.weight_scaling == WeightScaling::Literal) {
                const double sigma2 = std::max(estimate_sigma_squared(scene, candidates, weight_input(), c), floor);
                c = c.scaled(sigma2);
            }
            solver.set_weight(std::move(c));
        }
        const Matrix x_old = state.x;
        for (std::size_t j = 0; j < config.j_max && inner_pending(); ++j) {
            if (config.observer) {
                const Matrix z_before = state.z;
                const Matrix lambda_before = state.lambda;
                nglup_iterate(problem, solver, config.glup, state);
                config.observer(InnerStepView{outer, solver.weight(), z_before, lambda_before, state.x});
            } else {
                nglup_iterate(problem, solver, config.glup, state);
            }
            report.history.push_back({state.primal_residual_norm, state.dual_residual_norm});
        }
        ++report.outer_iterations;
        if ((state.x - x_old).norm() < config.eps_outer && !inner_pending()) {
            report.converged = true;
            break;
        }
    }
    report.iterations = state.iteration;
    report.final_primal_residual = state.primal_residual_norm;
    report.final_dual_residual = state.dual_residual_norm;
    report.objective_value = glup_objective(problem, state.z, config.glup.mu);
    const SpectralWeight final_c = regularized_c_spectral(state.z, candidates.indices, n, config.weight_ridge);
    report.noise_variance = std::max(estimate_sigma_squared(scene, candidates, state.z, final_c), floor);
    report.abundance = AbundanceEstimate(std::move(state.z));
    return report;
}

} // namespace unmix
