#pragma once

#include <functional>

#include "unmix/glup.hpp"

namespace unmix {

/// Symmetric matrix base*I + basis*diag(values - base)*basis', with `basis`
/// orthonormal (N x k). When k == N the base term is unused.
class SpectralWeight {
public:
    SpectralWeight() = default;
    SpectralWeight(Index n, double base, Matrix basis, Vector values);

    static SpectralWeight from_dense(const Matrix& w);
    static SpectralWeight identity(Index n);

    Index size() const { return n_; }
    double base() const { return base_; }
    const Matrix& basis() const { return basis_; }
    const Vector& values() const { return values_; }
    bool full_rank_basis() const { return basis_.cols() == n_; }

    double min_eigenvalue() const;
    double trace() const;
    Matrix dense() const;
    /// m * W without forming W.
    Matrix right_multiply(const Matrix& m) const;
    SpectralWeight scaled(double factor) const;

private:
    Index n_ = 0;
    double base_ = 1.0;
    Matrix basis_;
    Vector values_;
};

/// How the weight handed to the inner ADMM is scaled.
enum class WeightScaling {
    /// W = C(X): the inner problem is the weighted program multiplied by
    /// sigma^2(X), so mu and rho are expressed per unit noise variance and
    /// keep the same meaning as in GLUP.
    NoiseNormalized,
    /// W = sigma^2(X) C(X), mu and rho used as given.
    Literal,
};

/// Which iterate feeds C(X) and sigma^2(X).
enum class WeightSource {
    /// The sparse, exactly nonnegative Z iterate (equal to X at a fixed point).
    Consensus,
    /// The X-step output.
    Primal,
};

struct InnerStepView {
    std::size_t outer_iteration;
    const SpectralWeight& weight;
    const Matrix& z_before;
    const Matrix& lambda_before;
    const Matrix& x;
};

struct NglupConfig {
    GlupConfig glup{};        // inner rho, mu and ADMM tolerances
    GlupConfig warm_start{};  // rho0, mu0 for the GLUP initialization
    std::size_t j_max = 1;
    double eps_outer = 1e-4;
    std::size_t max_outer_iterations = 5000;
    double weight_ridge = 1e-8;
    WeightScaling weight_scaling = WeightScaling::NoiseNormalized;
    WeightSource weight_source = WeightSource::Consensus;
    /// Test hook: keep W = I instead of re-estimating it (reduces to GLUP).
    bool pin_identity_weight = false;
    /// Called after every weighted X-step.
    std::function<void(const InnerStepView&)> observer;

    void validate() const;
};

/// Heteroscedastic weight W(X) = sigma^2(X) C(X), ridge included.
struct WeightModel {
    Matrix c_matrix;      // C(X) + ridge I
    double sigma_squared = 0.0;
    Matrix w_matrix;      // sigma^2 * c_matrix
    double w_ridge_applied = 0.0;
};

/// C(X) = (I - I_w X)'(I - I_w X), N x N. No ridge.
Matrix compute_c_matrix(const Matrix& x, std::span<const Index> omega, Index n);

/// Ridge added to C: weight_ridge * trace(C)/N, or weight_ridge when C = 0.
double c_ridge(double c_trace, Index n, double weight_ridge);

/// C(X) + ridge in spectral form. When X has p nonzero rows with 4p < N the
/// rank-2p structure of C - I is used; otherwise C is eigendecomposed densely.
SpectralWeight regularized_c_spectral(const Matrix& x, std::span<const Index> omega, Index n,
                                      double weight_ridge);

/// sigma^2(X) = trace((S - S_w X) C^{-1} (S - S_w X)') / (N L), with C already
/// regularized. Uses a Cholesky solve; throws NumericalError if C is not PD.
double estimate_sigma_squared(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                              const Matrix& c_regularized);
double estimate_sigma_squared(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                              const SpectralWeight& c_regularized);

/// Lower clamp for sigma^2: 1e-12 ||S||_F^2 / (N L).
double sigma_squared_floor(const SpectralScene& scene);

/// Dense C(X), ridge, floored sigma^2 and W.
WeightModel estimate_weight(const SpectralScene& scene, const CandidateSet& candidates, const Matrix& x,
                            double weight_ridge);

/// Solves the weighted X-step
///   M1 X W^{-1} + M2 X = S_w'S W^{-1} - A'[Lambda + rho (B Z - C)]
/// with M1 = S_w'S_w and M2 = rho (I + 11').
///
/// After right-multiplying by W = Q diag(w) Q', each column j of X Q solves
/// (M1 + w_j M2) y_j = f_j. Those systems share the pencil (M1, M2), which is
/// diagonalized once: V' M2 V = I, V' M1 V = diag(g), so y_j = V (g + w_j)^{-1} V' f_j.
/// Directions outside a low-rank weight basis share the single eigenvalue `base`.
class SylvesterSolver {
public:
    SylvesterSolver(const Matrix& gram, double rho);

    /// Throws NumericalError if W has a non-positive eigenvalue.
    void set_weight(const Matrix& w);
    void set_weight(SpectralWeight w);

    Matrix solve(const UnmixingProblem& problem, const Matrix& z, const Matrix& lambda) const;

    const SpectralWeight& weight() const { return weight_; }
    double rho() const { return rho_; }

private:
    double rho_;
    Matrix pencil_vectors_;   // V
    Vector pencil_values_;    // g
    SpectralWeight weight_;
};

Matrix nglup_x_step(const UnmixingProblem& problem, const SylvesterSolver& solver, const Matrix& z,
                    const Matrix& lambda);

/// Relative residual of the weighted X-step equation, evaluated in its
/// W-multiplied form M1 X + M2 X W = S_w'S - A'[Lambda + rho(BZ - C)] W.
double sylvester_residual(const UnmixingProblem& problem, const Matrix& w, const Matrix& x, const Matrix& z,
                          const Matrix& lambda, double rho);

/// One weighted ADMM iteration (Sylvester X-step, unchanged Z and dual steps).
void nglup_iterate(const UnmixingProblem& problem, const SylvesterSolver& solver, const GlupConfig& config,
                   AdmmState& state);

/// GLUP warm start, then alternates weight re-estimation with up to j_max
/// weighted ADMM iterations. Stops once ||X - X_old||_F < eps_outer and the
/// ADMM residuals are within tolerance; only that case reports converged.
SolveReport nglup_solve(const SpectralScene& scene, const CandidateSet& candidates, const NglupConfig& config);

} // namespace unmix
