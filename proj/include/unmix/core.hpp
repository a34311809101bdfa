#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace unmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Pixel indices. 0-based inside the library; the CLI converts to 1-based.
using IndexList = std::vector<Index>;

/// Observed scene: L bands (rows) by N pixels (columns).
class SpectralScene {
public:
    explicit SpectralScene(Matrix data);

    const Matrix& data() const { return data_; }
    Index band_count() const { return data_.rows(); }
    Index pixel_count() const { return data_.cols(); }
    auto pixel(Index j) const { return data_.col(j); }

private:
    Matrix data_;
};

/// Candidate dictionary S_omega: a subset of scene columns, owned by value.
struct CandidateSet {
    IndexList indices;
    Matrix columns;

    Index size() const { return static_cast<Index>(indices.size()); }
};

/// Throws InvalidIndex or DuplicateIndex on bad input.
CandidateSet restrict_columns(const SpectralScene& scene, std::span<const Index> indices);

/// Convenience for S_omega = S.
CandidateSet all_columns(const SpectralScene& scene);

/// Largest violation of the simplex constraints over all columns:
/// max(-min entry, max |column sum - 1|), floored at 0.
double simplex_violation(const Matrix& x);

/// Fractional abundances, one column per pixel. The tolerance records the
/// measured constraint violation at construction time.
struct AbundanceEstimate {
    Matrix x;
    double feasibility_tolerance = 0.0;

    AbundanceEstimate() = default;
    explicit AbundanceEstimate(Matrix values);

    /// Copy with entries below zero clamped; used for reporting only.
    Matrix clamped() const;
    /// Arithmetic mean of each row.
    Vector row_means() const;
};

struct SceneGroundTruth {
    Matrix endmember_spectra;    // R, L x M
    Matrix true_abundances;      // A, M x N
    IndexList endmember_pixel_indices;
    double noise_sigma = 0.0;
    Matrix noise;                // E, L x N

    /// The self-dictionary abundance matrix for S_omega = S: rows of A
    /// placed at the pure-pixel rows of an N x N zero matrix.
    Matrix embedded_abundances() const;
};

void require_finite(const Matrix& m, const char* what);

} // namespace unmix
