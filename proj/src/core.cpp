#include "unmix/core.hpp"

#include <string>
#include <unordered_set>

#include "unmix/errors.hpp"

namespace unmix {

void require_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + " contains non-finite values");
    }
}

SpectralScene::SpectralScene(Matrix data) : data_(std::move(data))
{
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw InvalidInput("scene must have at least one band and one pixel");
    }
    require_finite(data_, "scene");
}

CandidateSet restrict_columns(const SpectralScene& scene, std::span<const Index> indices)
{
    if (indices.empty()) {
        throw InvalidInput("candidate set must contain at least one pixel");
    }
    std::unordered_set<Index> seen;
    CandidateSet out;
    out.indices.assign(indices.begin(), indices.end());
    out.columns.resize(scene.band_count(), static_cast<Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Index j = indices[i];
        if (j < 0 || j >= scene.pixel_count()) {
            throw InvalidIndex("pixel index " + std::to_string(j + 1) + " outside 1.." +
                               std::to_string(scene.pixel_count()));
        }
        if (!seen.insert(j).second) {
            throw DuplicateIndex("pixel index " + std::to_string(j + 1) + " repeated");
        }
        out.columns.col(static_cast<Index>(i)) = scene.pixel(j);
    }
    return out;
}

CandidateSet all_columns(const SpectralScene& scene)
{
    CandidateSet out;
    out.indices.resize(static_cast<std::size_t>(scene.pixel_count()));
    for (Index j = 0; j < scene.pixel_count(); ++j) {
        out.indices[static_cast<std::size_t>(j)] = j;
    }
    out.columns = scene.data();
    return out;
}

double simplex_violation(const Matrix& x)
{
    if (x.size() == 0) {
        return 0.0;
    }
    const double negativity = std::max(0.0, -x.minCoeff());
    const double sum_error = (x.colwise().sum().array() - 1.0).abs().maxCoeff();
    return std::max(negativity, sum_error);
}

AbundanceEstimate::AbundanceEstimate(Matrix values)
    : x(std::move(values)), feasibility_tolerance(simplex_violation(x))
{
}

Matrix AbundanceEstimate::clamped() const { return x.cwiseMax(0.0); }

Vector AbundanceEstimate::row_means() const { return x.rowwise().mean(); }

Matrix SceneGroundTruth::embedded_abundances() const
{
    const Index n = true_abundances.cols();
    Matrix out = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < endmember_pixel_indices.size(); ++k) {
        out.row(endmember_pixel_indices[k]) = true_abundances.row(static_cast<Index>(k));
    }
    return out;
}

} // namespace unmix
