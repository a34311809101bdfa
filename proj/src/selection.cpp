#include "unmix/selection.hpp"

#include <algorithm>
#include <numeric>

#include "unmix/errors.hpp"

namespace unmix {

EndmemberSet detect_endmembers(const AbundanceEstimate& abundance, const CandidateSet& candidates,
                               const SpectralScene& scene, double threshold)
{
    if (!(threshold > 0.0)) {
        throw InvalidParameter("detection threshold must be > 0");
    }
    if (abundance.x.rows() != candidates.size() || abundance.x.cols() != scene.pixel_count()) {
        throw DimensionError("abundance matrix does not match candidates x pixels");
    }
    const Vector means = abundance.row_means();
    std::vector<Index> rows;
    for (Index i = 0; i < means.size(); ++i) {
        if (means(i) > threshold) {
            rows.push_back(i);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) { return means(a) > means(b); });

    EndmemberSet out;
    out.spectra.resize(scene.band_count(), static_cast<Index>(rows.size()));
    out.row_scores.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Index pixel = candidates.indices[static_cast<std::size_t>(rows[k])];
        out.pixel_indices.push_back(pixel);
        out.spectra.col(static_cast<Index>(k)) = scene.pixel(pixel);
        out.row_scores(static_cast<Index>(k)) = means(rows[k]);
    }
    return out;
}

double mutual_coherence(const Vector& a, const Vector& b)
{
    if (a.size() != b.size()) {
        throw DimensionError("coherence: spectra differ in length");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw InvalidInput("coherence undefined for a zero spectrum");
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

EndmemberSet deduplicate(const EndmemberSet& endmembers, double max_coherence)
{
    if (!(max_coherence > 0.0 && max_coherence <= 1.0)) {
        throw InvalidParameter("max_coherence must lie in (0, 1]");
    }
    std::vector<Index> order(endmembers.pixel_indices.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return endmembers.row_scores(a) > endmembers.row_scores(b); });

    std::vector<Index> kept;
    for (const Index k : order) {
        const Vector candidate = endmembers.spectra.col(k);
        const bool distinct = std::all_of(kept.begin(), kept.end(), [&](Index other) {
            return mutual_coherence(candidate, endmembers.spectra.col(other)) <= max_coherence;
        });
        if (distinct) {
            kept.push_back(k);
        }
    }

    EndmemberSet out;
    out.spectra.resize(endmembers.spectra.rows(), static_cast<Index>(kept.size()));
    out.row_scores.resize(static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.pixel_indices.push_back(endmembers.pixel_indices[static_cast<std::size_t>(kept[i])]);
        out.spectra.col(static_cast<Index>(i)) = endmembers.spectra.col(kept[i]);
        out.row_scores(static_cast<Index>(i)) = endmembers.row_scores(kept[i]);
    }
    return out;
}

} // namespace unmix
