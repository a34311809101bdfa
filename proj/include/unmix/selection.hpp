#pragma once

#include "unmix/core.hpp"

namespace unmix {

inline constexpr double kDefaultDetectionThreshold = 0.01;
inline constexpr double kDefaultMaxCoherence = 0.95;

struct EndmemberSet {
    IndexList pixel_indices;  // into the scene, ordered by descending score
    Matrix spectra;           // L x M_hat
    Vector row_scores;

    Index size() const { return static_cast<Index>(pixel_indices.size()); }
};

/// Candidates whose abundance-row mean exceeds `threshold`, sorted by
/// descending mean (ties keep candidate order).
EndmemberSet detect_endmembers(const AbundanceEstimate& abundance, const CandidateSet& candidates,
                               const SpectralScene& scene, double threshold = kDefaultDetectionThreshold);

/// Cosine similarity of two spectra; throws InvalidInput on a zero vector.
double mutual_coherence(const Vector& a, const Vector& b);

/// Greedy pass in descending score order: keeps an endmember only when its
/// coherence with every kept one is <= max_coherence.
EndmemberSet deduplicate(const EndmemberSet& endmembers, double max_coherence = kDefaultMaxCoherence);

} // namespace unmix
