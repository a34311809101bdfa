#pragma once

#include "unmix/core.hpp"

namespace unmix {

/// Proximity operator of alpha*||z||_2 restricted to z >= 0.
///
/// Projects onto the positive orthant, then applies block soft-thresholding:
/// with p = max(v, 0), returns 0 when ||p|| <= alpha and (1 - alpha/||p||) p
/// otherwise. This is the unique minimizer of 0.5||z - v||^2 + alpha||z||
/// over z >= 0. Throws InvalidParameter for alpha < 0 and InvalidInput for
/// non-finite v.
Vector prox_positive_misto(const Vector& v, double alpha);

/// Shrink factor (1 - alpha/norm)_+ applied to an already projected vector.
inline double misto_shrink_factor(double projected_norm, double alpha)
{
    return projected_norm <= alpha ? 0.0 : 1.0 - alpha / projected_norm;
}

/// Euclidean projection onto {z >= 0, sum z = 1}, sort-and-threshold.
Vector project_simplex(const Vector& v);

} // namespace unmix
