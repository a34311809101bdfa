#include "unmix/prox.hpp"

#include <algorithm>
#include <functional>
#include <vector>

#include "unmix/errors.hpp"

namespace unmix {

Vector prox_positive_misto(const Vector& v, double alpha)
{
    if (!(alpha >= 0.0)) {
        throw InvalidParameter("prox threshold must be >= 0");
    }
    if (!v.allFinite()) {
        throw InvalidInput("prox input contains non-finite values");
    }
    Vector p = v.cwiseMax(0.0);
    return misto_shrink_factor(p.norm(), alpha) * p;
}

Vector project_simplex(const Vector& v)
{
    if (v.size() == 0) {
        throw InvalidInput("cannot project an empty vector onto the simplex");
    }
    if (!v.allFinite()) {
        throw InvalidInput("simplex projection input contains non-finite values");
    }
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    // Largest k with sorted[k-1] - (cumsum_k - 1)/k > 0 fixes the threshold.
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumsum += sorted[k];
        const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) {
            tau = candidate;
        }
    }
    Vector z = (v.array() - tau).max(0.0).matrix();

    // Re-normalize the support so the sum is 1 to rounding.
    const double total = z.sum();
    if (total > 0.0) {
        z /= total;
    }
    return z;
}

} // namespace unmix
