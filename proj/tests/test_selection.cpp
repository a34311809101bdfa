#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "unmix/errors.hpp"
#include "unmix/selection.hpp"

using namespace unmix;
using testing_support::random_matrix;

namespace {

EndmemberSet make_set(const Matrix& spectra, const Vector& scores)
{
    EndmemberSet s;
    s.spectra = spectra;
    s.row_scores = scores;
    for (Index k = 0; k < spectra.cols(); ++k) {
        s.pixel_indices.push_back(k);
    }
    return s;
}

/// Size of the largest subset whose pairwise coherences are all <= bound.
int max_feasible_subset(const Matrix& spectra, double bound)
{
    const int m = static_cast<int>(spectra.cols());
    int best = 0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        bool ok = true;
        for (int a = 0; a < m && ok; ++a) {
            for (int b = a + 1; b < m && ok; ++b) {
                if ((mask >> a & 1u) && (mask >> b & 1u)) {
                    const double c = spectra.col(a).dot(spectra.col(b)) / (spectra.col(a).norm() * spectra.col(b).norm());
                    ok = c <= bound;
                }
            }
        }
        if (ok) {
            best = std::max(best, std::popcount(mask));
        }
    }
    return best;
}

} // namespace

TEST_CASE("detection keeps rows above the threshold in score order")
{
    const Index n = 10;
    Matrix x = Matrix::Constant(n, 20, 1e-6);
    x.row(0).setConstant(0.3);
    x.row(1).setConstant(0.4);
    x.row(2).setConstant(0.3);
    std::mt19937_64 rng(1);
    const SpectralScene scene(random_matrix(5, 20, rng, 0.1, 1.0));
    IndexList omega(static_cast<std::size_t>(n));
    std::iota(omega.begin(), omega.end(), Index{5});
    const auto cand = restrict_columns(scene, omega);
    const auto found = detect_endmembers(AbundanceEstimate(x), cand, scene, 0.01);
    CHECK(found.size() == 3);
    CHECK(found.pixel_indices == IndexList{6, 5, 7});
    CHECK(found.spectra.col(0) == scene.pixel(6));
    CHECK(found.row_scores(0) == doctest::Approx(0.4));

    const auto none = detect_endmembers(AbundanceEstimate(Matrix::Constant(n, 20, 1e-3)), cand, scene, 0.01);
    CHECK(none.size() == 0);
}

TEST_CASE("detection is monotone in the threshold")
{
    std::mt19937_64 rng(2);
    const SpectralScene scene(random_matrix(4, 15, rng, 0.1, 1.0));
    const auto cand = all_columns(scene);
    const AbundanceEstimate x(random_matrix(15, 15, rng, 0.0, 0.2));
    Index previous = std::numeric_limits<Index>::max();
    for (double t = 0.005; t < 0.2; t += 0.01) {
        const auto found = detect_endmembers(x, cand, scene, t);
        CHECK(found.size() <= previous);
        previous = found.size();
    }
}

TEST_CASE("mutual coherence examples and properties")
{
    const Vector a{{1.0, 0.0}};
    const Vector b{{0.0, 1.0}};
    const Vector c{{1.0, 1.0}};
    CHECK(mutual_coherence(c, c) == doctest::Approx(1.0));
    CHECK(mutual_coherence(a, b) == 0.0);
    CHECK(mutual_coherence(a, c) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(mutual_coherence(a, Vector::Zero(2)), InvalidInput);
    CHECK_THROWS_AS(mutual_coherence(a, Vector::Ones(3)), DimensionError);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const Vector u = random_matrix(6, 1, rng);
        const Vector v = random_matrix(6, 1, rng);
        CHECK(mutual_coherence(u, v) == doctest::Approx(mutual_coherence(v, u)).epsilon(1e-14));
        CHECK(mutual_coherence(3.0 * u, 0.2 * v) == doctest::Approx(mutual_coherence(u, v)).epsilon(1e-12));
    }
}

TEST_CASE("deduplication examples")
{
    Matrix same(3, 2);
    same << 1, 1,
            2, 2,
            3, 3;
    const auto kept = deduplicate(make_set(same, Vector{{0.2, 0.5}}), 0.95);
    REQUIRE(kept.size() == 1);
    CHECK(kept.pixel_indices[0] == 1);

    const auto ortho = deduplicate(make_set(Matrix::Identity(4, 4), Vector::Ones(4)), 0.95);
    CHECK(ortho.size() == 4);
}

TEST_CASE("deduplication of eight spectra with one near-duplicate pair")
{
    // Seven well-separated spectra and a perturbed copy of the third.
    std::mt19937_64 rng(4);
    Matrix spectra(60, 8);
    for (;;) {
        spectra.leftCols(7) = random_matrix(60, 7, rng, 0.0, 1.0).array().pow(4).matrix();
        Vector dup = spectra.col(2);
        const Vector jitter = random_matrix(60, 1, rng, 0.0, 1.0);
        // Blend toward random noise until the coherence with column 2 is 0.99.
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            const Vector candidate = (1.0 - mid) * dup + mid * jitter;
            (mutual_coherence(candidate, dup) > 0.99 ? lo : hi) = mid;
        }
        spectra.col(7) = (1.0 - lo) * dup + lo * jitter;
        bool separated = true;
        for (Index a = 0; a < 8; ++a) {
            for (Index b = a + 1; b < 8; ++b) {
                if (!(a == 2 && b == 7) && mutual_coherence(spectra.col(a), spectra.col(b)) > 0.9) {
                    separated = false;
                }
            }
        }
        if (separated) {
            break;
        }
    }
    const Vector scores{{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2}};
    const auto kept = deduplicate(make_set(spectra, scores), 0.95);
    CHECK(kept.size() == 7);
    CHECK(kept.size() == max_feasible_subset(spectra, 0.95));
    CHECK(std::find(kept.pixel_indices.begin(), kept.pixel_indices.end(), 7) == kept.pixel_indices.end());
    for (Index a = 0; a < kept.size(); ++a) {
        for (Index b = a + 1; b < kept.size(); ++b) {
            CHECK(mutual_coherence(kept.spectra.col(a), kept.spectra.col(b)) <= 0.95);
        }
    }
}
