#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "unmix/core.hpp"

namespace unmix {

enum class PurePixelPlacement { FirstM, Random };

struct SynthConfig {
    Index band_count = 420;
    Index endmember_count = 3;
    Index pixel_count = 100;
    /// +infinity disables noise.
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    PurePixelPlacement placement = PurePixelPlacement::FirstM;
    double target_max_coherence = 0.95;
    /// Optional L x M spectra to use instead of the generator.
    std::optional<Matrix> library;

    void validate() const;
};

struct SpectraLibrary {
    Matrix spectra;  // L x M, nonnegative, max entry in (0, 1]
    double max_coherence = 0.0;
    double mean_coherence = 0.0;
    /// False when the retry budget ran out before meeting the coherence target.
    bool coherence_target_met = true;
};

/// Smooth nonnegative spectra: 3 to 8 Gaussian bumps over a gentle linear
/// baseline. Each new spectrum is redrawn (up to 100 attempts) until its
/// coherence with the earlier ones is <= target_max_coherence; otherwise the
/// least coherent draw is kept and the flag is cleared.
SpectraLibrary generate_endmember_spectra(const SynthConfig& config);

/// Columns i.i.d. Dirichlet(1, ..., 1), renormalized to sum to 1.
Matrix generate_abundances(Index m, Index n_mixed, std::uint64_t seed);

struct SyntheticScene {
    SpectralScene scene;
    SceneGroundTruth truth;
    SpectraLibrary library;
};

/// S = R A + E with pure pixels at the configured placement and i.i.d.
/// Gaussian E scaled so that ||RA||_F^2 / ||E||_F^2 matches snr_db in
/// expectation.
SyntheticScene synthesize_scene(const SynthConfig& config);

/// Pairwise coherence summary of the columns of `spectra`.
struct CoherenceSummary {
    double max = 0.0;
    double mean = 0.0;
};
CoherenceSummary coherence_summary(const Matrix& spectra);

struct QualityMetrics {
    /// (1/N^2) ||X_hat - X||_F^2, with N the column count.
    double rmse_n2 = 0.0;
    /// sqrt(mean squared entry error).
    double rmse = 0.0;
    double max_spectral_angle_rad = 0.0;
    double avg_spectral_angle_rad = 0.0;
};

/// Error metrics between matching matrices. Angles are taken column by
/// column, skipping columns where either side is zero.
QualityMetrics compute_metrics(const Matrix& x_hat, const Matrix& x_true);

/// arccos of the mutual coherence, in radians.
double spectral_angle(const Vector& a, const Vector& b);

/// For each reference spectrum, the smallest angle to any estimated one.
QualityMetrics compare_spectra(const Matrix& estimated, const Matrix& reference);

double realized_snr_db(const Matrix& clean, const Matrix& noise);

} // namespace unmix
