#include "unmix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "unmix/errors.hpp"
#include "unmix/selection.hpp"

namespace unmix {

namespace {

// Independent generator per purpose so that changing one stream's usage
// (e.g. the number of spectra retries) leaves the others untouched.
enum class Stream : std::uint64_t { Spectra = 1, Abundances = 2, Placement = 3, Noise = 4 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

Vector draw_spectrum(Index bands, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> bump_count(3, 8);

    const Vector t = Vector::LinSpaced(bands, 0.0, 1.0);
    const double offset = 0.02 + 0.2 * unit(rng);
    const double slope = -0.1 + 0.3 * unit(rng);
    Vector s = (offset + slope * t.array()).max(0.0).matrix();

    const int bumps = bump_count(rng);
    for (int b = 0; b < bumps; ++b) {
        const double amplitude = 0.1 + 0.9 * unit(rng);
        const double center = unit(rng);
        const double width = 0.02 + 0.15 * unit(rng);
        s.array() += amplitude * (-0.5 * ((t.array() - center) / width).square()).exp();
    }
    const double peak = 0.4 + 0.6 * unit(rng);
    return s * (peak / s.maxCoeff());
}

} // namespace

void SynthConfig::validate() const
{
    const Index bands = library ? library->rows() : band_count;
    const Index m = library ? library->cols() : endmember_count;
    if (m < 1) {
        throw InvalidParameter("need at least one endmember");
    }
    if (pixel_count < m) {
        throw InvalidParameter("pixel count must be >= endmember count");
    }
    if (bands < m) {
        throw InvalidParameter("band count must be >= endmember count");
    }
    if (std::isnan(snr_db)) {
        throw InvalidParameter("SNR must be a number");
    }
    if (!(target_max_coherence > 0.0 && target_max_coherence <= 1.0)) {
        throw InvalidParameter("target coherence must lie in (0, 1]");
    }
    if (library) {
        require_finite(*library, "spectral library");
        if ((library->array() < 0.0).any()) {
            throw InvalidInput("spectral library contains negative reflectance");
        }
    }
}

CoherenceSummary coherence_summary(const Matrix& spectra)
{
    CoherenceSummary out;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (Index i = 0; i < spectra.cols(); ++i) {
        for (Index j = i + 1; j < spectra.cols(); ++j) {
            const double c = mutual_coherence(spectra.col(i), spectra.col(j));
            out.max = std::max(out.max, c);
            sum += c;
            ++pairs;
        }
    }
    out.mean = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    return out;
}

SpectraLibrary generate_endmember_spectra(const SynthConfig& config)
{
    config.validate();
    constexpr int kMaxAttempts = 100;
    auto rng = make_engine(config.seed, Stream::Spectra);

    SpectraLibrary lib;
    lib.spectra.resize(config.band_count, config.endmember_count);
    for (Index k = 0; k < config.endmember_count; ++k) {
        Vector best;
        double best_coherence = std::numeric_limits<double>::infinity();
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            Vector candidate = draw_spectrum(config.band_count, rng);
            double worst = 0.0;
            for (Index j = 0; j < k; ++j) {
                worst = std::max(worst, mutual_coherence(candidate, lib.spectra.col(j)));
            }
            if (worst < best_coherence) {
                best_coherence = worst;
                best = std::move(candidate);
            }
            if (best_coherence <= config.target_max_coherence) {
                break;
            }
        }
        if (best_coherence > config.target_max_coherence) {
            lib.coherence_target_met = false;
        }
        lib.spectra.col(k) = best;
    }
    const auto summary = coherence_summary(lib.spectra);
    lib.max_coherence = summary.max;
    lib.mean_coherence = summary.mean;
    return lib;
}

Matrix generate_abundances(Index m, Index n_mixed, std::uint64_t seed)
{
    if (m < 1 || n_mixed < 0) {
        throw InvalidParameter("abundance shape must be m >= 1, n >= 0");
    }
    auto rng = make_engine(seed, Stream::Abundances);
    // Dirichlet(1,...,1) as normalized unit-rate exponentials.
    std::exponential_distribution<double> exponential(1.0);
    Matrix a(m, n_mixed);
    for (Index j = 0; j < n_mixed; ++j) {
        for (Index i = 0; i < m; ++i) {
            a(i, j) = exponential(rng);
        }
        a.col(j) /= a.col(j).sum();
    }
    return a;
}

SyntheticScene synthesize_scene(const SynthConfig& config)
{
    config.validate();
    SpectraLibrary lib;
    if (config.library) {
        lib.spectra = *config.library;
        const auto summary = coherence_summary(lib.spectra);
        lib.max_coherence = summary.max;
        lib.mean_coherence = summary.mean;
        lib.coherence_target_met = summary.max <= config.target_max_coherence;
    } else {
        lib = generate_endmember_spectra(config);
    }
    const Index m = lib.spectra.cols();
    const Index bands = lib.spectra.rows();
    const Index n = config.pixel_count;

    IndexList order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (config.placement == PurePixelPlacement::Random) {
        auto rng = make_engine(config.seed, Stream::Placement);
        std::shuffle(order.begin(), order.end(), rng);
    }
    IndexList pure(order.begin(), order.begin() + m);
    if (config.placement == PurePixelPlacement::Random) {
        std::sort(pure.begin(), pure.end());
    }
    std::vector<bool> is_pure(static_cast<std::size_t>(n), false);
    for (const Index p : pure) {
        is_pure[static_cast<std::size_t>(p)] = true;
    }

    const Matrix mixed = generate_abundances(m, n - m, config.seed);
    Matrix a = Matrix::Zero(m, n);
    Index next_mixed = 0;
    for (Index j = 0; j < n; ++j) {
        if (!is_pure[static_cast<std::size_t>(j)]) {
            a.col(j) = mixed.col(next_mixed++);
        }
    }
    for (Index k = 0; k < m; ++k) {
        a(k, pure[static_cast<std::size_t>(k)]) = 1.0;
    }

    const Matrix clean = lib.spectra * a;
    Matrix noise = Matrix::Zero(bands, n);
    double sigma = 0.0;
    if (std::isfinite(config.snr_db)) {
        const double variance =
            clean.squaredNorm() / (static_cast<double>(bands * n) * std::pow(10.0, config.snr_db / 10.0));
        sigma = std::sqrt(variance);
        auto rng = make_engine(config.seed, Stream::Noise);
        std::normal_distribution<double> normal(0.0, sigma);
        for (Index k = 0; k < noise.size(); ++k) {
            noise.data()[k] = normal(rng);
        }
    }

    SceneGroundTruth truth;
    truth.endmember_spectra = lib.spectra;
    truth.true_abundances = std::move(a);
    truth.endmember_pixel_indices = std::move(pure);
    truth.noise_sigma = sigma;
    truth.noise = noise;
    return SyntheticScene{SpectralScene(clean + noise), std::move(truth), std::move(lib)};
}

double spectral_angle(const Vector& a, const Vector& b) { return std::acos(mutual_coherence(a, b)); }

QualityMetrics compute_metrics(const Matrix& x_hat, const Matrix& x_true)
{
    if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols()) {
        throw DimensionError("metrics: estimate and truth differ in shape");
    }
    QualityMetrics q;
    const double sq = (x_hat - x_true).squaredNorm();
    const auto n = static_cast<double>(x_true.cols());
    q.rmse_n2 = sq / (n * n);
    q.rmse = x_true.size() > 0 ? std::sqrt(sq / static_cast<double>(x_true.size())) : 0.0;

    double angle_sum = 0.0;
    std::size_t counted = 0;
    for (Index j = 0; j < x_true.cols(); ++j) {
        if (x_hat.col(j).norm() > 0.0 && x_true.col(j).norm() > 0.0) {
            const double angle = spectral_angle(x_hat.col(j), x_true.col(j));
            q.max_spectral_angle_rad = std::max(q.max_spectral_angle_rad, angle);
            angle_sum += angle;
            ++counted;
        }
    }
    q.avg_spectral_angle_rad = counted > 0 ? angle_sum / static_cast<double>(counted) : 0.0;
    return q;
}

QualityMetrics compare_spectra(const Matrix& estimated, const Matrix& reference)
{
    if (estimated.rows() != reference.rows()) {
        throw DimensionError("spectra comparison: band counts differ");
    }
    if (estimated.cols() == 0) {
        throw InvalidInput("no estimated spectra to compare");
    }
    QualityMetrics q;
    double sum = 0.0;
    for (Index r = 0; r < reference.cols(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (Index e = 0; e < estimated.cols(); ++e) {
            best = std::min(best, spectral_angle(estimated.col(e), reference.col(r)));
        }
        q.max_spectral_angle_rad = std::max(q.max_spectral_angle_rad, best);
        sum += best;
    }
    q.avg_spectral_angle_rad = reference.cols() > 0 ? sum / static_cast<double>(reference.cols()) : 0.0;
    return q;
}

double realized_snr_db(const Matrix& clean, const Matrix& noise)
{
    return 10.0 * std::log10(clean.squaredNorm() / noise.squaredNorm());
}

} // namespace unmix
