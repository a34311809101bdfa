#pragma once

#include <cstdint>
#include <vector>

#include "unmix/core.hpp"
#include "unmix/selection.hpp"

namespace unmix {

struct FclsResult {
    Matrix abundances;          // M x N, columns on the simplex
    Vector per_pixel_residual;  // ||s_j - R a_j||_2
    /// Largest projected-gradient stationarity residual over all pixels.
    double max_kkt_residual = 0.0;
};

inline constexpr double kFclsKktTolerance = 1e-6;

/// Simplex-constrained least squares for one pixel: min 0.5||s - R a||^2,
/// a >= 0, 1'a = 1, given H = R'R and f = R's.
Vector fcls_pixel(const Matrix& hessian, const Vector& linear);

/// || a - P_simplex(a - (H a - f)) ||_inf; zero exactly at the optimum.
double fcls_kkt_residual(const Matrix& hessian, const Vector& linear, const Vector& a);

/// Per-pixel FCLS. Throws InvalidInput for non-finite data or zero
/// endmember columns, NumericalError if a pixel fails KKT certification.
FclsResult fcls(const SpectralScene& scene, const Matrix& endmember_spectra);

struct NfindrResult {
    EndmemberSet endmembers;       // row_scores are all 1
    std::vector<double> volume_history;  // initial volume, then one entry per accepted swap
    std::size_t sweeps = 0;
};

inline constexpr std::size_t kDefaultNfindrSweeps = 50;

/// N-FINDR: PCA to m-1 dimensions, random initial vertices, then full
/// (pixel, vertex) swap sweeps accepting strict volume increases.
NfindrResult nfindr(const SpectralScene& scene, Index m, std::uint64_t seed,
                    std::size_t max_sweeps = kDefaultNfindrSweeps);

/// |det [1'; V]| for the (m-1) x m projected vertices V.
double simplex_volume(const Matrix& projected_vertices);

} // namespace unmix
