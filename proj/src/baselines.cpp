#include "unmix/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "unmix/errors.hpp"
#include "unmix/prox.hpp"

namespace unmix {

namespace {

// Minimizer of the quadratic over {a_F : 1'a_F = 1} through the KKT system.
// The system is consistent even when H_FF is singular, so a minimum-norm
// least-squares solution is a valid minimizer.
Vector solve_face(const Matrix& hessian, const Vector& linear, const std::vector<Index>& free_set)
{
    const auto k = static_cast<Index>(free_set.size());
    Matrix kkt = Matrix::Zero(k + 1, k + 1);
    Vector rhs(k + 1);
    for (Index r = 0; r < k; ++r) {
        for (Index c = 0; c < k; ++c) {
            kkt(r, c) = hessian(free_set[static_cast<std::size_t>(r)], free_set[static_cast<std::size_t>(c)]);
        }
        kkt(r, k) = 1.0;
        kkt(k, r) = 1.0;
        rhs(r) = linear(free_set[static_cast<std::size_t>(r)]);
    }
    rhs(k) = 1.0;
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(k);
}

Vector projected_gradient_polish(const Matrix& hessian, const Vector& linear, Vector a)
{
    const double lipschitz = std::max(hessian.diagonal().sum(), std::numeric_limits<double>::min());
    Vector y = a;
    double t = 1.0;
    for (int it = 0; it < 20000; ++it) {
        const Vector next = project_simplex(y - (hessian * y - linear) / lipschitz);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - a);
        a = next;
        t = t_next;
    }
    return a;
}

} // namespace

double fcls_kkt_residual(const Matrix& hessian, const Vector& linear, const Vector& a)
{
    const Vector gradient = hessian * a - linear;
    return (a - project_simplex(a - gradient)).cwiseAbs().maxCoeff();
}

Vector fcls_pixel(const Matrix& hessian, const Vector& linear)
{
    const Index m = hessian.rows();
    const double scale = 1.0 + hessian.cwiseAbs().maxCoeff() + linear.cwiseAbs().maxCoeff();
    const double tol = 1e-13 * scale;

    // Start at the best vertex.
    Index start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
        const double value = 0.5 * hessian(i, i) - linear(i);
        if (value < best) {
            best = value;
            start = i;
        }
    }
    Vector a = Vector::Zero(m);
    a(start) = 1.0;
    std::vector<Index> free_set{start};

    const int max_steps = 20 * static_cast<int>(m) + 50;
    for (int step = 0; step < max_steps; ++step) {
        const Vector target = solve_face(hessian, linear, free_set);
        const auto k = static_cast<Index>(free_set.size());

        Index blocking = -1;
        double alpha = 1.0;
        for (Index r = 0; r < k; ++r) {
            const Index i = free_set[static_cast<std::size_t>(r)];
            const double direction = target(r) - a(i);
            if (target(r) < 0.0 && direction < 0.0) {
                const double ratio = -a(i) / direction;
                if (ratio < alpha) {
                    alpha = ratio;
                    blocking = r;
                }
            }
        }

        if (blocking < 0) {
            for (Index r = 0; r < k; ++r) {
                a(free_set[static_cast<std::size_t>(r)]) = target(r);
            }
            // Multipliers of the inactive bounds: g_i + nu with nu = -mean(g_F).
            const Vector gradient = hessian * a - linear;
            double nu = 0.0;
            for (const Index i : free_set) {
                nu -= gradient(i);
            }
            nu /= static_cast<double>(k);
            Index entering = -1;
            double most_negative = -tol;
            for (Index i = 0; i < m; ++i) {
                if (std::find(free_set.begin(), free_set.end(), i) != free_set.end()) {
                    continue;
                }
                const double multiplier = gradient(i) + nu;
                if (multiplier < most_negative) {
                    most_negative = multiplier;
                    entering = i;
                }
            }
            if (entering < 0) {
                break;
            }
            free_set.push_back(entering);
            continue;
        }

        for (Index r = 0; r < k; ++r) {
            const Index i = free_set[static_cast<std::size_t>(r)];
            a(i) += alpha * (target(r) - a(i));
        }
        a(free_set[static_cast<std::size_t>(blocking)]) = 0.0;
        std::erase_if(free_set, [&](Index i) { return a(i) <= 0.0; });
        if (free_set.empty()) {
            break;
        }
    }

    a = a.cwiseMax(0.0);
    const double total = a.sum();
    if (total > 0.0) {
        a /= total;
    } else {
        a = Vector::Constant(m, 1.0 / static_cast<double>(m));
    }
    if (fcls_kkt_residual(hessian, linear, a) > kFclsKktTolerance * scale) {
        a = projected_gradient_polish(hessian, linear, a);
    }
    return a;
}

FclsResult fcls(const SpectralScene& scene, const Matrix& endmember_spectra)
{
    if (endmember_spectra.cols() < 1) {
        throw InvalidInput("FCLS needs at least one endmember");
    }
    if (endmember_spectra.rows() != scene.band_count()) {
        throw DimensionError("FCLS: endmember band count does not match the scene");
    }
    require_finite(endmember_spectra, "endmember spectra");
    if ((endmember_spectra.colwise().norm().array() == 0.0).any()) {
        throw InvalidInput("FCLS: endmember spectra must be nonzero");
    }

    const Matrix hessian = endmember_spectra.transpose() * endmember_spectra;
    const Matrix linear_all = endmember_spectra.transpose() * scene.data();
    const Index n = scene.pixel_count();

    FclsResult out;
    out.abundances.resize(endmember_spectra.cols(), n);
    out.per_pixel_residual.resize(n);
    for (Index j = 0; j < n; ++j) {
        const Vector linear = linear_all.col(j);
        const Vector a = fcls_pixel(hessian, linear);
        const double scale = 1.0 + hessian.cwiseAbs().maxCoeff() + linear.cwiseAbs().maxCoeff();
        const double kkt = fcls_kkt_residual(hessian, linear, a);
        if (kkt > kFclsKktTolerance * scale) {
            throw NumericalError("FCLS failed KKT certification at pixel " + std::to_string(j + 1));
        }
        out.max_kkt_residual = std::max(out.max_kkt_residual, kkt);
        out.abundances.col(j) = a;
        out.per_pixel_residual(j) = (scene.pixel(j) - endmember_spectra * a).norm();
    }
    return out;
}

double simplex_volume(const Matrix& projected_vertices)
{
    const Index m = projected_vertices.cols();
    Matrix augmented(m, m);
    augmented.row(0).setOnes();
    augmented.bottomRows(m - 1) = projected_vertices;
    return std::abs(augmented.fullPivLu().determinant());
}

NfindrResult nfindr(const SpectralScene& scene, Index m, std::uint64_t seed, std::size_t max_sweeps)
{
    const Index n = scene.pixel_count();
    if (m < 2) {
        throw InvalidParameter("N-FINDR needs m >= 2");
    }
    if (n < m) {
        throw InvalidInput("N-FINDR: fewer pixels than requested endmembers");
    }

    // Principal components of the mean-centered scene.
    const Vector mean = scene.data().rowwise().mean();
    const Matrix centered = scene.data().colwise() - mean;
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    Index dims = std::min<Index>(m - 1, svd.matrixU().cols());
    Matrix projected = Matrix::Zero(m - 1, n);
    projected.topRows(dims) = svd.matrixU().leftCols(dims).transpose() * centered;

    std::mt19937_64 rng(seed);
    IndexList order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    IndexList vertices(order.begin(), order.begin() + m);

    Matrix current(m - 1, m);
    for (Index k = 0; k < m; ++k) {
        current.col(k) = projected.col(vertices[static_cast<std::size_t>(k)]);
    }

    NfindrResult result;
    double volume = simplex_volume(current);
    result.volume_history.push_back(volume);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        ++result.sweeps;
        bool changed = false;
        for (Index j = 0; j < n; ++j) {
            if (std::find(vertices.begin(), vertices.end(), j) != vertices.end()) {
                continue;
            }
            for (Index k = 0; k < m; ++k) {
                Matrix trial = current;
                trial.col(k) = projected.col(j);
                const double trial_volume = simplex_volume(trial);
                // Equal volumes (up to rounding) keep the current vertex.
                if (trial_volume > volume * (1.0 + 1e-12) && trial_volume > volume) {
                    current = std::move(trial);
                    vertices[static_cast<std::size_t>(k)] = j;
                    volume = trial_volume;
                    result.volume_history.push_back(volume);
                    changed = true;
                    break;
                }
            }
        }
        if (!changed) {
            break;
        }
    }

    auto& em = result.endmembers;
    em.pixel_indices = vertices;
    em.spectra.resize(scene.band_count(), m);
    for (Index k = 0; k < m; ++k) {
        em.spectra.col(k) = scene.pixel(vertices[static_cast<std::size_t>(k)]);
    }
    em.row_scores = Vector::Ones(m);
    return result;
}

} // namespace unmix
