#pragma once
// Slow reference implementations used only to check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double misto_objective(const VectorXd& z, const VectorXd& v, double alpha)
{
    return 0.5 * (z - v).squaredNorm() + alpha * z.norm();
}

/// Minimizes 0.5||z - v||^2 + alpha||z|| over z >= 0 by projected gradient
/// descent with backtracking, started from several points, keeping the best
/// iterate (the origin is always a candidate).
inline VectorXd misto_minimizer(const VectorXd& v, double alpha, int iterations = 4000)
{
    const auto f = [&](const VectorXd& z) { return misto_objective(z, v, alpha); };
    VectorXd best = VectorXd::Zero(v.size());
    double best_value = f(best);
    const VectorXd starts[] = {v.cwiseMax(0.0), VectorXd::Constant(v.size(), 1.0), v.cwiseAbs()};
    for (const VectorXd& start : starts) {
        VectorXd z = start;
        double step = 1.0;
        for (int k = 0; k < iterations; ++k) {
            const double n = z.norm();
            if (n == 0.0) {
                break;
            }
            const VectorXd grad = z - v + alpha * z / n;
            const double fz = f(z);
            step = std::min(1.0, step * 2.0);
            VectorXd trial;
            for (;;) {
                trial = (z - step * grad).cwiseMax(0.0);
                if (f(trial) <= fz - 0.5 / step * (trial - z).squaredNorm() || step < 1e-14) {
                    break;
                }
                step *= 0.5;
            }
            if ((trial - z).norm() < 1e-15) {
                break;
            }
            z = trial;
        }
        if (f(z) < best_value) {
            best_value = f(z);
            best = z;
        }
    }
    return best;
}

/// Best point of a regular grid with the given step on the probability simplex
/// (dimension 2 or 3) for min ||z - v||^2.
inline VectorXd simplex_grid_minimizer(const VectorXd& v, double h)
{
    const int steps = static_cast<int>(std::lround(1.0 / h));
    VectorXd best;
    double best_value = std::numeric_limits<double>::infinity();
    const auto consider = [&](const VectorXd& z) {
        const double value = (z - v).squaredNorm();
        if (value < best_value) {
            best_value = value;
            best = z;
        }
    };
    if (v.size() == 2) {
        for (int i = 0; i <= steps; ++i) {
            consider(VectorXd{{i * h, 1.0 - i * h}});
        }
    } else {
        for (int i = 0; i <= steps; ++i) {
            for (int j = 0; i + j <= steps; ++j) {
                consider(VectorXd{{i * h, j * h, std::max(0.0, 1.0 - (i + j) * h)}});
            }
        }
    }
    return best;
}

/// Minimizes 0.5 a'Ha - f'a over the simplex by enumerating every support,
/// solving the equality-constrained problem on it and keeping the best
/// feasible candidate.
inline VectorXd simplex_qp_enumeration(const MatrixXd& h, const VectorXd& f)
{
    const Index m = h.rows();
    VectorXd best = VectorXd::Zero(m);
    double best_value = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<Index> support;
        for (Index i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                support.push_back(i);
            }
        }
        const Index k = static_cast<Index>(support.size());
        MatrixXd kkt = MatrixXd::Zero(k + 1, k + 1);
        VectorXd rhs(k + 1);
        for (Index a = 0; a < k; ++a) {
            for (Index b = 0; b < k; ++b) {
                kkt(a, b) = h(support[a], support[b]);
            }
            kkt(a, k) = 1.0;
            kkt(k, a) = 1.0;
            rhs(a) = f(support[a]);
        }
        rhs(k) = 1.0;
        const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        VectorXd a = VectorXd::Zero(m);
        for (Index i = 0; i < k; ++i) {
            a(support[i]) = sol(i);
        }
        if (a.minCoeff() < -1e-12 || std::abs(a.sum() - 1.0) > 1e-9) {
            continue;
        }
        a = a.cwiseMax(0.0);
        a /= a.sum();
        const double value = 0.5 * a.dot(h * a) - f.dot(a);
        if (value < best_value) {
            best_value = value;
            best = a;
        }
    }
    return best;
}

/// The ADMM constraint matrices for the split X = Z, 1'X = 1'.
struct Constraints {
    MatrixXd a, b, c;
};

inline Constraints materialize_constraints(Index candidates, Index pixels)
{
    Constraints k;
    k.a = MatrixXd::Zero(candidates + 1, candidates);
    k.a.topRows(candidates).setIdentity();
    k.a.row(candidates).setOnes();
    k.b = MatrixXd::Zero(candidates + 1, candidates);
    k.b.topRows(candidates) = -MatrixXd::Identity(candidates, candidates);
    k.c = MatrixXd::Zero(candidates + 1, pixels);
    k.c.row(candidates).setOnes();
    return k;
}

/// Restriction of the N x N identity to the given columns.
inline MatrixXd identity_restriction(const std::vector<Index>& omega, Index n)
{
    MatrixXd r = MatrixXd::Zero(n, static_cast<Index>(omega.size()));
    for (std::size_t k = 0; k < omega.size(); ++k) {
        r(omega[k], static_cast<Index>(k)) = 1.0;
    }
    return r;
}

/// Column-major Kronecker product.
inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b)
{
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Solves P X Q + R X T = F for X through the vectorized Kronecker system.
inline MatrixXd solve_two_sided(const MatrixXd& p, const MatrixXd& q, const MatrixXd& r, const MatrixXd& t,
                                const MatrixXd& f)
{
    const MatrixXd system = kron(q.transpose(), p) + kron(t.transpose(), r);
    const VectorXd vec_f = Eigen::Map<const VectorXd>(f.data(), f.size());
    const VectorXd vec_x = system.fullPivLu().solve(vec_f);
    return Eigen::Map<const MatrixXd>(vec_x.data(), p.cols(), q.rows());
}

inline double group_lasso_objective(const MatrixXd& s, const MatrixXd& dict, const MatrixXd& x, double mu)
{
    double penalty = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        penalty += x.row(i).norm();
    }
    return 0.5 * (s - dict * x).squaredNorm() + mu * penalty;
}

/// Projection of each column onto the simplex by bisection on the threshold.
inline MatrixXd project_columns_bisection(const MatrixXd& y)
{
    MatrixXd out(y.rows(), y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
        double lo = y.col(j).minCoeff() - 1.0;
        double hi = y.col(j).maxCoeff();
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double total = (y.col(j).array() - mid).cwiseMax(0.0).sum();
            (total > 1.0 ? lo : hi) = mid;
        }
        out.col(j) = (y.col(j).array() - 0.5 * (lo + hi)).cwiseMax(0.0).matrix();
        out.col(j) /= out.col(j).sum();
    }
    return out;
}

/// Group-lasso program over simplex columns, solved by a proximal-gradient
/// loop whose row prox is evaluated by an inner Dykstra split (group shrink
/// then column projection). Slow but generic; returns the best feasible
/// objective found.
inline double group_lasso_simplex_oracle(const MatrixXd& s, const MatrixXd& dict, double mu, int iterations)
{
    const Index n_prime = dict.cols();
    const Index n = s.cols();
    const MatrixXd gram = dict.transpose() * dict;
    const MatrixXd cross = dict.transpose() * s;
    const double lipschitz = Eigen::SelfAdjointEigenSolver<MatrixXd>(gram).eigenvalues().maxCoeff();
    const double step = 1.0 / lipschitz;
    MatrixXd x = MatrixXd::Constant(n_prime, n, 1.0 / static_cast<double>(n_prime));
    MatrixXd y = x;
    double t = 1.0;
    double best = group_lasso_objective(s, dict, x, mu);
    for (int k = 0; k < iterations; ++k) {
        const MatrixXd target = y - step * (gram * y - cross);
        // Dykstra for prox of step*mu*sum||rows|| + simplex indicator.
        MatrixXd u = target;
        MatrixXd p = MatrixXd::Zero(n_prime, n);
        MatrixXd q = MatrixXd::Zero(n_prime, n);
        MatrixXd v;
        for (int d = 0; d < 300; ++d) {
            MatrixXd w = u + p;
            v = w;
            for (Index i = 0; i < n_prime; ++i) {
                const double norm = w.row(i).norm();
                v.row(i) *= norm <= step * mu ? 0.0 : 1.0 - step * mu / norm;
            }
            p = w - v;
            const MatrixXd w2 = v + q;
            u = project_columns_bisection(w2);
            q = w2 - u;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = u + ((t - 1.0) / t_next) * (u - x);
        x = u;
        t = t_next;
        best = std::min(best, group_lasso_objective(s, dict, x, mu));
    }
    return best;
}

} // namespace oracle
