#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "shrinklab/errors.hpp"

namespace shrinklab {

/// A one-dimensional quadrature rule together with the dense spectral
/// differentiation matrix on its nodes. `weights` are the weights of the
/// rule in the factor's own coordinate; what exactly they integrate against
/// depends on the factor kind and is documented at each constructor.
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    Eigen::MatrixXd diff;  // acts on node values; for polar factors this is
                           // the doubled (2N x 2N) Fourier matrix
};

/// Fourier differentiation matrix for N equispaced nodes with spacing h,
/// exact for trigonometric polynomials resolved by the grid.
inline Eigen::MatrixXd fourier_diff_matrix(int n, double h) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    const bool even = (n % 2 == 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double arg = 0.5 * (i - j) * h;
            const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
            d(i, j) = even ? 0.5 * sgn / std::tan(arg) : 0.5 * sgn / std::sin(arg);
        }
    }
    return d;
}

/// Barycentric polynomial differentiation matrix from nodes and barycentric
/// weights (only weight ratios matter).  The diagonal uses the negative-sum
/// trick.
inline Eigen::MatrixXd barycentric_diff_matrix(const std::vector<double>& x,
                                               const std::vector<double>& lam) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            d(i, j) = (lam[j] / lam[i]) / (x[i] - x[j]);
            diag -= d(i, j);
        }
        d(i, i) = diag;
    }
    return d;
}

/// Uniform rule on the circle of circumference `period`; exact for
/// trigonometric polynomials of degree < N.
inline Rule1D circle_rule(int n, double period = 2.0 * M_PI) {
    Rule1D r;
    r.nodes.resize(n);
    r.weights.assign(n, period / n);
    const double h = period / n;
    for (int j = 0; j < n; ++j) r.nodes[j] = j * h;
    r.diff = fourier_diff_matrix(n, h);
    return r;
}

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
inline Rule1D gauss_legendre_rule(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k - 1, k) = b;
        jac(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    if (es.info() != Eigen::Success) throw EigensolverFailure("gauss_legendre_rule");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        r.weights[i] = 2.0 * v0 * v0;
    }
    return r;
}

/// Colatitude rule for the measure sin^m(theta) dtheta on (0, pi):
///   m = 1  Gauss-Legendre in cos(theta)            (exact, positive)
///   m = 2  Gauss-Chebyshev second kind             (exact, positive)
/// Nodes exclude the poles.  `diff` is the chain-rule polynomial
/// differentiation matrix -sin(theta) D_xi, exact for profiles polynomial in
/// cos(theta); fields with odd azimuthal order are differentiated through the
/// per-mode associated-Legendre machinery at the grid level instead.
inline Rule1D polar_rule(int n, int sine_power) {
    if (sine_power < 1 || sine_power > 2)
        throw UnsupportedDomain("polar_rule: sine power must be 1 or 2");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    if (sine_power == 1) {
        Rule1D gl = gauss_legendre_rule(n);
        for (int j = 0; j < n; ++j) {
            // xi descending -> theta ascending
            r.nodes[j] = std::acos(gl.nodes[n - 1 - j]);
            r.weights[j] = gl.weights[n - 1 - j];
        }
    } else {
        for (int j = 0; j < n; ++j) {
            const double th = (j + 1.0) * M_PI / (n + 1.0);
            r.nodes[j] = th;
            r.weights[j] = M_PI / (n + 1.0) * std::sin(th) * std::sin(th);
        }
    }
    // barycentric differentiation in xi = cos(theta), then chain rule
    std::vector<double> xi(n), lam(n, 1.0);
    for (int j = 0; j < n; ++j) xi[j] = std::cos(r.nodes[j]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (j != i) lam[i] *= 2.0 * (xi[i] - xi[j]);
    for (int i = 0; i < n; ++i) lam[i] = 1.0 / lam[i];
    Eigen::MatrixXd dxi = barycentric_diff_matrix(xi, lam);
    r.diff = Eigen::MatrixXd(n, n);
    for (int i = 0; i < n; ++i) r.diff.row(i) = -std::sin(r.nodes[i]) * dxi.row(i);
    return r;
}

/// Gauss rule for the weight e^{-s^2/2} on the real line (Golub-Welsch on
/// the probabilists' Hermite recurrence; weights sum to sqrt(2*pi)).
/// `weights` here are the Gaussian-measure weights; the grid layer divides
/// the weight function back out when it builds area elements.  Nodes are
/// symmetrized exactly so odd integrands cancel to zero.
inline Rule1D hermite_rule(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        const double b = std::sqrt(double(i + 1));
        jac(i, i + 1) = b;
        jac(i + 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    if (es.info() != Eigen::Success) throw EigensolverFailure("hermite_rule");

    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double total = std::sqrt(2.0 * M_PI);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        r.weights[i] = total * v0 * v0;
    }
    // enforce exact +/- symmetry
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
        const double s = 0.5 * (r.nodes[j] - r.nodes[i]);
        r.nodes[i] = -s;
        r.nodes[j] = s;
        const double w = 0.5 * (r.weights[i] + r.weights[j]);
        r.weights[i] = w;
        r.weights[j] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    // Barycentric weights for Gauss nodes are lam_j = (-1)^j sqrt(w_j) up to
    // a common factor.  The naive node-difference products overflow and
    // cancel badly on these wide node sets; this form is exact and stable.
    // Rows at far-out nodes still amplify roundoff (inherent to polynomial
    // interpolation against a Gaussian weight) which is why every consumer
    // of this matrix works in Gaussian-weighted norms.
    std::vector<double> lam(n);
    for (int j = 0; j < n; ++j) lam[j] = ((j % 2) ? -1.0 : 1.0) * std::sqrt(r.weights[j]);
    r.diff = barycentric_diff_matrix(r.nodes, lam);
    return r;
}

}  // namespace shrinklab
