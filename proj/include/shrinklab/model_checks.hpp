#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "shrinklab/grid.hpp"

namespace shrinklab {

/// Pointwise |H + x^perp| and its sup over the grid.  Zero (to tolerance)
/// exactly on valid self-shrinkers normalized to x0 = 0, t0 = 1/2.
struct ShrinkerResidual {
    Eigen::VectorXd pointwise;
    double sup = 0.0;
    int argmax = 0;
};

inline ShrinkerResidual shrinker_residual(const WeightedGrid& g) {
    ShrinkerResidual r;
    r.pointwise.resize(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) {
        const GeometryData& geo = g.geom[i];
        const double v = (geo.H_vec + geo.normal_part(geo.x)).norm();
        r.pointwise(i) = v;
        if (v > r.sup) {
            r.sup = v;
            r.argmax = i;
        }
    }
    return r;
}

/// Max over the grid of |nabla^perp nu| for the principal normal nu = H/|H|.
struct ParallelNormalReport {
    bool parallel = false;
    double max_connection_norm = 0.0;
};

inline ParallelNormalReport check_parallel_principal_normal(const WeightedGrid& g,
                                                            double tol = 1e-8) {
    const int nn = g.nodes();
    const int p = g.p();
    std::vector<int> bad;
    for (int i = 0; i < nn; ++i)
        if (!g.geom[i].nu_defined) bad.push_back(i);
    if (!bad.empty()) {
        std::string msg = "principal normal undefined (|H| ~ 0) at nodes";
        for (std::size_t j = 0; j < std::min<std::size_t>(bad.size(), 8); ++j)
            msg += " " + std::to_string(bad[j]);
        if (bad.size() > 8) msg += " ...";
        throw VanishingMeanCurvature(msg);
    }

    // nu components per node, differentiated axis by axis with the normal
    // connection correction
    Eigen::MatrixXd nu(nn, p);
    for (int i = 0; i < nn; ++i) nu.row(i) = g.geom[i].nu_comp.transpose();

    ParallelNormalReport rep;
    for (int a = 0; a < g.dim(); ++a) {
        Eigen::MatrixXd dnu(nn, p);
        for (int al = 0; al < p; ++al) dnu.col(al) = axis_derivative(g, a, nu.col(al));
        for (int i = 0; i < nn; ++i) {
            Eigen::VectorXd cov = dnu.row(i).transpose();
            if (!g.gamma_is_zero) cov += g.gamma[a][i] * nu.row(i).transpose();
            // coordinate axis a has length sqrt(g_aa); normalize so the bound
            // is frame-independent
            const double len = std::sqrt(g.geom[i].metric(a, a));
            rep.max_connection_norm = std::max(rep.max_connection_norm, cov.norm() / len);
        }
    }
    rep.parallel = rep.max_connection_norm <= tol;
    return rep;
}

/// Checks the model lies on |x| = sqrt(n) with H = -x (minimal submanifold
/// of the sphere): the component of H along x equals -|x| and the part of H
/// tangent to the sphere vanishes.
struct MinimalInSphereReport {
    double max_radius_defect = 0.0;     // | |x| - sqrt(n) |
    double max_radial_defect = 0.0;     // | <H, x/|x|> + |x| |
    double max_tangential_norm = 0.0;   // | H - <H,x^>x^ |
    bool ok(double tol = 1e-8) const {
        return max_radius_defect <= tol && max_radial_defect <= tol &&
               max_tangential_norm <= tol;
    }
};

inline MinimalInSphereReport check_minimal_in_sphere(const WeightedGrid& g) {
    MinimalInSphereReport rep;
    const double rt = std::sqrt(double(g.n()));
    for (int i = 0; i < g.nodes(); ++i) {
        const GeometryData& geo = g.geom[i];
        const double r = geo.x.norm();
        const Eigen::VectorXd xhat = geo.x / r;
        const double radial = geo.H_vec.dot(xhat);
        rep.max_radius_defect = std::max(rep.max_radius_defect, std::abs(r - rt));
        rep.max_radial_defect = std::max(rep.max_radial_defect, std::abs(radial + r));
        rep.max_tangential_norm =
            std::max(rep.max_tangential_norm, (geo.H_vec - radial * xhat).norm());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Weighted integral identities satisfied by every shrinker with polynomial
// volume growth, plus their corollary.  All residuals are normalized by
// int e^{-|x|^2/2} dmu.
// ---------------------------------------------------------------------------

struct WeightedIdentityReport {
    // (3.12)  int (|x|^2 - n) w = 0
    // (3.13)  int x w = 0 = int x |x|^2 w
    // (3.14)  int (|x|^4 - n(n+2) + 2|H|^2) w = 0
    // (3.15)  int <x,omega>^2 w = int |omega^T|^2 w     (worst over a basis)
    // (cor)   int [(|x|^2-n)^2 - 2n] w = -2 int |H|^2 w
    double r_quadratic = 0.0;
    double r_first_moment = 0.0;
    double r_quartic = 0.0;
    double r_direction = 0.0;
    double r_corollary = 0.0;
    double normalization = 0.0;  // int w

    double max_residual() const {
        return std::max({r_quadratic, r_first_moment, r_quartic, r_direction, r_corollary});
    }
    bool pass(double tol = 1e-8) const { return max_residual() <= tol; }
};

inline WeightedIdentityReport verify_weighted_identities(const WeightedGrid& g) {
    const int nn = g.nodes();
    const int amb = g.ambient();
    const double n = g.n();

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(nn);
    const double total = integrate(g, ones);

    Eigen::VectorXd f(nn);
    for (int i = 0; i < nn; ++i) f(i) = g.geom[i].x.squaredNorm() - n;
    const double r1 = std::abs(integrate(g, f));

    double r2 = 0.0;
    for (int c = 0; c < amb; ++c) {
        Eigen::VectorXd xc(nn), xc3(nn);
        for (int i = 0; i < nn; ++i) {
            xc(i) = g.geom[i].x(c);
            xc3(i) = xc(i) * g.geom[i].x.squaredNorm();
        }
        r2 = std::max({r2, std::abs(integrate(g, xc)), std::abs(integrate(g, xc3))});
    }

    for (int i = 0; i < nn; ++i) {
        const double x2 = g.geom[i].x.squaredNorm();
        f(i) = x2 * x2 - n * (n + 2.0) + 2.0 * g.geom[i].H_vec.squaredNorm();
    }
    const double r3 = std::abs(integrate(g, f));

    double r4 = 0.0;
    for (int c = 0; c < amb; ++c) {
        Eigen::VectorXd omega = Eigen::VectorXd::Zero(amb);
        omega(c) = 1.0;
        for (int i = 0; i < nn; ++i) {
            const GeometryData& geo = g.geom[i];
            const double dot = geo.x.dot(omega);
            f(i) = dot * dot - geo.tangent_part(omega).squaredNorm();
        }
        r4 = std::max(r4, std::abs(integrate(g, f)));
    }

    for (int i = 0; i < nn; ++i) {
        const double q = g.geom[i].x.squaredNorm() - n;
        f(i) = q * q - 2.0 * n + 2.0 * g.geom[i].H_vec.squaredNorm();
    }
    const double r5 = std::abs(integrate(g, f));

    WeightedIdentityReport rep;
    rep.normalization = total;
    rep.r_quadratic = r1 / total;
    rep.r_first_moment = r2 / total;
    rep.r_quartic = r3 / total;
    rep.r_direction = r4 / total;
    rep.r_corollary = r5 / total;
    return rep;
}

}  // namespace shrinklab
