#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "shrinklab/chart.hpp"
#include "shrinklab/errors.hpp"

namespace shrinklab {

/// Pointwise extrinsic geometry of an immersion at one parameter point.
/// Second fundamental form components h[alpha](a,b) and everything derived
/// from them are expressed in the orthonormal tangent frame e_a and the
/// orthonormal normal frame e_alpha.
struct GeometryData {
    Eigen::VectorXd x;          // position in R^{n+p}
    Eigen::MatrixXd tan_coord;  // (n+p) x n, columns dx/du_i
    Eigen::MatrixXd tan_frame;  // (n+p) x n, orthonormal e_a
    Eigen::MatrixXd nor_frame;  // (n+p) x p, orthonormal e_alpha
    Eigen::MatrixXd metric;     // g_ij
    Eigen::MatrixXd inv_metric; // g^ij
    double sqrt_det_g = 0.0;
    std::vector<Eigen::MatrixXd> h;  // p matrices, h[alpha](a,b)
    Eigen::VectorXd H_comp;          // H^alpha
    Eigen::VectorXd H_vec;           // mean curvature vector in R^{n+p}
    Eigen::MatrixXd sigma;           // sigma_{alpha beta}
    double normA2 = 0.0;             // |A|^2
    bool nu_defined = false;
    Eigen::VectorXd nu_comp;         // nu^alpha where defined
    double normZ2 = 0.0;             // |Z|^2 = sum (h^nu_ab)^2 where defined

    int n() const { return static_cast<int>(tan_coord.cols()); }
    int p() const { return static_cast<int>(nor_frame.cols()); }

    Eigen::VectorXd normal_part(const Eigen::VectorXd& v) const {
        return nor_frame * (nor_frame.transpose() * v);
    }
    Eigen::VectorXd tangent_part(const Eigen::VectorXd& v) const {
        return tan_frame * (tan_frame.transpose() * v);
    }
};

namespace detail {

inline Eigen::MatrixXd gram_schmidt_columns(const Eigen::MatrixXd& cols, double tol,
                                            const char* what) {
    Eigen::MatrixXd q = cols;
    for (int c = 0; c < q.cols(); ++c) {
        for (int k = 0; k < c; ++k) q.col(c) -= q.col(k).dot(q.col(c)) * q.col(k);
        const double norm = q.col(c).norm();
        if (norm < tol) throw FrameDiscontinuity(what);
        q.col(c) /= norm;
    }
    return q;
}

}  // namespace detail

/// Evaluates all pointwise geometry from a chart.  `frame_hint`, when given,
/// seeds the normal-frame construction (projection + re-orthonormalization)
/// so frames stay continuous along a grid sweep; otherwise the chart's
/// analytic frame or a projected ambient basis is used.
inline GeometryData evaluate_geometry(const ImmersionChart& chart, const Eigen::VectorXd& u,
                                      const Eigen::MatrixXd* frame_hint = nullptr) {
    const int n = chart.intrinsic_dim();
    const int amb = chart.ambient_dim();
    const int p = amb - n;

    GeometryData g;
    g.x = chart.position(u);
    g.tan_coord = chart.jacobian(u);
    g.metric = g.tan_coord.transpose() * g.tan_coord;

    // degeneracy: relative Gram determinant against the Hadamard bound
    const double det = g.metric.determinant();
    double hadamard = 1.0;
    for (int i = 0; i < n; ++i) hadamard *= g.metric(i, i);
    if (!(det > 1e-10 * hadamard))
        throw DegenerateMetric("Gram determinant below threshold at a grid node");
    g.sqrt_det_g = std::sqrt(det);

    Eigen::LLT<Eigen::MatrixXd> llt(g.metric);
    if (llt.info() != Eigen::Success)
        throw DegenerateMetric("metric not positive definite at a grid node");
    g.inv_metric = g.metric.inverse();

    // orthonormal tangent frame: e = T * L^{-T}  (Gram-Schmidt of the
    // coordinate basis)
    const Eigen::MatrixXd linvT =
        llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n)).transpose();
    g.tan_frame = g.tan_coord * linvT;

    // normal frame
    std::optional<Eigen::MatrixXd> analytic = chart.normal_frame(u);
    if (analytic) {
        g.nor_frame = *analytic;
    } else {
        Eigen::MatrixXd seed(amb, p);
        if (frame_hint) {
            seed = *frame_hint;
        } else {
            // project the ambient basis onto the normal space, keep the p
            // most independent directions
            Eigen::MatrixXd proj =
                Eigen::MatrixXd::Identity(amb, amb) - g.tan_frame * g.tan_frame.transpose();
            Eigen::VectorXd score(amb);
            for (int a = 0; a < amb; ++a) score(a) = proj.col(a).norm();
            std::vector<int> idx(amb);
            for (int a = 0; a < amb; ++a) idx[a] = a;
            std::stable_sort(idx.begin(), idx.end(),
                             [&](int a, int b) { return score(a) > score(b); });
            for (int c = 0; c < p; ++c) seed.col(c) = proj.col(idx[c]);
        }
        // remove tangential parts, then orthonormalize
        seed -= g.tan_frame * (g.tan_frame.transpose() * seed);
        g.nor_frame = detail::gram_schmidt_columns(
            seed, 1e-8, "normal frame propagation failed (degenerate projection)");
        if (frame_hint) {
            for (int c = 0; c < p; ++c)
                if (g.nor_frame.col(c).dot(frame_hint->col(c)) < 0.0)
                    throw FrameDiscontinuity("normal frame flipped between adjacent nodes");
        }
    }

    // second fundamental form: coordinate components projected on the normal
    // frame, then pushed to the orthonormal tangent frame with B = L^{-1}
    const auto hess = chart.hessian(u);
    std::vector<Eigen::MatrixXd> h_coord(p, Eigen::MatrixXd(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Eigen::VectorXd proj = g.nor_frame.transpose() * hess[i * n + j];
            for (int a = 0; a < p; ++a) h_coord[a](i, j) = proj(a);
        }
    g.h.resize(p);
    for (int a = 0; a < p; ++a) g.h[a] = linvT.transpose() * h_coord[a] * linvT;

    g.H_comp = Eigen::VectorXd(p);
    for (int a = 0; a < p; ++a) g.H_comp(a) = g.h[a].trace();
    g.H_vec = g.nor_frame * g.H_comp;

    g.sigma = Eigen::MatrixXd(p, p);
    for (int a = 0; a < p; ++a)
        for (int b = a; b < p; ++b) {
            const double s = g.h[a].cwiseProduct(g.h[b]).sum();
            g.sigma(a, b) = s;
            g.sigma(b, a) = s;
        }
    g.normA2 = g.sigma.trace();

    const double Hnorm = g.H_comp.norm();
    g.nu_defined = Hnorm > 1e-12;
    if (g.nu_defined) {
        g.nu_comp = g.H_comp / Hnorm;
        Eigen::MatrixXd hnu = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < p; ++a) hnu += g.nu_comp(a) * g.h[a];
        g.normZ2 = hnu.cwiseProduct(hnu).sum();
    }
    return g;
}

/// Applies a constant orthogonal change of normal frame, e_alpha -> e R.
/// Frame-covariant quantities transform accordingly; invariants must not
/// change (tested property).
inline GeometryData rotate_normal_frame(const GeometryData& g, const Eigen::MatrixXd& rot) {
    GeometryData r = g;
    const int p = g.p();
    r.nor_frame = g.nor_frame * rot;
    for (int a = 0; a < p; ++a) {
        r.h[a].setZero();
        for (int b = 0; b < p; ++b) r.h[a] += rot(b, a) * g.h[b];
    }
    r.H_comp = rot.transpose() * g.H_comp;
    r.sigma = rot.transpose() * g.sigma * rot;
    if (g.nu_defined) r.nu_comp = rot.transpose() * g.nu_comp;
    return r;
}

}  // namespace shrinklab
