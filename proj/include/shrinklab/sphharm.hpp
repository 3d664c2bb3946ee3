#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "shrinklab/errors.hpp"

namespace shrinklab {
namespace sphharm {

/// Fully normalized associated Legendre functions evaluated at cos(theta),
/// with theta-derivatives.  Column t of the outputs holds degree l = m + t.
/// Normalization: int_0^pi Pbar_l^m(cos t)^2 sin t dt = 1, which makes the
/// per-m Gram under Gauss-Legendre weights the identity.
inline void normalized_legendre(int m, int count, double theta, Eigen::VectorXd& val,
                                Eigen::VectorXd& dval) {
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    val.resize(count);
    dval.resize(count);

    // Pbar_m^m = sqrt((2m+1)/2) prod_k sqrt((2k-1)/(2k)) s^m, built
    // multiplicatively so underflow degrades gracefully to zero
    double pmm = std::sqrt(0.5 * (2 * m + 1));
    for (int k = 1; k <= m; ++k) pmm *= s * std::sqrt((2.0 * k - 1.0) / (2.0 * k));
    double dmm = 0.0;
    if (m > 0) {
        double pm1 = std::sqrt(0.5 * (2 * m + 1));
        for (int k = 1; k <= m - 1; ++k) pm1 *= s * std::sqrt((2.0 * k - 1.0) / (2.0 * k));
        pm1 *= std::sqrt((2.0 * m - 1.0) / (2.0 * m));  // = pmm / s
        dmm = m * x * pm1;
    }

    double pl_prev = 0.0, pl = pmm;
    double dl_prev = 0.0, dl = dmm;
    for (int t = 0; t < count; ++t) {
        const int l = m + t;
        val(t) = pl;
        dval(t) = dl;
        const double a = std::sqrt(((l + 1.0) * (l + 1.0) - m * m) /
                                   ((2.0 * l + 1.0) * (2.0 * l + 3.0)));
        const double b =
            (l > m) ? std::sqrt((double(l) * l - m * m) / ((2.0 * l - 1.0) * (2.0 * l + 1.0)))
                    : 0.0;
        const double pn = (x * pl - b * pl_prev) / a;
        const double dn = (x * dl - s * pl - b * dl_prev) / a;
        pl_prev = pl;
        dl_prev = dl;
        pl = pn;
        dl = dn;
    }
}

/// Per-azimuthal-mode theta-differentiation matrices on a Gauss colatitude
/// node set: D_m = Psi'_m (Psi_m^T diag(w)), i.e. differentiate the weighted
/// orthogonal projection onto the normalized associated Legendre functions
/// whose discrete Gram is the identity to quadrature exactness.  On that span
/// (all of the grid's azimuthal-order-m content for low m) this is the exact
/// derivative; columns beyond the span (which degenerate near the poles as
/// sin^m theta underflows) are dropped, so the matrices stay uniformly
/// bounded instead of amplifying roundoff by 1/sin^m theta.
inline std::vector<Eigen::MatrixXd> mode_diff_matrices(const std::vector<double>& theta,
                                                       const std::vector<double>& weights,
                                                       int mmax, double gram_tol = 1e-10) {
    const int n = static_cast<int>(theta.size());
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), n);
    std::vector<Eigen::MatrixXd> out(mmax + 1);
    Eigen::VectorXd val, dval;
    for (int m = 0; m <= mmax; ++m) {
        Eigen::MatrixXd psi(n, n), dpsi(n, n);
        for (int j = 0; j < n; ++j) {
            normalized_legendre(m, n, theta[j], val, dval);
            psi.row(j) = val.transpose();
            dpsi.row(j) = dval.transpose();
        }
        const Eigen::MatrixXd gram = psi.transpose() * w.asDiagonal() * psi;
        int keep = 0;
        for (int k = 1; k <= n; ++k) {
            const Eigen::MatrixXd block = gram.topLeftCorner(k, k) -
                                          Eigen::MatrixXd::Identity(k, k);
            if (block.cwiseAbs().maxCoeff() > gram_tol) break;
            keep = k;
        }
        if (keep == 0) {
            out[m] = Eigen::MatrixXd::Zero(n, n);
            continue;
        }
        out[m] = dpsi.leftCols(keep) *
                 (psi.leftCols(keep).transpose() * w.asDiagonal());
    }
    return out;
}

}  // namespace sphharm
}  // namespace shrinklab
