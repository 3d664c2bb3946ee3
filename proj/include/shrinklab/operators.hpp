#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shrinklab/grid.hpp"
#include "shrinklab/model_checks.hpp"
#include "shrinklab/numerics.hpp"

namespace shrinklab {

enum class OperatorKind { DriftLaplacian, FullL, ScalarLnu };

inline int operator_components(OperatorKind kind, const WeightedGrid& g) {
    return kind == OperatorKind::FullL ? g.p() : 1;
}

namespace detail {

/// Dense derivative matrix along one axis (includes pole-crossing coupling
/// for polar axes), built column by column from axis_derivative.
inline Eigen::MatrixXd axis_matrix(const WeightedGrid& g, int axis) {
    const int nn = g.nodes();
    Eigen::MatrixXd d(nn, nn);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nn);
    for (int j = 0; j < nn; ++j) {
        e(j) = 1.0;
        d.col(j) = axis_derivative(g, axis, e);
        e(j) = 0.0;
    }
    return d;
}

/// Zeroth-order coefficient of the quadratic form (added with a minus sign):
/// FullL      sigma_{alpha beta} + delta_{alpha beta}
/// ScalarLnu  |Z|^2 + 1   (|Z|^2 = 0 where the principal normal is undefined)
/// Drift      0
inline Eigen::MatrixXd zeroth_block(OperatorKind kind, const GeometryData& geo) {
    switch (kind) {
        case OperatorKind::FullL:
            return geo.sigma + Eigen::MatrixXd::Identity(geo.p(), geo.p());
        case OperatorKind::ScalarLnu: {
            Eigen::MatrixXd m(1, 1);
            m(0, 0) = (geo.nu_defined ? geo.normZ2 : 0.0) + 1.0;
            return m;
        }
        case OperatorKind::DriftLaplacian:
            return Eigen::MatrixXd::Zero(1, 1);
    }
    return {};
}

}  // namespace detail

/// Discretization of the quadratic form paired with the operator:
///   drift     Q(u,v) = int <grad u, grad v> w dmu            = <u, -Lap_w v>_w
///   full-L    Q(V,W) = I(V,W) = int (<grad^perp V, grad^perp W>
///                          - sigma_ab V^a W^b - <V,W>) w dmu = <V, -L W>_w
///   L_nu      scalar analogue with |Z|^2 + 1
/// assembled with the Gaussian weights inside, so discrete self-adjointness
/// is exact by construction.  `sym` is the similarity-transformed matrix
/// diag(gw)^{-1/2} Q diag(gw)^{-1/2} restricted to the Dirichlet-kept nodes;
/// its ascending eigenvalues are the reported spectrum (I-eigenvalues mu with
/// L V = -mu V for the stability kinds).
struct DiscreteOperator {
    OperatorKind kind = OperatorKind::DriftLaplacian;
    int pcomp = 1;
    const WeightedGrid* grid = nullptr;
    Eigen::MatrixXd Q;      // full form matrix, unknowns = pcomp * nodes
    Eigen::VectorXd gw;     // per-unknown gaussian weight
    std::vector<int> keep;  // Dirichlet-kept unknowns
    Eigen::MatrixXd sym;
    double asymmetry = 0.0;

    int unknowns() const { return static_cast<int>(Q.rows()); }
};

/// Applies the raw (strong-form) operator: L v = -diag(gw)^{-1} Q v.
/// Pointwise values at far Gaussian tails amplify roundoff; weighted norms
/// of the result are accurate.
inline Eigen::MatrixXd apply_raw(const DiscreteOperator& op, const Eigen::MatrixXd& field) {
    const int nn = op.grid->nodes();
    if (field.rows() != nn || field.cols() != op.pcomp)
        throw DimensionMismatch("apply_raw: field shape");
    Eigen::VectorXd v(op.unknowns());
    for (int c = 0; c < op.pcomp; ++c) v.segment(c * nn, nn) = field.col(c);
    Eigen::VectorXd qv = op.Q * v;
    Eigen::MatrixXd out(nn, op.pcomp);
    for (int c = 0; c < op.pcomp; ++c)
        out.col(c) = -qv.segment(c * nn, nn).cwiseQuotient(op.gw.segment(c * nn, nn));
    return out;
}

/// Assembles the discrete operator.  For noncompact models, spectra use
/// zero-Dirichlet truncation: unknowns at nodes with any Euclidean coordinate
/// beyond the grid truncation are dropped from `sym` (kept in Q).
inline DiscreteOperator assemble(const WeightedGrid& g, OperatorKind kind,
                                 bool dirichlet_truncation = true) {
    const int nn = g.nodes();
    const int d = g.dim();
    const int p = operator_components(kind, g);
    const int m = p * nn;

    if (kind == OperatorKind::FullL && !g.gamma_is_zero) {
        // propagated frames must be continuous along every axis, including
        // around periodic wraps (normal holonomy shows up exactly there)
        const auto& factors = g.model->chart->domain().factors;
        for (int a = 0; a < d; ++a) {
            const bool periodic = factors[a].kind == Factor::Kind::Circle;
            std::vector<int> mi;
            for (int i = 0; i < nn; ++i) {
                g.unflatten(i, mi);
                if (mi[a] + 1 >= g.shape[a] && !periodic) continue;
                std::vector<int> mj = mi;
                mj[a] = (mi[a] + 1) % g.shape[a];
                const int j = g.flatten(mj);
                if ((g.geom[i].nor_frame - g.geom[j].nor_frame).norm() > 0.8)
                    throw FrameDiscontinuity("normal frame jumps between nodes " +
                                             std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }

    DiscreteOperator op;
    op.kind = kind;
    op.pcomp = p;
    op.grid = &g;

    // derivative matrices per axis
    std::vector<Eigen::MatrixXd> dax(d);
    for (int a = 0; a < d; ++a) dax[a] = detail::axis_matrix(g, a);

    // gradient part: sum_ab (CD_a)^T diag(gw * g^{ab}) CD_b, block-diagonal
    // over components when the normal connection vanishes
    Eigen::MatrixXd qs = Eigen::MatrixXd::Zero(nn, nn);  // scalar gradient form
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Eigen::VectorXd f(nn);
            double fmax = 0.0;
            for (int i = 0; i < nn; ++i) {
                f(i) = g.gauss_w(i) * g.geom[i].inv_metric(a, b);
                fmax = std::max(fmax, std::abs(f(i)));
            }
            if (fmax == 0.0) continue;
            qs.noalias() += dax[a].transpose() * f.asDiagonal() * dax[b];
        }

    op.Q = Eigen::MatrixXd::Zero(m, m);
    if (p == 1 || g.gamma_is_zero) {
        for (int c = 0; c < p; ++c) op.Q.block(c * nn, c * nn, nn, nn) = qs;
    } else {
        // covariant derivative blocks CD_a = D_a ⊗ I + Gamma_a
        std::vector<Eigen::MatrixXd> cda(d, Eigen::MatrixXd::Zero(m, m));
        for (int a = 0; a < d; ++a) {
            for (int c = 0; c < p; ++c) cda[a].block(c * nn, c * nn, nn, nn) = dax[a];
            for (int i = 0; i < nn; ++i)
                for (int be = 0; be < p; ++be)
                    for (int al = 0; al < p; ++al)
                        cda[a](be * nn + i, al * nn + i) += g.gamma[a][i](be, al);
        }
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                Eigen::VectorXd f(nn);
                double fmax = 0.0;
                for (int i = 0; i < nn; ++i) {
                    f(i) = g.gauss_w(i) * g.geom[i].inv_metric(a, b);
                    fmax = std::max(fmax, std::abs(f(i)));
                }
                if (fmax == 0.0) continue;
                Eigen::VectorXd fm(m);
                for (int c = 0; c < p; ++c) fm.segment(c * nn, nn) = f;
                op.Q.noalias() += cda[a].transpose() * fm.asDiagonal() * cda[b];
            }
    }

    // zeroth-order terms, subtracted so that Q represents the I form
    for (int i = 0; i < nn; ++i) {
        const Eigen::MatrixXd z = detail::zeroth_block(kind, g.geom[i]);
        for (int al = 0; al < p; ++al)
            for (int be = 0; be < p; ++be)
                op.Q(al * nn + i, be * nn + i) -= g.gauss_w(i) * z(al, be);
    }

    op.gw.resize(m);
    for (int c = 0; c < p; ++c) op.gw.segment(c * nn, nn) = g.gauss_w;

    // Dirichlet-kept unknowns
    const auto& factors = g.model->chart->domain().factors;
    std::vector<bool> node_kept(nn, true);
    if (dirichlet_truncation) {
        for (int i = 0; i < nn; ++i)
            for (int a = 0; a < d; ++a)
                if (factors[a].kind == Factor::Kind::Line &&
                    std::abs(g.u[i](a)) > g.truncation)
                    node_kept[i] = false;
    }
    for (int c = 0; c < p; ++c)
        for (int i = 0; i < nn; ++i)
            if (node_kept[i]) op.keep.push_back(c * nn + i);

    // similarity by sqrt of the weights, then symmetrize and record the
    // roundoff-level asymmetry (the weak assembly is self-adjoint by
    // construction, so this diagnostic measures only floating-point noise)
    const int mk = static_cast<int>(op.keep.size());
    Eigen::MatrixXd s(mk, mk);
    for (int r = 0; r < mk; ++r)
        for (int c = 0; c < mk; ++c)
            s(r, c) = op.Q(op.keep[r], op.keep[c]) /
                      std::sqrt(op.gw(op.keep[r]) * op.gw(op.keep[c]));
    const double smax = s.cwiseAbs().maxCoeff();
    op.asymmetry = (s - s.transpose()).cwiseAbs().maxCoeff() / std::max(smax, 1e-300);
    op.sym = 0.5 * (s + s.transpose());
    return op;
}

// ---------------------------------------------------------------------------
// Quadratic-form evaluation through the gradient route (independent of the
// assembled matrices; used for Rayleigh and consistency checks).
// ---------------------------------------------------------------------------

inline double form_value(const WeightedGrid& g, OperatorKind kind, const Eigen::MatrixXd& V,
                         const Eigen::MatrixXd& W) {
    const int nn = g.nodes();
    const int d = g.dim();
    const int p = operator_components(kind, g);
    if (V.rows() != nn || V.cols() != p || W.rows() != nn || W.cols() != p)
        throw DimensionMismatch("form_value: field shape");

    std::vector<Eigen::MatrixXd> dV(d), dW(d);
    for (int a = 0; a < d; ++a) {
        dV[a].resize(nn, p);
        dW[a].resize(nn, p);
        for (int c = 0; c < p; ++c) {
            dV[a].col(c) = axis_derivative(g, a, V.col(c));
            dW[a].col(c) = axis_derivative(g, a, W.col(c));
        }
        if (!g.gamma_is_zero && p > 1)
            for (int i = 0; i < nn; ++i) {
                dV[a].row(i) += (g.gamma[a][i] * V.row(i).transpose()).transpose();
                dW[a].row(i) += (g.gamma[a][i] * W.row(i).transpose()).transpose();
            }
    }

    std::vector<double> terms(nn);
    for (int i = 0; i < nn; ++i) {
        const GeometryData& geo = g.geom[i];
        double grad = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                const double gab = geo.inv_metric(a, b);
                if (gab == 0.0) continue;
                grad += gab * dV[a].row(i).dot(dW[b].row(i));
            }
        const Eigen::MatrixXd z = detail::zeroth_block(kind, geo);
        const double zero = (z.cols() == p)
                                ? V.row(i).dot((z * W.row(i).transpose()).transpose())
                                : 0.0;
        terms[i] = (grad - zero) * g.gauss_w(i);
    }
    return tree_sum(terms);
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct SpectralResult {
    OperatorKind kind = OperatorKind::FullL;
    std::vector<double> eigenvalues;            // ascending, I convention
    std::vector<Eigen::MatrixXd> eigenfields;   // nodes x p, weighted-orthonormal
    std::vector<double> rayleigh_residual;
    std::vector<std::string> classification;    // near(-2) | near(-1) | other | nonnegative
    std::vector<double> negative_set;
    std::vector<std::pair<int, int>> clusters;  // [begin, end) grouped within 1e-6
    double band = 0.05;
    double asymmetry = 0.0;
};

inline std::string classify_eigenvalue(double mu, double band) {
    if (mu >= -band) return "nonnegative";
    if (std::abs(mu + 2.0) <= band) return "near(-2)";
    if (std::abs(mu + 1.0) <= band) return "near(-1)";
    return "other";
}

inline SpectralResult spectrum(const DiscreteOperator& op, int count, double band = 0.05) {
    const WeightedGrid& g = *op.grid;
    const int nn = g.nodes();
    const int mk = static_cast<int>(op.keep.size());
    count = std::min(count, mk);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.sym);
    if (es.info() != Eigen::Success)
        throw EigensolverFailure("dense symmetric eigensolver failed; matrix size " +
                                 std::to_string(mk));

    SpectralResult out;
    out.kind = op.kind;
    out.band = band;
    out.asymmetry = op.asymmetry;
    for (int k = 0; k < count; ++k) {
        const double mu = es.eigenvalues()(k);
        out.eigenvalues.push_back(mu);
        Eigen::MatrixXd field = Eigen::MatrixXd::Zero(nn, op.pcomp);
        for (int r = 0; r < mk; ++r) {
            const int unk = op.keep[r];
            field(unk % nn, unk / nn) += es.eigenvectors()(r, k) / std::sqrt(op.gw(unk));
        }
        out.eigenfields.push_back(field);
        const double ray =
            form_value(g, op.kind, field, field) / weighted_inner_fields(g, field, field);
        out.rayleigh_residual.push_back(std::abs(ray - mu));
        out.classification.push_back(classify_eigenvalue(mu, band));
        if (mu < -band) out.negative_set.push_back(mu);
    }
    // group degenerate clusters
    int begin = 0;
    for (int k = 1; k <= count; ++k) {
        if (k == count || out.eigenvalues[k] - out.eigenvalues[k - 1] > 1e-6) {
            out.clusters.emplace_back(begin, k);
            begin = k;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eigenfield identities
// ---------------------------------------------------------------------------

/// Residuals of the analytic eigenfield identities in the weighted norm:
///   L H = 2 H,  L V^perp = V^perp  (constant-vector projections), and on
/// parallel-principal-normal models  L_nu <H,nu> = 2 <H,nu>,
/// L_nu <y,nu> = <y,nu>.
struct EigenfieldReport {
    double residual_H = 0.0;        // ||L H - 2H||_w / ||H||_w
    double residual_Vperp = 0.0;    // worst over an ambient basis
    double residual_Lnu_H = 0.0;
    double residual_Lnu_y = 0.0;
    bool H_skipped = false;         // |H| == 0 (plane): H identities vacuous
    bool lnu_checked = false;
    double max_residual() const {
        return std::max({residual_H, residual_Vperp, residual_Lnu_H, residual_Lnu_y});
    }
};

inline EigenfieldReport verify_eigenfields(const WeightedGrid& g) {
    const int nn = g.nodes();
    const int p = g.p();
    const int amb = g.ambient();
    EigenfieldReport rep;

    auto opL = assemble(g, OperatorKind::FullL, /*dirichlet_truncation=*/false);

    // H identity
    Eigen::MatrixXd H(nn, p);
    for (int i = 0; i < nn; ++i) H.row(i) = g.geom[i].H_comp.transpose();
    const double hnorm = weighted_norm_fields(g, H);
    if (hnorm < 1e-12) {
        rep.H_skipped = true;
    } else {
        const Eigen::MatrixXd LH = apply_raw(opL, H);
        rep.residual_H = weighted_norm_fields(g, LH - 2.0 * H) / hnorm;
    }

    // constant-vector projections
    for (int c = 0; c < amb; ++c) {
        Eigen::MatrixXd V(nn, p);
        for (int i = 0; i < nn; ++i) V.row(i) = g.geom[i].nor_frame.row(c);
        const double vnorm = weighted_norm_fields(g, V);
        if (vnorm < 1e-12) continue;  // basis vector tangent everywhere
        const Eigen::MatrixXd LV = apply_raw(opL, V);
        rep.residual_Vperp =
            std::max(rep.residual_Vperp, weighted_norm_fields(g, LV - V) / vnorm);
    }

    // scalar identities through L_nu on parallel-principal-normal models
    if (g.model->parallel_principal_normal && !rep.H_skipped) {
        rep.lnu_checked = true;
        auto opNu = assemble(g, OperatorKind::ScalarLnu, false);
        Eigen::MatrixXd hnu(nn, 1);
        for (int i = 0; i < nn; ++i)
            hnu(i, 0) = g.geom[i].H_comp.dot(g.geom[i].nu_comp);  // = |H|
        const Eigen::MatrixXd Lh = apply_raw(opNu, hnu);
        rep.residual_Lnu_H =
            weighted_norm_fields(g, Lh - 2.0 * hnu) / weighted_norm_fields(g, hnu);
        for (int c = 0; c < amb; ++c) {
            Eigen::MatrixXd ynu(nn, 1);
            for (int i = 0; i < nn; ++i)
                ynu(i, 0) = (g.geom[i].nor_frame * g.geom[i].nu_comp)(c);
            const double ynorm = weighted_norm_fields(g, ynu);
            if (ynorm < 1e-12) continue;
            const Eigen::MatrixXd Ly = apply_raw(opNu, ynu);
            rep.residual_Lnu_y =
                std::max(rep.residual_Lnu_y, weighted_norm_fields(g, Ly - ynu) / ynorm);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Bottom of the L_nu spectrum
// ---------------------------------------------------------------------------

/// Upper bound for the bottom mu_1 of the I-form Rayleigh quotient of L_nu:
/// the smaller of (a) Rayleigh quotients of compactly supported trial
/// functions and (b) the lowest eigenvalue of the Dirichlet-truncated
/// discrete operator.  Both routes are variational, so the result is a
/// certified upper bound up to discretization error.
struct SpectralBottomReport {
    double upper_bound = 0.0;
    double best_trial = 0.0;
    double dirichlet_bottom = 0.0;
    std::string best_trial_name;
};

inline SpectralBottomReport spectral_bottom(const WeightedGrid& g) {
    const int nn = g.nodes();
    const bool compact = g.model->chart->domain().compact();

    // trial functions of the parameter point, cut off in the Euclidean
    // factors on noncompact models so they are compactly supported
    const auto& factors = g.model->chart->domain().factors;
    int first_line = -1;
    for (int a = 0; a < g.dim(); ++a)
        if (factors[a].kind == Factor::Kind::Line && first_line < 0) first_line = a;
    const double r1 = std::max(1.0, g.truncation - 2.0);
    const double r2 = g.truncation - 1.0;
    auto rho = [&](const Eigen::VectorXd& u) {
        double s2 = 0.0;
        for (int a = 0; a < g.dim(); ++a)
            if (factors[a].kind == Factor::Kind::Line) s2 += u(a) * u(a);
        return std::sqrt(s2);
    };

    std::vector<std::pair<std::string, std::function<double(const Eigen::VectorXd&)>>> trials;
    trials.emplace_back("one", [](const Eigen::VectorXd&) { return 1.0; });
    if (first_line >= 0) {
        trials.emplace_back("coordinate",
                            [first_line](const Eigen::VectorXd& u) { return u(first_line); });
    }

    SpectralBottomReport rep;
    rep.best_trial = std::numeric_limits<double>::infinity();

    for (const auto& [name, fn] : trials) {
        Eigen::MatrixXd f(nn, 1);
        for (int i = 0; i < nn; ++i) {
            double v = fn(g.u[i]);
            if (!compact) v *= cutoff_c2(rho(g.u[i]), r1, r2);
            f(i, 0) = v;
        }
        const double quotient =
            form_value(g, OperatorKind::ScalarLnu, f, f) / weighted_inner_fields(g, f, f);
        if (quotient < rep.best_trial) {
            rep.best_trial = quotient;
            rep.best_trial_name = name;
        }
    }

    auto op = assemble(g, OperatorKind::ScalarLnu, /*dirichlet_truncation=*/true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.sym);
    if (es.info() != Eigen::Success) throw EigensolverFailure("spectral_bottom");
    rep.dirichlet_bottom = es.eigenvalues()(0);
    rep.upper_bound = std::min(rep.best_trial, rep.dirichlet_bottom);
    return rep;
}

}  // namespace shrinklab
