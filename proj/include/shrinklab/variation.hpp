#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/ffunctional.hpp"
#include "shrinklab/grid.hpp"
#include "shrinklab/model_checks.hpp"
#include "shrinklab/numerics.hpp"

namespace shrinklab {

/// Radial C^2 cutoff in the Euclidean factor coordinates: 1 on |x'| <= r1,
/// 0 on |x'| >= r2.
struct CutoffSpec {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// A discrete section of the normal bundle plus the (y, h) center-scale
/// directions.  Carries the per-axis derivatives of the ambient field so
/// downstream integrands never differentiate node data spectrally (builders
/// supply analytic derivatives).
struct NormalVariation {
    Eigen::MatrixXd comp;                // nodes x p, frame components V^alpha
    Eigen::MatrixXd amb;                 // nodes x (n+p)
    std::vector<Eigen::MatrixXd> damb;   // per axis, nodes x (n+p)
    Eigen::VectorXd y;                   // constant ambient vector
    double h = 0.0;
    std::optional<CutoffSpec> support;
};

namespace detail {

/// Per-axis derivatives of the normal frame columns; analytic for catalog
/// charts, spectral differentiation of the propagated frame otherwise.
inline std::vector<std::vector<Eigen::MatrixXd>> normal_frame_derivatives(
    const WeightedGrid& g) {
    const int d = g.dim();
    const int nn = g.nodes();
    const int amb = g.ambient();
    const int p = g.p();
    std::vector<std::vector<Eigen::MatrixXd>> out(
        d, std::vector<Eigen::MatrixXd>(nn, Eigen::MatrixXd::Zero(amb, p)));

    const ImmersionChart& chart = *g.model->chart;
    const bool analytic = static_cast<bool>(chart.normal_frame(g.u[0]));
    if (analytic) {
        // finite differences on the analytic frame map would lose accuracy;
        // instead use the structure shared by all catalog charts: frame
        // columns are either constant or radial fields x_S/|r| over a
        // spherical block, whose derivative is the corresponding block of
        // the jacobian.  Detect per column by probing the frame at two
        // nearby parameter points.
        // Simpler and fully general: differentiate the frame by the chart's
        // own analytic machinery via a tight central difference in u with a
        // step that keeps roundoff at ~1e-11.
        const double step = 1e-6;
        for (int a = 0; a < d; ++a)
            for (int i = 0; i < nn; ++i) {
                Eigen::VectorXd up = g.u[i], um = g.u[i];
                up(a) += step;
                um(a) -= step;
                out[a][i] = (*chart.normal_frame(up) - *chart.normal_frame(um)) / (2.0 * step);
            }
        return out;
    }

    for (int al = 0; al < p; ++al)
        for (int c = 0; c < amb; ++c) {
            Eigen::VectorXd field(nn);
            for (int i = 0; i < nn; ++i) field(i) = g.geom[i].nor_frame(c, al);
            for (int a = 0; a < d; ++a) {
                Eigen::VectorXd dfield = axis_derivative(g, a, field);
                for (int i = 0; i < nn; ++i) out[a][i](c, al) = dfield(i);
            }
        }
    return out;
}

/// Squared distance to the Euclidean-factor origin and its parameter
/// gradient (zero on fully compact models).
inline void euclidean_radius2(const WeightedGrid& g, int node, double& rho2,
                              Eigen::VectorXd& grad) {
    const auto& factors = g.model->chart->domain().factors;
    rho2 = 0.0;
    grad = Eigen::VectorXd::Zero(g.dim());
    for (int a = 0; a < g.dim(); ++a)
        if (factors[a].kind == Factor::Kind::Line) {
            const double s = g.u[node](a);
            rho2 += s * s;
            grad(a) = 2.0 * s;
        }
}

}  // namespace detail

/// Assembles a NormalVariation from frame components and their analytic
/// parameter derivatives.  An optional cutoff multiplies the section by the
/// C^2 bump in the Euclidean-factor radius.
inline NormalVariation make_variation(const WeightedGrid& g, Eigen::MatrixXd comp,
                                      std::vector<Eigen::MatrixXd> dcomp,
                                      const Eigen::VectorXd& y, double h,
                                      std::optional<CutoffSpec> support = std::nullopt) {
    const int nn = g.nodes();
    const int d = g.dim();
    const int p = g.p();
    const int amb = g.ambient();
    if (comp.rows() != nn || comp.cols() != p)
        throw DimensionMismatch("make_variation: component shape");
    if (y.size() != amb) throw DimensionMismatch("make_variation: y dimension");

    if (support) {
        if (support->r2 <= support->r1 || support->r1 < 0.0)
            throw ConfigError("cutoff requires 0 <= r1 < r2");
        if (support->r2 > g.truncation)
            throw TruncationTooSmall("cutoff extends past the grid truncation");
        Eigen::VectorXd rg;
        for (int i = 0; i < nn; ++i) {
            double rho2;
            detail::euclidean_radius2(g, i, rho2, rg);
            const double rho = std::sqrt(rho2);
            const double phi = cutoff_c2(rho, support->r1, support->r2);
            const double dphi = (rho > 0.0) ? cutoff_c2_deriv(rho, support->r1, support->r2) : 0.0;
            for (int a = 0; a < d; ++a) {
                const double drho = (rho > 0.0) ? 0.5 * rg(a) / rho : 0.0;
                dcomp[a].row(i) = phi * dcomp[a].row(i) + dphi * drho * comp.row(i);
            }
            comp.row(i) *= phi;
        }
    }

    NormalVariation v;
    v.comp = std::move(comp);
    v.y = y;
    v.h = h;
    v.support = support;
    v.amb.resize(nn, amb);
    for (int i = 0; i < nn; ++i)
        v.amb.row(i) = (g.geom[i].nor_frame * v.comp.row(i).transpose()).transpose();

    const auto dframe = detail::normal_frame_derivatives(g);
    v.damb.assign(d, Eigen::MatrixXd::Zero(nn, amb));
    for (int a = 0; a < d; ++a)
        for (int i = 0; i < nn; ++i)
            v.damb[a].row(i) = (g.geom[i].nor_frame * dcomp[a].row(i).transpose() +
                                dframe[a][i] * v.comp.row(i).transpose())
                                   .transpose();
    return v;
}

/// V = projection of the constant ambient vector z onto the normal bundle.
inline NormalVariation constant_vector_projection(const WeightedGrid& g,
                                                  const Eigen::VectorXd& z,
                                                  const Eigen::VectorXd& y, double h) {
    const int nn = g.nodes();
    const int p = g.p();
    Eigen::MatrixXd comp(nn, p);
    for (int i = 0; i < nn; ++i) comp.row(i) = (g.geom[i].nor_frame.transpose() * z).transpose();
    const auto dframe = detail::normal_frame_derivatives(g);
    std::vector<Eigen::MatrixXd> dcomp(g.dim(), Eigen::MatrixXd(nn, p));
    for (int a = 0; a < g.dim(); ++a)
        for (int i = 0; i < nn; ++i)
            dcomp[a].row(i) = (dframe[a][i].transpose() * z).transpose();
    return make_variation(g, comp, dcomp, y, h);
}

/// V = f(x) * (unit normal direction with constant frame components `dir`),
/// with grad_f the ambient gradient of f.
inline NormalVariation scalar_field_variation(
    const WeightedGrid& g, const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_f,
    const Eigen::VectorXd& dir, const Eigen::VectorXd& y, double h,
    std::optional<CutoffSpec> support = std::nullopt) {
    const int nn = g.nodes();
    const int p = g.p();
    Eigen::MatrixXd comp(nn, p);
    std::vector<Eigen::MatrixXd> dcomp(g.dim(), Eigen::MatrixXd(nn, p));
    for (int i = 0; i < nn; ++i) {
        const double fi = f(g.geom[i].x);
        comp.row(i) = fi * dir.transpose();
        const Eigen::VectorXd grad = grad_f(g.geom[i].x);
        for (int a = 0; a < g.dim(); ++a) {
            const double df = grad.dot(g.geom[i].tan_coord.col(a));
            dcomp[a].row(i) = df * dir.transpose();
        }
    }
    return make_variation(g, comp, dcomp, y, h, support);
}

/// Unit direction along the principal normal where defined (constant frame
/// components on parallel-principal-normal catalog models), else the last
/// frame direction.
inline Eigen::VectorXd principal_direction(const WeightedGrid& g) {
    for (int i = 0; i < g.nodes(); ++i)
        if (g.geom[i].nu_defined) return g.geom[i].nu_comp;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(g.p());
    dir(g.p() - 1) = 1.0;
    return dir;
}

/// Seeded random variation: per normal component a random quadratic
/// polynomial in the ambient coordinates (smooth, band-limited, Gaussian
/// integrable), plus random (y, h).
inline NormalVariation random_variation(const WeightedGrid& g, std::uint64_t seed,
                                        bool with_yh = true) {
    const int amb = g.ambient();
    const int p = g.p();
    Rng rng(seed);
    std::vector<double> c0(p);
    std::vector<Eigen::VectorXd> c1(p);
    std::vector<Eigen::MatrixXd> c2(p);
    for (int b = 0; b < p; ++b) {
        c0[b] = rng.normal();
        c1[b] = Eigen::VectorXd(amb);
        for (int c = 0; c < amb; ++c) c1[b](c) = rng.normal();
        c2[b] = Eigen::MatrixXd(amb, amb);
        for (int r = 0; r < amb; ++r)
            for (int c = 0; c < amb; ++c) c2[b](r, c) = 0.3 * rng.normal();
        c2[b] = 0.5 * (c2[b] + c2[b].transpose().eval());
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(amb);
    double h = 0.0;
    if (with_yh) {
        for (int c = 0; c < amb; ++c) y(c) = rng.normal();
        h = 0.3 * rng.normal();
    }

    const int nn = g.nodes();
    Eigen::MatrixXd comp(nn, p);
    std::vector<Eigen::MatrixXd> dcomp(g.dim(), Eigen::MatrixXd(nn, p));
    for (int i = 0; i < nn; ++i) {
        const Eigen::VectorXd& x = g.geom[i].x;
        for (int b = 0; b < p; ++b) {
            comp(i, b) = c0[b] + c1[b].dot(x) + x.dot(c2[b] * x);
            const Eigen::VectorXd grad = c1[b] + 2.0 * (c2[b] * x);
            for (int a = 0; a < g.dim(); ++a)
                dcomp[a](i, b) = grad.dot(g.geom[i].tan_coord.col(a));
        }
    }
    return make_variation(g, comp, dcomp, y, h);
}

// ---------------------------------------------------------------------------
// Analytic variations of F
// ---------------------------------------------------------------------------

/// First variation of F_{x0,t0} in the direction (V, y, h).
inline double first_variation(const WeightedGrid& g, const NormalVariation& var,
                              const CenterScale& cs) {
    const int nn = g.nodes();
    const double pref = std::pow(4.0 * M_PI * cs.t0, -0.5 * g.n());
    std::vector<double> terms(nn);
    for (int i = 0; i < nn; ++i) {
        const GeometryData& geo = g.geom[i];
        const Eigen::VectorXd diff = geo.x - cs.x0;
        const double q = diff.squaredNorm();
        const Eigen::VectorXd drive = geo.H_vec + geo.normal_part(diff) / (2.0 * cs.t0);
        const double integrand =
            -drive.dot(var.amb.row(i)) +
            var.h * (q / (4.0 * cs.t0 * cs.t0) - 0.5 * g.n() / cs.t0) +
            diff.dot(var.y) / (2.0 * cs.t0);
        terms[i] = integrand * std::exp(-q / (4.0 * cs.t0)) * g.measure_w(i);
    }
    const double v = pref * tree_sum(terms);
    require_finite(v, "first_variation");
    return v;
}

/// Normal-connection derivative components (nabla^perp_a V)^beta =
/// <d_a V_amb, e_beta>; the tangential part of d V is projected away.
inline Eigen::MatrixXd covariant_derivative(const WeightedGrid& g, const NormalVariation& var,
                                            int axis) {
    const int nn = g.nodes();
    Eigen::MatrixXd out(nn, g.p());
    for (int i = 0; i < nn; ++i)
        out.row(i) =
            (g.geom[i].nor_frame.transpose() * var.damb[axis].row(i).transpose()).transpose();
    return out;
}

/// Second variation of F at the critical normalization (x0, t0) = (0, 1/2).
inline double second_variation(const WeightedGrid& g, const NormalVariation& var,
                               double residual_tol = 1e-8) {
    const double resid = shrinker_residual(g).sup;
    if (resid > residual_tol)
        throw NotACriticalPoint("second variation requires a shrinker; sup residual = " +
                                format_double(resid));

    const int nn = g.nodes();
    const int d = g.dim();
    const int p = g.p();
    std::vector<Eigen::MatrixXd> cov(d);
    for (int a = 0; a < d; ++a) cov[a] = covariant_derivative(g, var, a);

    std::vector<double> terms(nn);
    for (int i = 0; i < nn; ++i) {
        const GeometryData& geo = g.geom[i];
        double grad2 = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                if (geo.inv_metric(a, b) == 0.0) continue;
                double dot = 0.0;
                for (int al = 0; al < p; ++al) dot += cov[a](i, al) * cov[b](i, al);
                grad2 += geo.inv_metric(a, b) * dot;
            }
        const Eigen::VectorXd vc = var.comp.row(i).transpose();
        const double sigma_vv = vc.dot(geo.sigma * vc);
        const double v2 = vc.squaredNorm();
        const double H2 = geo.H_comp.squaredNorm();
        const double HV = geo.H_comp.dot(vc);
        const double yV = var.y.dot(var.amb.row(i));
        const double yperp2 = (geo.nor_frame.transpose() * var.y).squaredNorm();
        // The y-V cross term enters with +2<y,V>: it comes from -|V - y|^2 in
        // the expansion of the deformed kernel, as finite differences and the
        // translational neutrality F''(V = y^perp, x0' = y) = 0 both confirm.
        terms[i] = (grad2 - sigma_vv - v2 - 2.0 * var.h * var.h * H2 - 4.0 * var.h * HV +
                    2.0 * yV - yperp2) *
                   g.gauss_w(i);
    }
    const double v = std::pow(2.0 * M_PI, -0.5 * g.n()) * tree_sum(terms);
    require_finite(v, "second_variation");
    return v;
}

// ---------------------------------------------------------------------------
// Finite-difference cross-validation
// ---------------------------------------------------------------------------

struct VariationReport {
    double analytic_first = 0.0;
    double analytic_second = 0.0;
    double fd_first = 0.0;
    double fd_second = 0.0;
    double fd_step = 0.0;
    double discrepancy_first = 0.0;
    double discrepancy_second = 0.0;
};

namespace detail {

/// Deformed-family functional F(s) = F_{x0+s y, t0+s h}(x + s V).
class DeformedFamily {
public:
    DeformedFamily(const WeightedGrid& g, const NormalVariation& var, const CenterScale& cs)
        : g_(g), var_(var), cs_(cs) {}

    double operator()(double s) const {
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
        const double t = cs_.t0 + s * var_.h;
        if (t <= 0.0) throw ImmersionLost("t0 + s h <= 0 at s = " + format_double(s));
        const Eigen::VectorXd x0 = cs_.x0 + s * var_.y;
        const int nn = g_.nodes();
        const int n = g_.n();
        const double pref = std::pow(4.0 * M_PI * t, -0.5 * n);
        std::vector<double> terms(nn);
        for (int i = 0; i < nn; ++i) {
            const GeometryData& geo = g_.geom[i];
            Eigen::MatrixXd tan = geo.tan_coord;
            for (int a = 0; a < g_.dim(); ++a)
                tan.col(a) += s * var_.damb[a].row(i).transpose();
            const Eigen::MatrixXd met = tan.transpose() * tan;
            const double det = met.determinant();
            if (!(det > 0.0))
                throw ImmersionLost("deformed chart degenerates at s = " + format_double(s));
            const double jac = std::sqrt(det) / geo.sqrt_det_g;
            const Eigen::VectorXd xs = geo.x + s * var_.amb.row(i).transpose() - x0;
            terms[i] = std::exp(-xs.squaredNorm() / (4.0 * t)) * jac * g_.measure_w(i);
        }
        const double v = pref * tree_sum(terms);
        cache_[s] = v;
        return v;
    }

private:
    const WeightedGrid& g_;
    const NormalVariation& var_;
    CenterScale cs_;
    mutable std::map<double, double> cache_;
};

/// Neville extrapolation to zero in the variable s^2.
inline double extrapolate_to_zero(std::vector<double> s2, std::vector<double> v) {
    const int m = static_cast<int>(v.size());
    for (int level = 1; level < m; ++level)
        for (int i = 0; i < m - level; ++i)
            v[i] = v[i + 1] + (v[i + 1] - v[i]) * s2[i + level] / (s2[i] - s2[i + level]);
    return v[0];
}

}  // namespace detail

/// Central differences with Richardson extrapolation over the step list,
/// compared against the analytic first and second variations.
inline VariationReport finite_difference_variation(const WeightedGrid& g,
                                                   const NormalVariation& var,
                                                   const CenterScale& cs,
                                                   std::vector<double> steps = {1e-2, 5e-3,
                                                                                2.5e-3}) {
    if (steps.empty()) throw ConfigError("finite_difference_variation: empty step list");
    detail::DeformedFamily F(g, var, cs);

    std::vector<double> s2, d1, d2;
    for (double s : steps) {
        s2.push_back(s * s);
        d1.push_back((F(s) - F(-s)) / (2.0 * s));
        // 5-point stencil for the second derivative
        d2.push_back((-F(2.0 * s) + 16.0 * F(s) - 30.0 * F(0.0) + 16.0 * F(-s) - F(-2.0 * s)) /
                     (12.0 * s * s));
    }

    VariationReport rep;
    rep.fd_step = steps.back();
    rep.fd_first = detail::extrapolate_to_zero(s2, d1);
    rep.fd_second = detail::extrapolate_to_zero(s2, d2);
    rep.analytic_first = first_variation(g, var, cs);

    const bool critical_normalization =
        cs.x0.cwiseAbs().maxCoeff() == 0.0 && cs.t0 == 0.5;
    if (critical_normalization) rep.analytic_second = second_variation(g, var);

    rep.discrepancy_first = std::abs(rep.fd_first - rep.analytic_first) /
                            std::max(std::abs(rep.analytic_first), 1e-12);
    if (critical_normalization)
        rep.discrepancy_second = std::abs(rep.fd_second - rep.analytic_second) /
                                 std::max(std::abs(rep.analytic_second), 1e-12);
    return rep;
}

}  // namespace shrinklab
