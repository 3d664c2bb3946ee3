#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "shrinklab/geometry.hpp"
#include "shrinklab/model.hpp"
#include "shrinklab/numerics.hpp"
#include "shrinklab/rules.hpp"
#include "shrinklab/sphharm.hpp"

namespace shrinklab {

/// Colatitude/azimuth pairing for spectral differentiation on a spherical
/// block: profiles of azimuthal order m are differentiated in theta by the
/// per-mode associated-Legendre matrix dmat[m].
struct SphericalPair {
    int theta_axis = -1;
    int phi_axis = -1;
    std::vector<Eigen::MatrixXd> dmat;
};

/// Quadrature grid over a model, carrying per-node geometry and the three
/// weight layers:
///   base_w     quadrature weight in parameter space,
///   measure_w  base_w * sqrt(det g)   (the area element),
///   gauss_w    measure_w * e^{-|x|^2/2}.
/// Euclidean factors use Gauss nodes adapted to e^{-s^2/2}, so polynomial x
/// Gaussian integrands are exact there; compact factors carry the Gaussian
/// inside gauss_w.  Grids are immutable after build_grid.
struct WeightedGrid {
    std::shared_ptr<const ModelCatalogEntry> model;
    std::vector<int> shape;      // nodes per factor
    std::vector<Rule1D> rules;   // per factor
    double truncation = 8.0;
    std::vector<Eigen::VectorXd> u;  // parameter point per node
    Eigen::VectorXd base_w, measure_w, gauss_w;
    std::vector<GeometryData> geom;
    std::vector<SphericalPair> sph_pairs;  // one per (Polar m=1, Circle) block
    // normal-connection coefficients Gamma[axis][node](beta,alpha) =
    // <d_axis e_alpha, e_beta>; empty when the frame is parallel
    std::vector<std::vector<Eigen::MatrixXd>> gamma;
    bool gamma_is_zero = true;

    int nodes() const { return static_cast<int>(u.size()); }
    int dim() const { return static_cast<int>(shape.size()); }
    int n() const { return model->n; }
    int p() const { return model->p; }
    int ambient() const { return model->n + model->p; }

    int stride(int axis) const {
        int s = 1;
        for (int a = axis + 1; a < dim(); ++a) s *= shape[a];
        return s;
    }
    void unflatten(int idx, std::vector<int>& mi) const {
        mi.resize(dim());
        for (int a = dim() - 1; a >= 0; --a) {
            mi[a] = idx % shape[a];
            idx /= shape[a];
        }
    }
    int flatten(const std::vector<int>& mi) const {
        int idx = 0;
        for (int a = 0; a < dim(); ++a) idx = idx * shape[a] + mi[a];
        return idx;
    }
};

namespace detail {

inline const SphericalPair* find_pair(const WeightedGrid& g, int theta_axis) {
    for (const auto& p : g.sph_pairs)
        if (p.theta_axis == theta_axis) return &p;
    return nullptr;
}

}  // namespace detail

/// Spectral derivative of a node field along one parameter axis.  Circle and
/// line factors apply their dense differentiation matrix along the axis.  A
/// colatitude axis paired with its azimuth is differentiated per azimuthal
/// mode with the associated-Legendre matrices, which is exact for every
/// profile the grid can represent; unpaired polar axes fall back to the
/// polynomial-in-cos matrix.
inline Eigen::VectorXd axis_derivative(const WeightedGrid& g, int axis,
                                       const Eigen::VectorXd& field) {
    const Factor& factor = g.model->chart->domain().factors[axis];
    const int nn = g.nodes();
    const int na = g.shape[axis];
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nn);
    const int stride = g.stride(axis);

    const SphericalPair* pair =
        factor.kind == Factor::Kind::Polar ? detail::find_pair(g, axis) : nullptr;

    if (!pair) {
        const Eigen::MatrixXd& d = g.rules[axis].diff;
        std::vector<int> mi;
        Eigen::VectorXd col(na), dcol(na);
        for (int base = 0; base < nn; ++base) {
            g.unflatten(base, mi);
            if (mi[axis] != 0) continue;
            for (int j = 0; j < na; ++j) col(j) = field(base + j * stride);
            dcol.noalias() = d * col;
            for (int j = 0; j < na; ++j) out(base + j * stride) = dcol(j);
        }
        return out;
    }

    // paired colatitude: per (theta, phi) plane, expand in azimuthal modes
    const int np = g.shape[pair->phi_axis];
    const int pstride = g.stride(pair->phi_axis);
    const int mmax = (np - 1) / 2;
    const auto& phi = g.rules[pair->phi_axis].nodes;

    Eigen::MatrixXd plane(na, np), dplane(na, np);
    Eigen::MatrixXd am(na, mmax + 1), bm(na, mmax + 1);
    std::vector<int> mi;
    for (int base = 0; base < nn; ++base) {
        g.unflatten(base, mi);
        if (mi[axis] != 0 || mi[pair->phi_axis] != 0) continue;
        for (int j = 0; j < na; ++j)
            for (int i = 0; i < np; ++i) plane(j, i) = field(base + j * stride + i * pstride);

        // analysis (odd np: complete cos/sin basis)
        for (int m = 0; m <= mmax; ++m) {
            const double scale = (m == 0) ? 1.0 / np : 2.0 / np;
            for (int j = 0; j < na; ++j) {
                double ac = 0.0, as = 0.0;
                for (int i = 0; i < np; ++i) {
                    ac += plane(j, i) * std::cos(m * phi[i]);
                    if (m > 0) as += plane(j, i) * std::sin(m * phi[i]);
                }
                am(j, m) = scale * ac;
                bm(j, m) = scale * as;
            }
        }
        // differentiate each mode profile and resynthesize
        dplane.setZero();
        for (int m = 0; m <= mmax; ++m) {
            const Eigen::VectorXd da = pair->dmat[m] * am.col(m);
            const Eigen::VectorXd db = (m > 0) ? Eigen::VectorXd(pair->dmat[m] * bm.col(m))
                                               : Eigen::VectorXd::Zero(na);
            for (int i = 0; i < np; ++i) {
                const double c = std::cos(m * phi[i]);
                const double s = std::sin(m * phi[i]);
                for (int j = 0; j < na; ++j)
                    dplane(j, i) += da(j) * c + (m > 0 ? db(j) * s : 0.0);
            }
        }
        for (int j = 0; j < na; ++j)
            for (int i = 0; i < np; ++i) out(base + j * stride + i * pstride) = dplane(j, i);
    }
    return out;
}

/// Builds the quadrature grid.  `res` scales per-factor node counts through
/// the chart's declared fractions; `res_override` (from a model file or CLI
/// list) pins exact per-factor counts instead.
inline WeightedGrid build_grid(const ModelCatalogEntry& model, int res = 128,
                               double truncation = 8.0,
                               const std::vector<int>& res_override = {}) {
    const ImmersionChart& chart = *model.chart;
    const ParamDomain& dom = chart.domain();
    const int d = dom.dim();

    if (!model.polynomial_growth && !dom.compact())
        throw UnsupportedDomain(
            "noncompact custom chart without an asserted polynomial-volume-growth flag");
    if (!res_override.empty() && static_cast<int>(res_override.size()) != d)
        throw ConfigError("res override must list one node count per domain factor");
    if (res < 8) throw ConfigError("resolution must be at least 8 nodes per factor");
    if (truncation < 6.0)
        throw ConfigError("truncation must be at least 6 (Gaussian standard deviations)");

    WeightedGrid g;
    g.model = std::make_shared<ModelCatalogEntry>(model);
    g.truncation = truncation;
    g.shape.resize(d);
    g.rules.resize(d);

    for (int a = 0; a < d; ++a) {
        const Factor& f = dom.factors[a];
        int cnt = res_override.empty()
                      ? std::max(8, static_cast<int>(std::lround(res * f.res_fraction)))
                      : res_override[a];
        if (cnt < 8) throw ConfigError("resolution must be at least 8 nodes per factor");
        switch (f.kind) {
            case Factor::Kind::Circle:
                // odd counts keep the Fourier differentiation matrix free of
                // a spurious Nyquist null vector
                if (cnt % 2 == 0) ++cnt;
                g.rules[a] = circle_rule(cnt, f.period);
                break;
            case Factor::Kind::Polar:
                g.rules[a] = polar_rule(cnt, f.sine_power);
                break;
            case Factor::Kind::Line:
                g.rules[a] = hermite_rule(cnt);
                break;
        }
        g.shape[a] = cnt;
    }

    // pair each unit-sine-power colatitude with the following azimuth axis
    for (int a = 0; a + 1 < d; ++a) {
        if (dom.factors[a].kind == Factor::Kind::Polar && dom.factors[a].sine_power == 1 &&
            dom.factors[a + 1].kind == Factor::Kind::Circle) {
            SphericalPair pair;
            pair.theta_axis = a;
            pair.phi_axis = a + 1;
            pair.dmat = sphharm::mode_diff_matrices(g.rules[a].nodes, g.rules[a].weights,
                                                    (g.shape[a + 1] - 1) / 2);
            g.sph_pairs.push_back(std::move(pair));
        }
    }

    int nn = 1;
    for (int a = 0; a < d; ++a) nn *= g.shape[a];
    g.u.resize(nn);
    g.base_w.resize(nn);
    g.measure_w.resize(nn);
    g.gauss_w.resize(nn);
    g.geom.reserve(nn);

    std::vector<int> mi;
    for (int idx = 0; idx < nn; ++idx) {
        g.unflatten(idx, mi);
        Eigen::VectorXd u(d);
        double bw = 1.0;
        for (int a = 0; a < d; ++a) {
            const Factor& f = dom.factors[a];
            const double node = g.rules[a].nodes[mi[a]];
            u(a) = node;
            double w = g.rules[a].weights[mi[a]];
            // base weights live in parameter space: divide the measure factor
            // that sqrt(det g) will put back (sin^m for polar) or that the
            // Gaussian layer will put back (e^{-s^2/2} for lines)
            if (f.kind == Factor::Kind::Polar)
                w /= std::pow(std::sin(node), f.sine_power);
            else if (f.kind == Factor::Kind::Line)
                w *= std::exp(0.5 * node * node);
            bw *= w;
        }
        g.u[idx] = u;
        g.base_w(idx) = bw;

        const Eigen::MatrixXd* hint = nullptr;
        if (!chart.normal_frame(u) && idx > 0) hint = &g.geom[idx - 1].nor_frame;
        g.geom.push_back(evaluate_geometry(chart, u, hint));
        const GeometryData& geo = g.geom.back();
        g.measure_w(idx) = bw * geo.sqrt_det_g;
        g.gauss_w(idx) = g.measure_w(idx) * std::exp(-0.5 * geo.x.squaredNorm());
    }

    // normal-connection coefficients: zero for charts with an analytic
    // (parallel) frame, otherwise differentiate the propagated frame
    if (chart.normal_frame(g.u[0])) {
        g.gamma_is_zero = true;
    } else {
        const int p = g.p();
        const int amb = g.ambient();
        g.gamma_is_zero = false;
        g.gamma.assign(d, std::vector<Eigen::MatrixXd>(nn, Eigen::MatrixXd::Zero(p, p)));
        // one field per (normal index, ambient component)
        for (int al = 0; al < p; ++al) {
            std::vector<Eigen::VectorXd> comp(amb, Eigen::VectorXd(nn));
            for (int c = 0; c < amb; ++c)
                for (int idx = 0; idx < nn; ++idx) comp[c](idx) = g.geom[idx].nor_frame(c, al);
            for (int a = 0; a < d; ++a) {
                std::vector<Eigen::VectorXd> dcomp(amb);
                for (int c = 0; c < amb; ++c) dcomp[c] = axis_derivative(g, a, comp[c]);
                for (int idx = 0; idx < nn; ++idx) {
                    Eigen::VectorXd dvec(amb);
                    for (int c = 0; c < amb; ++c) dvec(c) = dcomp[c](idx);
                    g.gamma[a][idx].col(al) = g.geom[idx].nor_frame.transpose() * dvec;
                }
            }
        }
        // enforce antisymmetry (the symmetric part is discretization noise)
        for (int a = 0; a < d; ++a)
            for (int idx = 0; idx < nn; ++idx) {
                Eigen::MatrixXd& m = g.gamma[a][idx];
                m = 0.5 * (m - m.transpose().eval());
            }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Integration and inner products
// ---------------------------------------------------------------------------

/// Gaussian-weighted integral  sum_u f(u) gauss_w(u)  ~ int_M f e^{-|x|^2/2} dmu.
inline double integrate(const WeightedGrid& g, const Eigen::VectorXd& f) {
    const int nn = g.nodes();
    if (f.size() != nn) throw DimensionMismatch("integrate: field size != node count");
    std::vector<double> terms(nn);
    for (int i = 0; i < nn; ++i) {
        if (!std::isfinite(f(i)))
            throw NonFiniteValue("integrate: non-finite value at node " + std::to_string(i));
        terms[i] = f(i) * g.gauss_w(i);
    }
    return tree_sum(terms);
}

/// Same against the plain area element (no Gaussian).
inline double integrate_measure(const WeightedGrid& g, const Eigen::VectorXd& f) {
    const int nn = g.nodes();
    std::vector<double> terms(nn);
    for (int i = 0; i < nn; ++i) {
        if (!std::isfinite(f(i)))
            throw NonFiniteValue("integrate: non-finite value at node " + std::to_string(i));
        terms[i] = f(i) * g.measure_w(i);
    }
    return tree_sum(terms);
}

inline double weighted_inner(const WeightedGrid& g, const Eigen::VectorXd& f,
                             const Eigen::VectorXd& h) {
    if (f.size() != h.size()) throw DimensionMismatch("weighted_inner: unequal field sizes");
    return integrate(g, f.cwiseProduct(h));
}

/// Weighted L^2 inner product of two normal fields given by components in
/// the grid's orthonormal normal frame (nodes x p matrices).
inline double weighted_inner_fields(const WeightedGrid& g, const Eigen::MatrixXd& V,
                                    const Eigen::MatrixXd& W) {
    if (V.cols() != W.cols() || V.rows() != W.rows())
        throw DimensionMismatch("weighted_inner_fields: fields of unequal shape");
    if (V.rows() != g.nodes())
        throw DimensionMismatch("weighted_inner_fields: field rows != node count");
    Eigen::VectorXd dots(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) dots(i) = V.row(i).dot(W.row(i));
    return integrate(g, dots);
}

inline double weighted_norm_fields(const WeightedGrid& g, const Eigen::MatrixXd& V) {
    return std::sqrt(std::max(0.0, weighted_inner_fields(g, V, V)));
}

}  // namespace shrinklab
