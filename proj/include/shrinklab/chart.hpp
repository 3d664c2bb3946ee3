#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "shrinklab/domain.hpp"
#include "shrinklab/errors.hpp"

namespace shrinklab {

/// A parametric immersion u -> x(u) of an n-manifold into R^{n+p}.
/// Charts either supply analytic first/second derivatives or fall back to
/// central finite differences with steps relative to the domain extent.
class ImmersionChart {
public:
    ImmersionChart(int intrinsic_dim, int ambient_dim, ParamDomain domain)
        : n_(intrinsic_dim), amb_(ambient_dim), domain_(std::move(domain)) {
        if (amb_ <= n_) throw ModelError("ambient dimension must exceed intrinsic dimension");
    }
    virtual ~ImmersionChart() = default;

    int intrinsic_dim() const { return n_; }
    int ambient_dim() const { return amb_; }
    int codim() const { return amb_ - n_; }
    const ParamDomain& domain() const { return domain_; }

    virtual Eigen::VectorXd position(const Eigen::VectorXd& u) const = 0;

    virtual bool analytic() const { return false; }

    /// (n+p) x n matrix of first derivatives d x / d u_i.
    virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const {
        const int n = n_;
        Eigen::MatrixXd j(amb_, n);
        for (int i = 0; i < n; ++i) {
            const double h = fd_step_first() * extent(i);
            Eigen::VectorXd up = u, um = u;
            up(i) += h;
            um(i) -= h;
            j.col(i) = (position(up) - position(um)) / (2.0 * h);
        }
        return j;
    }

    /// Second derivatives packed as hessian()[i*n+j] = d^2 x / du_i du_j.
    virtual std::vector<Eigen::VectorXd> hessian(const Eigen::VectorXd& u) const {
        const int n = n_;
        std::vector<Eigen::VectorXd> hs(n * n);
        const Eigen::VectorXd x0 = position(u);
        for (int i = 0; i < n; ++i) {
            const double hi = fd_step_second() * extent(i);
            for (int j = i; j < n; ++j) {
                Eigen::VectorXd d;
                if (i == j) {
                    Eigen::VectorXd up = u, um = u;
                    up(i) += hi;
                    um(i) -= hi;
                    d = (position(up) - 2.0 * x0 + position(um)) / (hi * hi);
                } else {
                    const double hj = fd_step_second() * extent(j);
                    Eigen::VectorXd upp = u, upm = u, ump = u, umm = u;
                    upp(i) += hi; upp(j) += hj;
                    upm(i) += hi; upm(j) -= hj;
                    ump(i) -= hi; ump(j) += hj;
                    umm(i) -= hi; umm(j) -= hj;
                    d = (position(upp) - position(upm) - position(ump) + position(umm)) /
                        (4.0 * hi * hj);
                }
                hs[i * n + j] = d;
                hs[j * n + i] = d;
            }
        }
        return hs;
    }

    /// Analytic orthonormal normal frame, columns e_alpha, if the chart has
    /// one that is smooth across the whole grid.  Custom charts return
    /// nullopt and the grid layer propagates a frame numerically.
    virtual std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& /*u*/) const {
        return std::nullopt;
    }

    double fd_step_first() const { return fd_first_; }
    double fd_step_second() const { return fd_second_; }
    void set_fd_steps(double rel_first, double rel_second) {
        fd_first_ = rel_first;
        fd_second_ = rel_second;
    }

private:
    double extent(int axis) const {
        const Factor& f = domain_.factors[axis];
        switch (f.kind) {
            case Factor::Kind::Circle: return f.period;
            case Factor::Kind::Polar: return M_PI;
            case Factor::Kind::Line: return 16.0;
        }
        return 1.0;
    }

    int n_, amb_;
    ParamDomain domain_;
    double fd_first_ = 1e-5;
    double fd_second_ = 1e-4;
};

// ---------------------------------------------------------------------------
// Trigonometric-product charts.  Every catalog model is a sum of terms
//   coeff * prod_axis f_axis(u_axis),  f in {1, cos, sin, identity},
// per ambient coordinate, which makes analytic first and second derivatives
// a matter of flipping selectors.
// ---------------------------------------------------------------------------

struct TrigTerm {
    enum Sel : int { One = 0, Cos = 1, Sin = 2, Linear = 3 };
    double coeff = 1.0;
    std::vector<int> sel;      // one selector per axis
    std::vector<double> freq;  // frequency multiplier per axis (defaults to 1)

    static double eval_sel(int sel, double u, int order, double k) {
        switch (sel) {
            case One: return order == 0 ? 1.0 : 0.0;
            case Cos:
                switch (order % 4) {
                    case 0: return std::cos(k * u) * std::pow(k, order);
                    case 1: return -std::sin(k * u) * std::pow(k, order);
                    case 2: return -std::cos(k * u) * std::pow(k, order);
                    default: return std::sin(k * u) * std::pow(k, order);
                }
            case Sin:
                switch (order % 4) {
                    case 0: return std::sin(k * u) * std::pow(k, order);
                    case 1: return std::cos(k * u) * std::pow(k, order);
                    case 2: return -std::sin(k * u) * std::pow(k, order);
                    default: return -std::cos(k * u) * std::pow(k, order);
                }
            case Linear:
                return order == 0 ? u : (order == 1 ? 1.0 : 0.0);
        }
        return 0.0;
    }

    double eval(const Eigen::VectorXd& u, const std::vector<int>& orders) const {
        double v = coeff;
        for (int a = 0; a < static_cast<int>(sel.size()); ++a) {
            const double k = freq.empty() ? 1.0 : freq[a];
            v *= eval_sel(sel[a], u(a), orders[a], k);
        }
        return v;
    }
};

class TrigProductChart : public ImmersionChart {
public:
    TrigProductChart(int intrinsic_dim, int ambient_dim, ParamDomain domain,
                     std::vector<std::vector<TrigTerm>> coords)
        : ImmersionChart(intrinsic_dim, ambient_dim, std::move(domain)),
          coords_(std::move(coords)) {}

    bool analytic() const override { return true; }

    Eigen::VectorXd position(const Eigen::VectorXd& u) const override {
        return eval(u, std::vector<int>(intrinsic_dim(), 0));
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const override {
        const int n = intrinsic_dim();
        Eigen::MatrixXd j(ambient_dim(), n);
        std::vector<int> orders(n, 0);
        for (int i = 0; i < n; ++i) {
            orders[i] = 1;
            j.col(i) = eval(u, orders);
            orders[i] = 0;
        }
        return j;
    }

    std::vector<Eigen::VectorXd> hessian(const Eigen::VectorXd& u) const override {
        const int n = intrinsic_dim();
        std::vector<Eigen::VectorXd> hs(n * n);
        std::vector<int> orders(n, 0);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                orders[i] += 1;
                orders[j] += 1;
                hs[i * n + j] = eval(u, orders);
                hs[j * n + i] = hs[i * n + j];
                orders[i] = 0;
                orders[j] = 0;
            }
        }
        return hs;
    }

protected:
    Eigen::VectorXd eval(const Eigen::VectorXd& u, const std::vector<int>& orders) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(ambient_dim());
        for (int a = 0; a < ambient_dim(); ++a)
            for (const TrigTerm& t : coords_[a]) x(a) += t.eval(u, orders);
        return x;
    }

    std::vector<std::vector<TrigTerm>> coords_;
};

/// Uniform rescaling x -> alpha * x of another chart; used by the scaling
/// invariance and shrinking-family checks.  Normal frames are unchanged.
class ScaledChart : public ImmersionChart {
public:
    ScaledChart(std::shared_ptr<const ImmersionChart> base, double alpha)
        : ImmersionChart(base->intrinsic_dim(), base->ambient_dim(), base->domain()),
          base_(std::move(base)),
          alpha_(alpha) {}

    bool analytic() const override { return base_->analytic(); }
    Eigen::VectorXd position(const Eigen::VectorXd& u) const override {
        return alpha_ * base_->position(u);
    }
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const override {
        return alpha_ * base_->jacobian(u);
    }
    std::vector<Eigen::VectorXd> hessian(const Eigen::VectorXd& u) const override {
        auto hs = base_->hessian(u);
        for (auto& h : hs) h *= alpha_;
        return hs;
    }
    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& u) const override {
        return base_->normal_frame(u);
    }

private:
    std::shared_ptr<const ImmersionChart> base_;
    double alpha_;
};

/// Ambient rotation x -> R x of another chart (R orthogonal).
class RotatedChart : public ImmersionChart {
public:
    RotatedChart(std::shared_ptr<const ImmersionChart> base, Eigen::MatrixXd rot)
        : ImmersionChart(base->intrinsic_dim(), base->ambient_dim(), base->domain()),
          base_(std::move(base)),
          rot_(std::move(rot)) {}

    bool analytic() const override { return base_->analytic(); }
    Eigen::VectorXd position(const Eigen::VectorXd& u) const override {
        return rot_ * base_->position(u);
    }
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const override {
        return rot_ * base_->jacobian(u);
    }
    std::vector<Eigen::VectorXd> hessian(const Eigen::VectorXd& u) const override {
        auto hs = base_->hessian(u);
        for (auto& h : hs) h = rot_ * h;
        return hs;
    }
    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& u) const override {
        auto f = base_->normal_frame(u);
        if (!f) return std::nullopt;
        return rot_ * (*f);
    }

private:
    std::shared_ptr<const ImmersionChart> base_;
    Eigen::MatrixXd rot_;
};

namespace detail {

/// Selector table for the round m-sphere of radius r embedded in the first
/// m+1 ambient coordinates starting at `offset`:
///   x_offset   = r cos(t_0)
///   x_offset+j = r sin(t_0)..sin(t_{j-1}) cos(t_j)
///   x_offset+m = r sin(t_0)..sin(t_{m-1})
/// Axes t_0..t_{m-2} are polar, t_{m-1} is the circle coordinate.
inline void add_sphere_terms(std::vector<std::vector<TrigTerm>>& coords, int total_axes,
                             int axis_offset, int coord_offset, int m, double r) {
    for (int a = 0; a <= m; ++a) {
        TrigTerm t;
        t.coeff = r;
        t.sel.assign(total_axes, TrigTerm::One);
        for (int l = 0; l < std::min(a, m); ++l) t.sel[axis_offset + l] = TrigTerm::Sin;
        if (a < m) t.sel[axis_offset + a] = TrigTerm::Cos;
        coords[coord_offset + a].push_back(t);
    }
}

/// Domain factors for the round m-sphere chart; polar factor l carries
/// sine power m-1-l, the final factor is a circle.
inline void add_sphere_factors(ParamDomain& dom, int m, double polar_fraction,
                               double circle_fraction) {
    for (int l = 0; l + 1 < m; ++l) {
        Factor f;
        f.kind = Factor::Kind::Polar;
        f.sine_power = m - 1 - l;
        f.res_fraction = polar_fraction;
        dom.factors.push_back(f);
    }
    Factor c;
    c.kind = Factor::Kind::Circle;
    c.res_fraction = circle_fraction;
    dom.factors.push_back(c);
}

}  // namespace detail

/// Round n-sphere of radius `radius` (default sqrt(n)) in R^{n+p}.
class SphereChart : public TrigProductChart {
public:
    SphereChart(int n, int p, double radius)
        : TrigProductChart(n, n + p, make_domain(n), make_coords(n, n + p, radius)),
          radius_(radius) {}

    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& u) const override {
        const int amb = ambient_dim();
        const int n = intrinsic_dim();
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(amb, codim());
        e.col(0) = position(u) / radius_;  // outward radial
        for (int a = 1; a < codim(); ++a) e(n + 1 + (a - 1), a) = 1.0;  // flat directions
        return e;
    }

private:
    static ParamDomain make_domain(int n) {
        ParamDomain dom;
        const double pf = (n >= 3) ? 0.25 : 0.5;
        detail::add_sphere_factors(dom, n, pf, n >= 3 ? 0.5 : 1.0);
        return dom;
    }
    static std::vector<std::vector<TrigTerm>> make_coords(int n, int amb, double r) {
        std::vector<std::vector<TrigTerm>> coords(amb);
        detail::add_sphere_terms(coords, n, 0, 0, n, r);
        return coords;
    }
    double radius_;
};

/// Flat R^n in R^{n+p}: x(u) = (u_1,...,u_n, 0,...,0).
class PlaneChart : public TrigProductChart {
public:
    PlaneChart(int n, int p)
        : TrigProductChart(n, n + p, make_domain(n), make_coords(n, n + p)) {}

    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd&) const override {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(ambient_dim(), codim());
        for (int a = 0; a < codim(); ++a) e(intrinsic_dim() + a, a) = 1.0;
        return e;
    }

private:
    static ParamDomain make_domain(int n) {
        ParamDomain dom;
        for (int i = 0; i < n; ++i) {
            Factor f;
            f.kind = Factor::Kind::Line;
            f.res_fraction = 0.5;
            dom.factors.push_back(f);
        }
        return dom;
    }
    static std::vector<std::vector<TrigTerm>> make_coords(int n, int amb) {
        std::vector<std::vector<TrigTerm>> coords(amb);
        for (int i = 0; i < n; ++i) {
            TrigTerm t;
            t.sel.assign(n, TrigTerm::One);
            t.sel[i] = TrigTerm::Linear;
            coords[i].push_back(t);
        }
        return coords;
    }
};

/// S^k(sqrt(k)) x R^{n-k} in R^{n+p}; the spherical factor occupies the
/// first k+1 ambient coordinates, the Euclidean factor the next n-k.
class CylinderChart : public TrigProductChart {
public:
    CylinderChart(int k, int n, int p)
        : TrigProductChart(n, n + p, make_domain(k, n), make_coords(k, n, n + p)),
          k_(k) {}

    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& u) const override {
        const int amb = ambient_dim();
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(amb, codim());
        const Eigen::VectorXd x = position(u);
        for (int a = 0; a <= k_; ++a) e(a, 0) = x(a) / std::sqrt(double(k_));
        const int n = intrinsic_dim();
        for (int a = 1; a < codim(); ++a) e(n + 1 + (a - 1), a) = 1.0;
        return e;
    }

private:
    static ParamDomain make_domain(int k, int n) {
        ParamDomain dom;
        detail::add_sphere_factors(dom, k, 0.25, 0.5);
        for (int i = 0; i < n - k; ++i) {
            Factor f;
            f.kind = Factor::Kind::Line;
            f.res_fraction = 0.25;
            dom.factors.push_back(f);
        }
        return dom;
    }
    static std::vector<std::vector<TrigTerm>> make_coords(int k, int n, int amb) {
        std::vector<std::vector<TrigTerm>> coords(amb);
        detail::add_sphere_terms(coords, n, 0, 0, k, std::sqrt(double(k)));
        for (int i = 0; i < n - k; ++i) {
            TrigTerm t;
            t.sel.assign(n, TrigTerm::One);
            t.sel[k + i] = TrigTerm::Linear;
            coords[k + 1 + i].push_back(t);
        }
        return coords;
    }
    int k_;
};

/// S^1(1) x S^1(1) in R^4.
class CliffordTorusChart : public TrigProductChart {
public:
    CliffordTorusChart()
        : TrigProductChart(2, 4, make_domain(), make_coords()) {}

    std::optional<Eigen::MatrixXd> normal_frame(const Eigen::VectorXd& u) const override {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(4, 2);
        e(0, 0) = std::cos(u(0));
        e(1, 0) = std::sin(u(0));
        e(2, 1) = std::cos(u(1));
        e(3, 1) = std::sin(u(1));
        return e;
    }

private:
    static ParamDomain make_domain() {
        ParamDomain dom;
        for (int i = 0; i < 2; ++i) {
            Factor f;
            f.kind = Factor::Kind::Circle;
            f.res_fraction = 0.5;
            dom.factors.push_back(f);
        }
        return dom;
    }
    static std::vector<std::vector<TrigTerm>> make_coords() {
        std::vector<std::vector<TrigTerm>> coords(4);
        const int sels[4][2] = {{TrigTerm::Cos, TrigTerm::One},
                                {TrigTerm::Sin, TrigTerm::One},
                                {TrigTerm::One, TrigTerm::Cos},
                                {TrigTerm::One, TrigTerm::Sin}};
        for (int a = 0; a < 4; ++a) {
            TrigTerm t;
            t.sel = {sels[a][0], sels[a][1]};
            coords[a].push_back(t);
        }
        return coords;
    }
};

/// Axis-aligned ellipsoid in R^3 (a test chart; not a shrinker for generic
/// semi-axes).  No analytic normal frame: exercises the numeric frame
/// propagation and the finite-difference geometry path.
class EllipsoidChart : public TrigProductChart {
public:
    EllipsoidChart(double a, double b, double c)
        : TrigProductChart(2, 3, make_domain(), make_coords(a, b, c)) {}

private:
    static ParamDomain make_domain() {
        ParamDomain dom;
        detail::add_sphere_factors(dom, 2, 0.5, 1.0);
        return dom;
    }
    static std::vector<std::vector<TrigTerm>> make_coords(double a, double b, double c) {
        std::vector<std::vector<TrigTerm>> coords(3);
        TrigTerm t0;
        t0.coeff = a;
        t0.sel = {TrigTerm::Cos, TrigTerm::One};
        coords[0].push_back(t0);
        TrigTerm t1;
        t1.coeff = b;
        t1.sel = {TrigTerm::Sin, TrigTerm::Cos};
        coords[1].push_back(t1);
        TrigTerm t2;
        t2.coeff = c;
        t2.sel = {TrigTerm::Sin, TrigTerm::Sin};
        coords[2].push_back(t2);
        return coords;
    }
};

/// Adapter that hides a chart's analytic derivatives, forcing the
/// finite-difference fallback (for convergence tests of the FD path).
class FiniteDifferenceChart : public ImmersionChart {
public:
    explicit FiniteDifferenceChart(std::shared_ptr<const ImmersionChart> base)
        : ImmersionChart(base->intrinsic_dim(), base->ambient_dim(), base->domain()),
          base_(std::move(base)) {}
    Eigen::VectorXd position(const Eigen::VectorXd& u) const override {
        return base_->position(u);
    }

private:
    std::shared_ptr<const ImmersionChart> base_;
};

}  // namespace shrinklab
