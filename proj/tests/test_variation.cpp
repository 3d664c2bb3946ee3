#include <catch2/catch_amalgamated.hpp>

#include "shrinklab/variation.hpp"

using namespace shrinklab;

namespace {
NormalVariation zero_variation(const WeightedGrid& g, const Eigen::VectorXd& y, double h) {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(g.nodes(), g.p());
    std::vector<Eigen::MatrixXd> dcomp(g.dim(), comp);
    return make_variation(g, comp, dcomp, y, h);
}
}  // namespace

TEST_CASE("first variation vanishes on catalog shrinkers at (0, 1/2)") {
    for (const auto& model :
         {make_sphere(1, 1), make_sphere(2, 1), make_sphere(2, 2), make_cylinder(1, 2, 1),
          make_clifford_torus(), make_plane(2, 1)}) {
        auto g = build_grid(model, 96);
        const CenterScale cs = default_center(g.ambient());
        for (int t = 0; t < 5; ++t) {
            const auto var = random_variation(g, 1000u * t + 17u);
            INFO(model.name << " trial " << t);
            REQUIRE(std::abs(first_variation(g, var, cs)) < 1e-8);
        }
    }
}

TEST_CASE("first variation on the wrong-radius sphere matches the radial oracle") {
    // F(r) = (2 pi)^{-1} e^{-r^2/2} 4 pi r^2 gives F'(1) = 2 e^{-1/2}; the
    // outward unit normal realizes d/ds F(1 + s)
    auto model = make_sphere(2, 1, 1.0);
    auto g = build_grid(model, 64);
    Eigen::VectorXd dir(1);
    dir << 1.0;  // frame column 0 is the outward radial normal
    auto var = scalar_field_variation(
        g, [](const Eigen::VectorXd&) { return 1.0; },
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }, dir,
        Eigen::VectorXd::Zero(3), 0.0);
    const double fv = first_variation(g, var, default_center(3));
    REQUIRE(fv == Catch::Approx(2.0 * std::exp(-0.5)).epsilon(1e-10));
    REQUIRE(fv > 0.0);
}

TEST_CASE("plane: normal shift of the center is flat to first order") {
    auto g = build_grid(make_plane(2, 1), 64);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
    y(2) = 1.0;  // normal direction
    const auto var = zero_variation(g, y, 0.0);
    REQUIRE(std::abs(first_variation(g, var, default_center(3))) < 1e-12);
}

TEST_CASE("second variation: zero variation gives zero") {
    auto g = build_grid(make_sphere(2, 1), 48);
    const auto var = zero_variation(g, Eigen::VectorXd::Zero(3), 0.0);
    REQUIRE(second_variation(g, var) == 0.0);
}

TEST_CASE("second variation is quadratic and polarizes") {
    auto g = build_grid(make_sphere(2, 2), 48);
    const auto V = random_variation(g, 11u, /*with_yh=*/false);
    const auto W = random_variation(g, 12u, /*with_yh=*/false);

    // assemble V + W and V - W by hand (same frame components)
    auto combine = [&](double a, double b) {
        Eigen::MatrixXd comp = a * V.comp + b * W.comp;
        std::vector<Eigen::MatrixXd> dcomp(g.dim());
        NormalVariation out = V;
        out.comp = comp;
        out.amb = a * V.amb + b * W.amb;
        for (int ax = 0; ax < g.dim(); ++ax) out.damb[ax] = a * V.damb[ax] + b * W.damb[ax];
        return out;
    };

    const double qvw = second_variation(g, combine(1.0, 1.0));
    const double qvmw = second_variation(g, combine(1.0, -1.0));
    const double qv = second_variation(g, V);
    const double qw = second_variation(g, W);
    REQUIRE(qvw + qvmw == Catch::Approx(2.0 * (qv + qw)).epsilon(1e-9));

    // scaling: F''(2V) = 4 F''(V) at (y,h) = 0
    REQUIRE(second_variation(g, combine(2.0, 0.0)) == Catch::Approx(4.0 * qv).epsilon(1e-10));
}

TEST_CASE("pure (y,h) block of the second variation is negative semidefinite") {
    Rng rng(999u);
    for (const auto& model : {make_sphere(2, 1), make_cylinder(1, 2, 1), make_plane(2, 1)}) {
        auto g = build_grid(model, 64);
        for (int t = 0; t < 5; ++t) {
            Eigen::VectorXd y(g.ambient());
            for (int c = 0; c < g.ambient(); ++c) y(c) = rng.normal();
            const double h = rng.normal();
            const auto var = zero_variation(g, y, h);
            INFO(model.name);
            REQUIRE(second_variation(g, var) <= 1e-12);
        }
    }
}

TEST_CASE("sphere: constant normal with the matched scale variation is neutral") {
    for (int n : {1, 2, 3}) {
        auto model = make_sphere(n, 1);
        auto g = build_grid(model, 48);
        const double a = 0.8;
        Eigen::VectorXd dir = principal_direction(g);  // nu = H/|H|
        auto var = scalar_field_variation(
            g, [&](const Eigen::VectorXd&) { return a; },
            [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }, dir,
            Eigen::VectorXd::Zero(n + 1), -a / std::sqrt(double(n)));
        INFO("n = " << n);
        REQUIRE(std::abs(second_variation(g, var)) < 1e-10);
    }
}

TEST_CASE("sphere(2,1): degree-2 harmonic has positive second variation") {
    auto g = build_grid(make_sphere(2, 1), 64);
    Eigen::VectorXd dir = principal_direction(g);
    auto var = scalar_field_variation(
        g, [](const Eigen::VectorXd& x) { return x(0) * x(1); },
        [](const Eigen::VectorXd& x) {
            Eigen::VectorXd grad(3);
            grad << x(1), x(0), 0.0;
            return grad;
        },
        dir, Eigen::VectorXd::Zero(3), 0.0);
    // eigen-expansion oracle: F'' = (2 pi)^{-1} e^{-1} (mu_2 - 2) int f^2 dmu,
    // mu_2 = 3 on S^2(sqrt 2), and int (x1 x2)^2 dmu = Area * r^4 / 15
    const double mu2 = 3.0;
    const double f2 = 8.0 * M_PI * 4.0 / 15.0;
    const double expected = std::exp(-1.0) / (2.0 * M_PI) * (mu2 - 2.0) * f2;
    const double got = second_variation(g, var);
    REQUIRE(got == Catch::Approx(expected).epsilon(1e-9));
    REQUIRE(got > 0.0);
}

TEST_CASE("second variation refuses non-critical models") {
    auto g = build_grid(make_sphere(2, 1, 1.0), 32);
    const auto var = random_variation(g, 5u);
    REQUIRE_THROWS_AS(second_variation(g, var), NotACriticalPoint);
}

namespace {
// generic non-critical center, offset in every ambient direction, so the
// first variation is order one and the relative discrepancy is meaningful
CenterScale generic_center(int amb) {
    CenterScale cs{Eigen::VectorXd::Zero(amb), 0.55};
    for (int c = 0; c < amb; ++c) cs.x0(c) = 0.1 + 0.07 * c;
    return cs;
}
}  // namespace

TEST_CASE("finite differences validate the analytic variations") {
    SECTION("sphere(2,1), random V with (y,h)") {
        auto g = build_grid(make_sphere(2, 1), 64);
        auto var = random_variation(g, 42u, false);
        var.y = Eigen::VectorXd::Zero(3);
        var.y(0) = 0.1;
        var.h = 0.05;
        const auto first = finite_difference_variation(g, var, generic_center(3));
        REQUIRE(first.discrepancy_first <= 1e-6);
        const auto second = finite_difference_variation(g, var, default_center(3));
        REQUIRE(second.discrepancy_second <= 1e-4);
    }
    SECTION("cylinder(1,2,1), cutoff coordinate times normal") {
        auto g = build_grid(make_cylinder(1, 2, 1), 96, 8.0, {96, 48});
        Eigen::VectorXd dir = principal_direction(g);
        auto var = scalar_field_variation(
            g, [](const Eigen::VectorXd& x) { return x(2); },
            [](const Eigen::VectorXd& x) {
                Eigen::VectorXd grad = Eigen::VectorXd::Zero(3);
                grad(2) = 1.0;
                return grad;
            },
            dir, Eigen::VectorXd::Zero(3), 0.0, CutoffSpec{4.0, 5.0});
        const auto first = finite_difference_variation(g, var, generic_center(3));
        REQUIRE(first.discrepancy_first <= 1e-5);
        const auto second = finite_difference_variation(g, var, default_center(3));
        REQUIRE(second.discrepancy_second <= 1e-3);
    }
    SECTION("plane(2,1), Gaussian bump times normal") {
        auto g = build_grid(make_plane(2, 1), 64);
        Eigen::VectorXd dir = principal_direction(g);
        auto var = scalar_field_variation(
            g, [](const Eigen::VectorXd& x) { return std::exp(-0.25 * x.squaredNorm()); },
            [](const Eigen::VectorXd& x) {
                return Eigen::VectorXd(-0.5 * std::exp(-0.25 * x.squaredNorm()) * x);
            },
            dir, Eigen::VectorXd::Zero(3), 0.0);
        const auto first = finite_difference_variation(g, var, generic_center(3));
        REQUIRE(first.discrepancy_first <= 1e-5);
        const auto second = finite_difference_variation(g, var, default_center(3));
        REQUIRE(second.discrepancy_second <= 1e-5);
    }
}

TEST_CASE("raw finite differences converge at second order") {
    auto g = build_grid(make_sphere(2, 1), 48);
    const auto var = random_variation(g, 314u);
    const double exact = second_variation(g, var);
    detail::DeformedFamily F(g, var, default_center(3));
    auto raw3 = [&](double s) { return (F(s) - 2.0 * F(0.0) + F(-s)) / (s * s); };
    const double e1 = std::abs(raw3(4e-2) - exact);
    const double e2 = std::abs(raw3(2e-2) - exact);
    const double slope = std::log2(e1 / e2);
    REQUIRE(slope >= 1.8);
}

TEST_CASE("degenerating deformations raise ImmersionLost") {
    auto g = build_grid(make_sphere(1, 1), 32);
    auto var = random_variation(g, 8u);
    var.h = -100.0;  // drives t0 negative within the stencil
    REQUIRE_THROWS_AS(finite_difference_variation(g, var, default_center(2)), ImmersionLost);
}

TEST_CASE("cutoff support is honored and validated") {
    auto g = build_grid(make_cylinder(1, 2, 1), 64);
    Eigen::VectorXd dir = principal_direction(g);
    auto var = scalar_field_variation(
        g, [](const Eigen::VectorXd&) { return 1.0; },
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }, dir,
        Eigen::VectorXd::Zero(3), 0.0, CutoffSpec{3.0, 4.0});
    for (int i = 0; i < g.nodes(); ++i) {
        const double s = g.u[i](1);
        if (std::abs(s) >= 4.0) REQUIRE(var.comp.row(i).cwiseAbs().maxCoeff() == 0.0);
        if (std::abs(s) <= 3.0) REQUIRE(var.comp(i, 0) == dir(0));
    }
    REQUIRE_THROWS_AS(
        scalar_field_variation(
            g, [](const Eigen::VectorXd&) { return 1.0; },
            [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }, dir,
            Eigen::VectorXd::Zero(3), 0.0, CutoffSpec{8.0, 9.0}),
        TruncationTooSmall);
}
