#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "shrinklab/grid.hpp"
#include "shrinklab/model_checks.hpp"

using namespace shrinklab;

TEST_CASE("grid weights are nonnegative and measure sums to the volume") {
    auto g = build_grid(make_sphere(1, 1), 64);
    REQUIRE(g.base_w.minCoeff() >= 0.0);
    REQUIRE(g.measure_w.sum() == Catch::Approx(2.0 * M_PI).epsilon(1e-12));

    auto g2 = build_grid(make_sphere(2, 1), 64);
    REQUIRE(g2.base_w.minCoeff() >= 0.0);
    REQUIRE(g2.measure_w.sum() == Catch::Approx(8.0 * M_PI).epsilon(1e-10));

    auto g3 = build_grid(make_sphere(3, 1), 48);
    REQUIRE(g3.base_w.minCoeff() >= 0.0);
    // Vol(S^3(r)) = 2 pi^2 r^3
    REQUIRE(g3.measure_w.sum() ==
            Catch::Approx(2.0 * M_PI * M_PI * std::pow(3.0, 1.5)).epsilon(1e-10));
}

TEST_CASE("Gaussian normalization on the plane is exact") {
    auto g = build_grid(make_plane(1, 1), 128);  // 64 Euclidean nodes
    REQUIRE(g.shape[0] == 64);
    REQUIRE(integrate(g, Eigen::VectorXd::Ones(g.nodes())) ==
            Catch::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));

    auto g2 = build_grid(make_plane(2, 1), 64);
    REQUIRE(integrate(g2, Eigen::VectorXd::Ones(g2.nodes())) ==
            Catch::Approx(2.0 * M_PI).epsilon(1e-12));
}

TEST_CASE("weighted volumes of compact factors") {
    // closed form 2*pi*e^{-1/2}; also cross-checked by a rule at 10x resolution
    auto g = build_grid(make_sphere(1, 1), 128);
    const double v = integrate(g, Eigen::VectorXd::Ones(g.nodes()));
    REQUIRE(v == Catch::Approx(2.0 * M_PI * std::exp(-0.5)).epsilon(1e-12));
    auto g10 = build_grid(make_sphere(1, 1), 1280);
    REQUIRE(v == Catch::Approx(integrate(g10, Eigen::VectorXd::Ones(g10.nodes())))
                     .epsilon(1e-12));

    // product: cylinder = circle x Gaussian line
    auto gc = build_grid(make_cylinder(1, 2, 1), 128, 8.0, {128, 64});
    REQUIRE(integrate(gc, Eigen::VectorXd::Ones(gc.nodes())) ==
            Catch::Approx(2.0 * M_PI * std::exp(-0.5) * std::sqrt(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("axis derivatives are spectrally accurate, including across poles") {
    SECTION("sphere: odd and even harmonics") {
        auto g = build_grid(make_sphere(2, 1), 32);
        const int nn = g.nodes();
        Eigen::VectorXd f1(nn), f2(nn), d1t(nn), d2t(nn), d2p(nn);
        for (int i = 0; i < nn; ++i) {
            const double th = g.u[i](0), ph = g.u[i](1);
            f1(i) = std::cos(th);                 // zonal
            f2(i) = std::sin(th) * std::cos(ph);  // crosses the pole with a sign flip
            d1t(i) = -std::sin(th);
            d2t(i) = std::cos(th) * std::cos(ph);
            d2p(i) = -std::sin(th) * std::sin(ph);
        }
        REQUIRE((axis_derivative(g, 0, f1) - d1t).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE((axis_derivative(g, 0, f2) - d2t).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE((axis_derivative(g, 1, f2) - d2p).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("Euclidean factor: polynomial exactness away from the far tail") {
        auto g = build_grid(make_plane(1, 1), 48);
        Eigen::VectorXd f(g.nodes()), df(g.nodes());
        for (int i = 0; i < g.nodes(); ++i) {
            const double s = g.u[i](0);
            f(i) = s * s * s - 2.0 * s;
            df(i) = 3.0 * s * s - 2.0;
        }
        const Eigen::VectorXd d = axis_derivative(g, 0, f);
        // rows at far-out nodes amplify roundoff; weighted norms suppress them
        double inner_err = 0.0, weighted_err = 0.0;
        for (int i = 0; i < g.nodes(); ++i) {
            const double e = std::abs(d(i) - df(i));
            if (std::abs(g.u[i](0)) < 5.0) inner_err = std::max(inner_err, e);
            weighted_err += e * e * g.gauss_w(i);
        }
        REQUIRE(inner_err < 1e-10);
        REQUIRE(std::sqrt(weighted_err) < 1e-9);
    }
    SECTION("polar differentiation is exact per azimuthal mode") {
        auto g = build_grid(make_sphere(2, 1), 32);
        const int nn = g.nodes();
        // mixed low harmonics with m = 0, 1, 2
        Eigen::VectorXd f(nn), dt(nn);
        for (int i = 0; i < nn; ++i) {
            const double th = g.u[i](0), ph = g.u[i](1);
            f(i) = 0.3 * std::cos(th) + std::sin(th) * std::sin(ph) +
                   0.7 * std::sin(th) * std::sin(th) * std::cos(2.0 * ph);
            dt(i) = -0.3 * std::sin(th) + std::cos(th) * std::sin(ph) +
                    1.4 * std::sin(th) * std::cos(th) * std::cos(2.0 * ph);
        }
        REQUIRE((axis_derivative(g, 0, f) - dt).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("integrate is linear and rejects bad input") {
    auto g = build_grid(make_sphere(1, 1), 32);
    Rng rng(3u);
    Eigen::VectorXd f(g.nodes()), h(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) {
        f(i) = rng.normal();
        h(i) = rng.normal();
    }
    const double a = 0.7, b = -1.3;
    REQUIRE(integrate(g, a * f + b * h) ==
            Catch::Approx(a * integrate(g, f) + b * integrate(g, h)).margin(1e-12));
    REQUIRE(weighted_inner(g, f, h) == Catch::Approx(weighted_inner(g, h, f)));
    REQUIRE(weighted_inner(g, f, f) > 0.0);

    Eigen::VectorXd badf = f;
    badf(3) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(integrate(g, badf), NonFiniteValue);

    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(g.nodes(), 1);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(g.nodes(), 2);
    REQUIRE_THROWS_AS(weighted_inner_fields(g, V, W), DimensionMismatch);
}

TEST_CASE("first-moment and direction identities") {
    auto g = build_grid(make_sphere(2, 1), 64);
    const int nn = g.nodes();

    // int <x,omega> w = 0 for constant omega
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd f(nn);
        for (int i = 0; i < nn; ++i) f(i) = g.geom[i].x(c);
        REQUIRE(std::abs(integrate(g, f)) < 1e-12);
    }
    // int <x,omega>^2 w = int |omega^T|^2 w
    Eigen::VectorXd omega(3);
    omega << 0.3, -1.1, 0.7;
    Eigen::VectorXd lhs(nn), rhs(nn);
    for (int i = 0; i < nn; ++i) {
        lhs(i) = std::pow(g.geom[i].x.dot(omega), 2);
        rhs(i) = g.geom[i].tangent_part(omega).squaredNorm();
    }
    REQUIRE(integrate(g, lhs) == Catch::Approx(integrate(g, rhs)).epsilon(1e-10));
}

TEST_CASE("weighted identities hold on every catalog shrinker") {
    for (const auto& model :
         {make_sphere(1, 1), make_sphere(2, 1), make_sphere(2, 2), make_sphere(3, 1),
          make_cylinder(1, 2, 1), make_cylinder(2, 3, 1), make_clifford_torus(),
          make_plane(2, 1)}) {
        auto g = build_grid(model, 128);
        const auto rep = verify_weighted_identities(g);
        INFO(model.name);
        REQUIRE(rep.max_residual() <= 1e-8);
    }
}

TEST_CASE("weighted identities fail on the wrong-radius sphere") {
    auto g = build_grid(make_sphere(2, 1, 1.0), 64);
    const auto rep = verify_weighted_identities(g);
    REQUIRE(rep.max_residual() > 0.1);
}

TEST_CASE("corollary residual on the plane via the 1D moment oracle") {
    // int [(|x|^2-2)^2 - 4] e^{-|x|^2/2} over R^2 should vanish; cross-check
    // the radial moments with an independent 1D quadrature
    const double m0 = oracles::gauss_moment([](double) { return 1.0; });
    const double m2 = oracles::gauss_moment([](double s) { return s * s; });
    const double m4 = oracles::gauss_moment([](double s) { return s * s * s * s; });
    // E[|x|^4] = E[s1^4] + 2 E[s1^2 s2^2] + E[s2^4], E[|x|^2] = 2 E[s^2]
    const double lhs = (m4 * m0 + 2.0 * m2 * m2 + m0 * m4) / (m0 * m0) -
                       4.0 * (2.0 * m2 / m0) + 4.0 - 4.0;
    REQUIRE(lhs == Catch::Approx(0.0).margin(1e-9));

    auto g = build_grid(make_plane(2, 1), 64);
    REQUIRE(verify_weighted_identities(g).r_corollary < 1e-10);
}

TEST_CASE("truncation robustness") {
    // Euclidean quadrature is Gauss-type in the full weight; declared
    // truncation affects cutoffs and Dirichlet spectra, not integrals
    auto g6 = build_grid(make_cylinder(1, 2, 1), 96, 6.0);
    auto g8 = build_grid(make_cylinder(1, 2, 1), 96, 8.0);
    const auto r6 = verify_weighted_identities(g6);
    const auto r8 = verify_weighted_identities(g8);
    const double v6 = integrate(g6, Eigen::VectorXd::Ones(g6.nodes()));
    const double v8 = integrate(g8, Eigen::VectorXd::Ones(g8.nodes()));
    REQUIRE(std::abs(v6 - v8) / std::abs(v8) < 1e-9);
    REQUIRE(std::abs(r6.max_residual() - r8.max_residual()) < 1e-9);
}

TEST_CASE("refinement convergence of the weighted volume") {
    for (const auto& model : {make_sphere(2, 1), make_cylinder(1, 2, 1)}) {
        auto g1 = build_grid(model, 64);
        auto g2 = build_grid(model, 128);
        const double v1 = integrate(g1, Eigen::VectorXd::Ones(g1.nodes()));
        const double v2 = integrate(g2, Eigen::VectorXd::Ones(g2.nodes()));
        REQUIRE(std::abs(v1 - v2) / std::abs(v2) < 1e-10);
    }
}

TEST_CASE("grid preconditions") {
    REQUIRE_THROWS_AS(build_grid(make_sphere(1, 1), 4), ConfigError);
    REQUIRE_THROWS_AS(build_grid(make_sphere(1, 1), 64, 4.0), ConfigError);
    REQUIRE_THROWS_AS(build_grid(make_sphere(1, 1), 64, 8.0, {16, 16}), ConfigError);
    // noncompact custom chart without the growth assertion
    auto chart = std::make_shared<PlaneChart>(1, 1);
    auto model = make_custom(chart, "raw-line", false, /*polynomial_growth=*/false);
    REQUIRE_THROWS_AS(build_grid(model, 32), UnsupportedDomain);
}
