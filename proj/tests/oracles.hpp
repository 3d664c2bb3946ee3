#pragma once

// Independent oracles used to freeze expected values.  Everything here is
// deliberately primitive (1D quadrature, closed forms, dense scans) and never
// calls into the code paths it is used to check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

/// Composite Simpson on [a,b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// int_{-inf}^{inf} f(s) e^{-s^2/2} ds by wide Simpson.
inline double gauss_moment(const std::function<double(double)>& f, double half_width = 12.0,
                           int n = 20000) {
    return simpson([&](double s) { return f(s) * std::exp(-0.5 * s * s); }, -half_width,
                   half_width, n);
}

/// Laplacian eigenvalue of degree-l spherical harmonics on S^m(r): l(l+m-1)/r^2.
inline double sphere_laplace_eig(int l, int m, double r) {
    return l * (l + m - 1.0) / (r * r);
}

/// Multiplicity of the degree-l eigenspace on S^m.
inline int sphere_eig_multiplicity(int l, int m) {
    if (l == 0) return 1;
    auto binom = [](int a, int b) {
        if (b < 0 || b > a) return 0.0;
        double r = 1.0;
        for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
        return r;
    };
    return static_cast<int>(std::lround(binom(m + l, m) - binom(m + l - 2, m)));
}

/// Lowest `count` eigenvalues of the form I on the round shrinker S^n(sqrt n)
/// with p = 1: values mu_l - 2 with mu_l = (l^2 + (n-1) l)/n, each repeated
/// with the spherical-harmonic multiplicity.
inline std::vector<double> sphere_I_spectrum(int n, int count) {
    std::vector<double> eig;
    for (int l = 0; static_cast<int>(eig.size()) < count; ++l) {
        const double mu = (double(l) * l + (n - 1.0) * l) / n;
        const int mult = sphere_eig_multiplicity(l, n);
        for (int j = 0; j < mult && static_cast<int>(eig.size()) < count; ++j)
            eig.push_back(mu - 2.0);
    }
    return eig;
}

/// Lowest `count` I-eigenvalues on the plane R^n, p = 1 (Hermite spectrum):
/// values k_1 + ... + k_n - 1.
inline std::vector<double> plane_I_spectrum(int n, int count) {
    std::vector<double> eig;
    for (int total = 0; static_cast<int>(eig.size()) < count; ++total) {
        // number of multi-indices with sum == total is binom(total+n-1, n-1)
        double mult = 1.0;
        for (int i = 1; i < n; ++i) mult = mult * (total + i) / i;
        for (int j = 0; j < static_cast<int>(std::lround(mult)) &&
                        static_cast<int>(eig.size()) < count;
             ++j)
            eig.push_back(total - 1.0);
    }
    return eig;
}

/// Lowest `count` I-eigenvalues of L_nu on S^k(sqrt k) x R^{n-k}:
/// values (sphere harmonic mu_l) + sum k_i - 2.
inline std::vector<double> cylinder_Lnu_spectrum(int k, int n, int count) {
    std::vector<double> eig;
    const int m = n - k;
    for (int bound = 0; static_cast<int>(eig.size()) < count * 4; ++bound) {
        for (int l = 0; l <= bound; ++l) {
            const int h = bound - l;  // total Hermite degree
            const double mu_l = sphere_laplace_eig(l, k, std::sqrt(double(k)));
            double hmult = 1.0;
            for (int i = 1; i < m; ++i) hmult = hmult * (h + i) / i;
            const int mult = sphere_eig_multiplicity(l, k) * static_cast<int>(std::lround(hmult));
            for (int j = 0; j < mult; ++j) eig.push_back(mu_l + h - 2.0);
        }
    }
    std::sort(eig.begin(), eig.end());
    eig.resize(count);
    return eig;
}

}  // namespace oracles
