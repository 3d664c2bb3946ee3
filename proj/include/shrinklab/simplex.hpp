#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace shrinklab {

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead downhill simplex with the standard coefficients.  Stops when
/// the function spread over the simplex drops below ftol or after max_iter
/// sweeps.  Fully deterministic.
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                 int max_iter = 2000, double ftol = 1e-13) {
    const int n = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sig = 0.5;

    std::vector<Eigen::VectorXd> x(n + 1, x0);
    for (int i = 0; i < n; ++i) x[i + 1](i) += step(i);
    std::vector<double> fx(n + 1);
    int evals = 0;
    for (int i = 0; i <= n; ++i) {
        fx[i] = f(x[i]);
        ++evals;
    }

    std::vector<int> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    bool converged = false;

    for (int it = 0; it < max_iter; ++it) {
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        if (std::abs(fx[idx[n]] - fx[idx[0]]) <=
            ftol * (std::abs(fx[idx[0]]) + std::abs(fx[idx[n]]) + 1e-300)) {
            converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += x[idx[i]];
        centroid /= double(n);

        const Eigen::VectorXd& worst = x[idx[n]];
        Eigen::VectorXd xr = centroid + alpha * (centroid - worst);
        const double fr = f(xr);
        ++evals;

        if (fr < fx[idx[0]]) {
            Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                x[idx[n]] = xe;
                fx[idx[n]] = fe;
            } else {
                x[idx[n]] = xr;
                fx[idx[n]] = fr;
            }
            continue;
        }
        if (fr < fx[idx[n - 1]]) {
            x[idx[n]] = xr;
            fx[idx[n]] = fr;
            continue;
        }
        Eigen::VectorXd xc = (fr < fx[idx[n]]) ? centroid + rho * (xr - centroid)
                                               : centroid + rho * (worst - centroid);
        const double fc = f(xc);
        ++evals;
        if (fc < std::min(fr, fx[idx[n]])) {
            x[idx[n]] = xc;
            fx[idx[n]] = fc;
            continue;
        }
        // shrink toward best
        for (int i = 1; i <= n; ++i) {
            x[idx[i]] = x[idx[0]] + sig * (x[idx[i]] - x[idx[0]]);
            fx[idx[i]] = f(x[idx[i]]);
            ++evals;
        }
    }

    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    SimplexResult r;
    r.x = x[idx[0]];
    r.value = fx[idx[0]];
    r.evaluations = evals;
    r.converged = converged;
    return r;
}

}  // namespace shrinklab
