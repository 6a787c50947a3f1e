#include "specfit/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "specfit/errors.hpp"

namespace specfit {

double lorentzian(double x, double center, double gamma) {
    if (!(gamma > 0)) throw DomainError("lorentzian: gamma must be positive");
    double d = x - center;
    return gamma / (std::numbers::pi * (d * d + gamma * gamma));
}

std::vector<FlatMultiplet> flatten(const TemplateCatalog& cat) {
    std::vector<FlatMultiplet> out;
    for (std::size_t m = 0; m < cat.metabolites.size(); ++m)
        for (const auto& mu : cat.metabolites[m].multiplets)
            out.push_back({static_cast<int>(m), &mu});
    return out;
}

void add_multiplet(const Multiplet& mult, double sigma, double gamma,
                   std::span<const double> grid, double* out) {
    if (!(gamma > 0)) throw DomainError("render: gamma must be positive");
    if (std::fabs(sigma) > mult.shift_bound)
        throw ShiftBoundError("shift " + std::to_string(sigma) + " exceeds bound " +
                              std::to_string(mult.shift_bound) + " for multiplet " + mult.id);
    const double radius = kLineTruncationRadius * gamma;
    const double inv_pi = 1.0 / std::numbers::pi;
    const double g2 = gamma * gamma;
    for (const auto& peak : mult.peaks) {
        const double c = mult.center_ppm + sigma + peak.offset_ppm;
        auto first = std::lower_bound(grid.begin(), grid.end(), c - radius);
        auto last = std::upper_bound(grid.begin(), grid.end(), c + radius);
        const double scale = peak.rel_area * gamma * inv_pi;
        for (auto it = first; it != last; ++it) {
            double d = *it - c;
            out[it - grid.begin()] += scale / (d * d + g2);
        }
    }
}

std::vector<double> render_multiplet(const Multiplet& mult, double sigma, double gamma,
                                     std::span<const double> grid) {
    std::vector<double> out(grid.size(), 0.0);
    add_multiplet(mult, sigma, gamma, grid, out.data());
    return out;
}

namespace {

Eigen::MatrixXd design_matrix_impl(const TemplateCatalog& cat, std::span<const double> sigma,
                                   std::span<const double> gamma, std::span<const double> grid,
                                   bool parallel) {
    std::vector<FlatMultiplet> flat = flatten(cat);
    if (sigma.size() != flat.size())
        throw DomainError("design matrix: sigma length != multiplet count");
    if (gamma.size() != cat.metabolites.size())
        throw DomainError("design matrix: gamma length != metabolite count");

    // Validate up front: add_multiplet must not throw inside the parallel loop.
    for (std::size_t u = 0; u < flat.size(); ++u) {
        if (!(gamma[flat[u].metabolite] > 0))
            throw DomainError("design matrix: gamma must be positive");
        if (std::fabs(sigma[u]) > flat[u].mult->shift_bound)
            throw ShiftBoundError("design matrix: shift exceeds bound for multiplet " +
                                  flat[u].mult->id);
    }

    const int n = static_cast<int>(grid.size());
    const int M = cat.n_metabolites();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, M);

    // Index multiplets by column so each column is filled by one task.
    std::vector<std::vector<int>> by_col(M);
    for (std::size_t u = 0; u < flat.size(); ++u) by_col[flat[u].metabolite].push_back(static_cast<int>(u));

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int m = 0; m < M; ++m) {
        for (int u : by_col[m])
            add_multiplet(*flat[u].mult, sigma[u], gamma[m], grid, T.col(m).data());
    }
    return T;
}

}  // namespace

Eigen::MatrixXd build_design_matrix(const TemplateCatalog& cat, std::span<const double> sigma,
                                    std::span<const double> gamma, std::span<const double> grid) {
    return design_matrix_impl(cat, sigma, gamma, grid, true);
}

Eigen::MatrixXd build_design_matrix_serial(const TemplateCatalog& cat,
                                           std::span<const double> sigma,
                                           std::span<const double> gamma,
                                           std::span<const double> grid) {
    return design_matrix_impl(cat, sigma, gamma, grid, false);
}

}  // namespace specfit
