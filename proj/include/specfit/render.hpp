#ifndef SPECFIT_RENDER_HPP_
#define SPECFIT_RENDER_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "specfit/catalog.hpp"

namespace specfit {

// Evaluation of each Lorentzian line is confined to +/- this many
// half-widths around its center; outside, the tail is dropped.
inline constexpr double kLineTruncationRadius = 500.0;

// Unit-area Lorentzian (gamma = half width at half maximum).
double lorentzian(double x, double center, double gamma);

// Flattened multiplet list in deterministic catalog order; sigma vectors
// are indexed this way, one entry per multiplet.
struct FlatMultiplet {
    int metabolite = 0;  // column index in the design matrix
    const Multiplet* mult = nullptr;
};
std::vector<FlatMultiplet> flatten(const TemplateCatalog& cat);

// Adds the multiplet shape, shifted by sigma and with line half-width
// gamma, onto out[] over the ascending grid. Throws DomainError for
// gamma <= 0 and ShiftBoundError for |sigma| > shift_bound.
void add_multiplet(const Multiplet& mult, double sigma, double gamma,
                   std::span<const double> grid, double* out);

std::vector<double> render_multiplet(const Multiplet& mult, double sigma, double gamma,
                                     std::span<const double> grid);

// n x M design matrix; column m sums the multiplets of metabolite m with
// per-multiplet shifts sigma (flattened order) and per-metabolite widths
// gamma. The parallel version splits work over columns.
Eigen::MatrixXd build_design_matrix(const TemplateCatalog& cat, std::span<const double> sigma,
                                    std::span<const double> gamma, std::span<const double> grid);
Eigen::MatrixXd build_design_matrix_serial(const TemplateCatalog& cat,
                                           std::span<const double> sigma,
                                           std::span<const double> gamma,
                                           std::span<const double> grid);

}  // namespace specfit

#endif  // SPECFIT_RENDER_HPP_
