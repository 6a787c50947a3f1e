#ifndef SPECFIT_MODEL_HPP_
#define SPECFIT_MODEL_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "specfit/catalog.hpp"
#include "specfit/render.hpp"
#include "specfit/spectrum.hpp"
#include "specfit/wavelet.hpp"

namespace specfit {

// Priors and fixed model constants. NaN fields are resolved from the data
// by resolve_hyperparameters; everything is overridable.
struct Hyperparameters {
    double a = 1e-3;  // lambda ~ Gamma(a, b/2)
    double b = 1e-3;
    double c = 1e-3;  // psi_i ~ Gamma(c, d/2)
    double d = 1e-3;

    double h = NAN;         // floor of the tau truncation; auto -0.01 * max|y|
    double tau_mean = NAN;  // auto h
    double tau_sd = NAN;    // auto |h|

    double beta_mean = 0.0;
    double beta_sd = NAN;  // auto 10x a crude integral estimate of the largest multiplet

    double sigma_sd = NAN;  // auto shift_bound/2 per multiplet

    double mu0 = std::log(0.0015);  // prior mean of log half-width (ppm)
    double s_mu = 1.0;
    double s_v = 0.2;

    double burnin_temp0 = 16.0;    // initial likelihood temperature
    double psi_penalty0 = 100.0;   // initial wavelet-precision inflation

    bool resolved() const {
        return !(std::isnan(h) || std::isnan(tau_mean) || std::isnan(tau_sd) ||
                 std::isnan(beta_sd));
    }
};

Hyperparameters resolve_hyperparameters(Hyperparameters hp, const Spectrum& spec,
                                        const TemplateCatalog& cat);

// Everything a chain needs that does not change between sweeps. The
// spectrum/catalog are borrowed; callers keep them alive. Multiplets whose
// lines all fall outside the axis are dropped from `mult`.
struct FitContext {
    const Spectrum* spec = nullptr;
    const TemplateCatalog* cat = nullptr;
    std::vector<FlatMultiplet> mult;     // in-window multiplets, catalog order
    SegmentedPlan plan;                  // empty (n_coeff 0) when wavelet disabled
    bool use_wavelet = true;
    Hyperparameters hp;

    int n() const { return spec ? spec->size() : 0; }
    int n_metabolites() const { return cat ? cat->n_metabolites() : 0; }
    int n_mult() const { return static_cast<int>(mult.size()); }
    int n_coeff() const { return use_wavelet ? plan.n_coeff() : 0; }

    double sigma_prior_sd(int u) const {
        return std::isnan(hp.sigma_sd) ? mult[u].mult->shift_bound / 2.0 : hp.sigma_sd;
    }

    // A coefficient whose basis column is identically zero on the observed
    // window (support entirely inside the reflection padding) cannot affect
    // the fit. It is excluded from the model instead of sampled: its
    // conditionals reduce to a scale-mixture prior whose marginal is a
    // Student t with 2c degrees of freedom, which wanders over hundreds of
    // orders of magnitude and eventually overflows.
    bool coeff_active(int i) const { return plan.pnorm2(i) > 0.0; }
    double gamma_of(int m, double mu, const Eigen::VectorXd& v) const {
        return std::exp(mu + v[m]);
    }
};

// wavelet_levels 0 = default depth. Throws ConfigError when a metabolite
// has no multiplet on the axis.
FitContext make_fit_context(const Spectrum& spec, const TemplateCatalog& cat,
                            const Hyperparameters& hp, bool use_wavelet = true,
                            int wavelet_levels = 0);

struct ModelState {
    Eigen::VectorXd beta;   // per metabolite, >= 0
    Eigen::VectorXd sigma;  // per multiplet, |sigma_u| <= bound
    double mu = 0.0;        // global log half-width level
    Eigen::VectorXd v;      // per-metabolite log-width offsets
    double lambda = 1.0;    // noise precision
    Eigen::VectorXd theta;  // wavelet coefficients, theta_i >= tau_i
    Eigen::VectorXd psi;    // per-coefficient precision factors
    Eigen::VectorXd tau;    // per-coefficient truncation points, >= h
};

// Deterministic model components (reference path; the sampler keeps
// incremental caches instead of calling these per move).
std::vector<double> catalogued_component(const ModelState& s, const FitContext& ctx);
std::vector<double> wavelet_component(const ModelState& s, const FitContext& ctx);
std::vector<double> residual_signal(const ModelState& s, const FitContext& ctx);

// Tempered Gaussian log likelihood over the fitted points.
double log_likelihood(const ModelState& s, const FitContext& ctx, double temp = 1.0);

// Joint log prior including the penalty-inflated truncated-normal wavelet
// prior; -inf outside the support.
double log_prior(const ModelState& s, const FitContext& ctx, double penalty = 1.0);

struct GammaParams {
    double shape = 0.0;
    double rate = 0.0;
};

// Conjugate Gamma pieces of the lambda conditional, ignoring the
// truncated-normal normalizers (those enter as an MH correction).
GammaParams lambda_conditional(const ModelState& s, const FitContext& ctx, double temp = 1.0,
                               double penalty = 1.0);
GammaParams psi_conditional(const ModelState& s, const FitContext& ctx, int i,
                            double penalty = 1.0);

struct TruncGaussian {
    double mean = 0.0;
    double sd = 1.0;
    double lo = 0.0;
    double hi = 0.0;
};

TruncGaussian tau_conditional(const ModelState& s, const FitContext& ctx, int i);

// Joint Gaussian full conditional of beta given everything else: mean
// solves the prior-regularized normal equations; support is the positive
// orthant componentwise.
struct BetaBlockConditional {
    Eigen::MatrixXd precision;  // M x M
    Eigen::VectorXd mean;       // M
};
BetaBlockConditional beta_block_conditional(const ModelState& s, const FitContext& ctx,
                                            double temp = 1.0);

// Exact univariate full conditionals of the linear block.
TruncGaussian beta_conditional(const ModelState& s, const FitContext& ctx, int m,
                               double temp = 1.0);
TruncGaussian theta_conditional(const ModelState& s, const FitContext& ctx, int i,
                                double temp = 1.0, double penalty = 1.0);

// Log target (tempered likelihood + prior term) as a function of one
// proposed coordinate, holding the rest of the state fixed. Reference
// implementations used by tests; -inf outside support.
double sigma_log_target(const ModelState& s, const FitContext& ctx, int u, double sigma_prop,
                        double temp = 1.0);
double width_log_target(const ModelState& s, const FitContext& ctx, int m, double v_prop,
                        double temp = 1.0);
double mu_log_target(const ModelState& s, const FitContext& ctx, double mu_prop,
                     double temp = 1.0);

// Sum over active coefficients of log SF(tau_i * sqrt(penalty * lambda *
// psi_i)): the log of the product of truncation normalizers that the Gamma
// proposals must correct for.
double theta_trunc_log_normalizer(const FitContext& ctx, const Eigen::VectorXd& tau,
                                  const Eigen::VectorXd& psi, double lambda, double penalty);

}  // namespace specfit

#endif  // SPECFIT_MODEL_HPP_
