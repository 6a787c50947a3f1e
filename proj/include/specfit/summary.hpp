#ifndef SPECFIT_SUMMARY_HPP_
#define SPECFIT_SUMMARY_HPP_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "specfit/sampler.hpp"

namespace specfit {

struct QuantileStats {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double q975 = 0.0;
};

// Sample quantile by linear interpolation of order statistics. p in [0,1].
double quantile(std::span<const double> sorted, double p);
QuantileStats compute_stats(std::span<const double> samples);

struct PosteriorSummary {
    std::vector<std::string> metabolites;
    std::vector<QuantileStats> beta;    // per metabolite
    std::vector<QuantileStats> gamma;   // per metabolite, exp(mu + v_m)
    std::vector<double> beta_split_z;   // split-half mean comparison per metabolite

    std::vector<std::string> multiplet_labels;
    std::vector<double> multiplet_centers;
    std::vector<QuantileStats> sigma;   // per multiplet

    QuantileStats lambda;
    std::map<std::string, double> acceptance;  // move -> rate
};

// Statistics over the kept draws; DomainError on an empty chain.
PosteriorSummary summarize(const ChainResult& chain);

struct FitDecomposition {
    std::vector<double> ppm;
    std::vector<double> observed;
    std::vector<double> total;        // catalogued + wavelet, pointwise
    std::vector<double> catalogued;
    std::vector<double> wavelet;
    std::vector<double> residual;     // observed - total
};

// Posterior-mean decomposition. Uses the running means recorded by the
// sampler; falls back to rebuilding from recorded theta (+ beta/sigma/v/mu
// draws) when means are absent. ConfigError when neither is available.
FitDecomposition reconstruct_fit(const ChainResult& chain, const Spectrum& spec,
                                 const TemplateCatalog& cat);

// Gaussian KDE at Silverman's bandwidth evaluated on grid. DomainError on
// fewer than 2 samples or zero bandwidth.
std::vector<double> density_estimate(std::span<const double> samples,
                                     std::span<const double> grid);

// Number of strict local maxima of a sampled curve (plateaus count once).
int count_local_maxima(std::span<const double> values);

// Number of local maxima with topographic prominence >= min_prominence:
// a peak must rise that far above the highest saddle separating it from a
// taller peak (the global maximum is measured against the curve minimum).
// Filters KDE sampling wiggles that count_local_maxima would report.
int count_prominent_maxima(std::span<const double> values, double min_prominence);

// Trapezoidal integration around each metabolite's largest-proton-count
// in-window multiplet: integral of y over [center - win_pad, center +
// win_pad] divided by proton count. EmptyWindowError when a window misses
// the axis.
std::vector<double> integrate_baseline(const Spectrum& spec, const TemplateCatalog& cat,
                                       double win_pad = 0.02);

struct ErrorStats {
    double scale = 1.0;              // least-squares alignment multiplier
    double rmse = 0.0;               // of scaled estimates vs truth
    std::vector<double> abs_err;     // per entry, after scaling
    std::vector<double> rel_err;     // per entry; NaN when truth is 0
    double mean_rel_err = 0.0;       // over finite entries
};

// Scale-aligned error report: estimates are multiplied by the scalar that
// minimizes squared error to truth before comparison. DomainError on
// length mismatch or empty input.
ErrorStats compare_errors(std::span<const double> estimate, std::span<const double> truth);

// Writes summary.csv, sigma_summary.csv, fit.csv, beta_samples.csv,
// sigma_samples.csv, diagnostics.csv and (when recorded) theta_samples.csv
// into dir, creating it if needed. All writes are atomic.
void write_fit_outputs(const std::filesystem::path& dir, const ChainResult& chain,
                       const Spectrum& spec, const TemplateCatalog& cat);

}  // namespace specfit

#endif  // SPECFIT_SUMMARY_HPP_
