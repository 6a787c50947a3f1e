#ifndef SPECFIT_SAMPLER_HPP_
#define SPECFIT_SAMPLER_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specfit/model.hpp"
#include "specfit/rng.hpp"

namespace specfit {

struct SamplerConfig {
    int burnin_iters = 4000;
    int sample_iters = 2000;
    int thin = 1;
    std::uint64_t seed = 0;

    double target_accept = 0.44;
    int adapt_window = 50;

    // Initial random-walk steps; sigma_step0 = 0 means shift_bound/5.
    double sigma_step0 = 0.0;
    double v_step0 = 0.2;
    double mu_step0 = 0.1;

    bool use_wavelet = true;
    int wavelet_levels = 0;  // 0 = default depth

    // Extra padding (ppm) around a multiplet's extent when selecting the
    // wavelet coefficients refreshed jointly with its shift.
    double mask_pad_ppm = 0.05;

    bool record_theta = false;
    int progress_interval = 0;  // sweeps between stderr progress lines; 0 = quiet

    // Move switches; disabling a move freezes those coordinates.
    bool update_beta = true;
    bool update_theta = true;
    bool update_sigma = true;
    bool update_width = true;  // per-metabolite v_m and global mu
    bool update_lambda = true;
    bool update_psi = true;
    bool update_tau = true;
};

struct AcceptStat {
    long proposed = 0;
    long accepted = 0;
    double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct StepRecord {
    int iter = 0;
    std::string move;   // "sigma[u]", "v[m]", "mu"
    double step = 0.0;
    double window_rate = 0.0;
};

// Everything recorded from one chain.
struct ChainResult {
    std::string spectrum_id;
    std::vector<std::string> metabolite_names;
    std::vector<std::string> multiplet_labels;  // metabolite:multiplet
    std::vector<double> multiplet_centers;

    Eigen::MatrixXd beta;    // kept x M
    Eigen::MatrixXd sigma;   // kept x U
    Eigen::MatrixXd v;       // kept x M
    Eigen::VectorXd mu;      // kept
    Eigen::VectorXd lambda;  // kept
    Eigen::MatrixXd theta;   // kept x K when recorded, else 0 x 0
    Eigen::MatrixXd psi;     // recorded together with theta
    Eigen::MatrixXd tau;

    std::vector<double> ppm;        // fitted axis
    std::vector<double> observed;
    std::vector<double> mean_catalogued;  // posterior mean of T(sigma,gamma) beta
    std::vector<double> mean_wavelet;     // posterior mean of the wavelet component

    std::map<std::string, AcceptStat> acceptance;
    std::vector<StepRecord> step_history;
    std::vector<double> temperature_schedule;  // length burnin_iters
    std::vector<double> penalty_schedule;

    SamplerConfig config;
    int kept() const { return static_cast<int>(lambda.size()); }
};

// Nonnegative least squares by cyclic coordinate descent on the normal
// equations; runs `sweeps` full passes from beta = 0.
Eigen::VectorXd nnls_coordinate_descent(const Eigen::MatrixXd& T, const Eigen::VectorXd& y,
                                        int sweeps = 200);

// Deterministic starting point: NNLS amplitudes at nominal shifts/widths,
// lambda from a robust (median-based) noise estimate, psi = 1, tau = h.
ModelState init_state(const FitContext& ctx, Rng& rng);

// Geometric schedule from start down to exactly 1.0 at index len-1.
std::vector<double> geometric_schedule(double start, int len);

// Step-size adaptation rule applied every adapt_window sweeps of burn-in.
double adapted_step(double step, double rate, double target, int iter);

// One full chain. Exposed as a class so tests can drive single sweeps.
class GibbsSampler {
  public:
    GibbsSampler(const FitContext& ctx, const SamplerConfig& cfg);

    ModelState& state() { return state_; }
    const ModelState& state() const { return state_; }
    Rng& rng() { return rng_; }

    void initialize();                    // draw the starting state
    void set_state(const ModelState& s);  // tests: inject a state
    void sweep(int iter);                 // one full update cycle at iteration `iter`
    void adapt(int iter);                 // step-size update from window rates
    ChainResult run();                    // burn-in + sampling + recording

    double temperature(int iter) const;
    double penalty(int iter) const;

    // Residual cache, y - catalogued - wavelet; tests compare against the
    // reference residual_signal().
    const std::vector<double>& residual() const { return r_; }
    void rebuild_caches();

    const std::vector<std::vector<int>>& sigma_masks() const { return masks_; }

  private:
    void beta_theta_block(double temp, double pen);
    void sigma_move(int u, double temp, double pen);
    void width_move(int m, double temp);
    void mu_move(double temp);
    void lambda_move(double temp, double pen);
    void psi_tau_moves(double pen);

    void refresh_multiplet(int u, double sigma, double gamma);
    double col_norm2(int m) const;

    const FitContext& ctx_;
    SamplerConfig cfg_;
    Rng rng_;
    ModelState state_;

    std::vector<std::vector<double>> tmult_;  // rendered multiplet shapes
    Eigen::MatrixXd tcols_;                   // design matrix columns
    std::vector<double> r_;                   // residual cache
    std::vector<std::vector<int>> masks_;     // wavelet coeffs per multiplet

    std::vector<double> sigma_step_, v_step_;
    double mu_step_ = 0.1;
    std::map<std::string, AcceptStat> accept_, window_;
    std::vector<StepRecord> step_history_;
};

ChainResult run_chain(const Spectrum& spec, const TemplateCatalog& cat, const Hyperparameters& hp,
                      const SamplerConfig& cfg);

struct BatchEntry {
    std::optional<ChainResult> chain;  // empty on failure
    std::string error;
};

// Independent chains over a batch of spectra, one worker thread per chain
// slot; spectrum k uses seed cfg.seed XOR k. Failures are captured per
// entry instead of aborting the batch.
std::vector<BatchEntry> run_batch(const std::vector<Spectrum>& specs, const TemplateCatalog& cat,
                                  const Hyperparameters& hp, const SamplerConfig& cfg,
                                  int workers);

}  // namespace specfit

#endif  // SPECFIT_SAMPLER_HPP_
