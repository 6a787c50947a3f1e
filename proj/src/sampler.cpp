#include "specfit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "specfit/errors.hpp"

namespace specfit {

namespace {

double sq(double x) { return x * x; }

double sum_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// Reflect x into [lo, hi] (folds the tails back; symmetric proposal).
double reflect_into(double x, double lo, double hi) {
    double w = hi - lo;
    if (!(w > 0)) return lo;
    double t = std::fmod(x - lo, 2.0 * w);
    if (t < 0) t += 2.0 * w;
    return t <= w ? lo + t : hi - (t - w);
}

}  // namespace

Eigen::VectorXd nnls_coordinate_descent(const Eigen::MatrixXd& T, const Eigen::VectorXd& y,
                                        int sweeps) {
    const int M = static_cast<int>(T.cols());
    if (M == 0) return Eigen::VectorXd();
    Eigen::MatrixXd G = T.transpose() * T;
    Eigen::VectorXd g = T.transpose() * y;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(M);
    for (int s = 0; s < sweeps; ++s) {
        double delta = 0.0;
        for (int m = 0; m < M; ++m) {
            if (!(G(m, m) > 0)) continue;
            double num = g[m] - G.row(m).dot(beta) + G(m, m) * beta[m];
            double next = std::max(0.0, num / G(m, m));
            delta = std::max(delta, std::fabs(next - beta[m]));
            beta[m] = next;
        }
        if (delta <= 1e-12 * std::max(1.0, beta.cwiseAbs().maxCoeff())) break;
    }
    return beta;
}

ModelState init_state(const FitContext& ctx, Rng& rng) {
    (void)rng;  // deterministic start; kept for interface stability
    const Hyperparameters& hp = ctx.hp;
    const int M = ctx.n_metabolites();
    const int U = ctx.n_mult();
    const int K = ctx.n_coeff();

    ModelState s;
    s.sigma = Eigen::VectorXd::Zero(U);
    s.v = Eigen::VectorXd::Zero(M);
    s.mu = hp.mu0;

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ctx.n(), M);
    for (int u = 0; u < U; ++u)
        add_multiplet(*ctx.mult[u].mult, 0.0, std::exp(hp.mu0), ctx.spec->ppm,
                      T.col(ctx.mult[u].metabolite).data());
    Eigen::Map<const Eigen::VectorXd> y(ctx.spec->intensity.data(), ctx.n());
    s.beta = nnls_coordinate_descent(T, y);

    // Noise scale from the median absolute successive difference: sparse
    // peaks barely move a median, unlike the NNLS residual, which counts any
    // uncatalogued signal as noise and starts lambda far too small for the
    // lambda-scaled wavelet prior to bite during early burn-in.
    double lam = 0.0;
    if (ctx.n() > 1) {
        std::vector<double> d(ctx.n() - 1);
        for (int i = 0; i + 1 < ctx.n(); ++i)
            d[i] = ctx.spec->intensity[i + 1] - ctx.spec->intensity[i];
        auto median = [](std::vector<double> v) {
            std::size_t mid = v.size() / 2;
            std::nth_element(v.begin(), v.begin() + mid, v.end());
            double hi = v[mid];
            if (v.size() % 2 == 0) {
                std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
                return 0.5 * (v[mid - 1] + hi);
            }
            return hi;
        };
        double med = median(d);
        for (double& x : d) x = std::fabs(x - med);
        double sigma = 1.4826 * median(d) / std::sqrt(2.0);
        if (sigma > 0 && std::isfinite(sigma)) lam = 1.0 / (sigma * sigma);
    }
    if (!(lam > 0)) {
        double ssr = (y - T * s.beta).squaredNorm();
        lam = ssr > 0 ? static_cast<double>(ctx.n()) / ssr : 0.0;
    }
    s.lambda = (lam > 0 && std::isfinite(lam)) ? lam : hp.a / (hp.b / 2.0);

    s.theta = Eigen::VectorXd::Zero(K);
    // Neutral precision multipliers. Drawing psi from its shape-0.001 prior
    // would start most coefficients at ~0, letting the wavelet swallow whole
    // peaks on the first sweep before the catalogued templates can claim
    // them; psi = 1 leaves the burn-in penalty schedule in control.
    s.psi = Eigen::VectorXd::Ones(K);
    s.tau = Eigen::VectorXd::Constant(K, hp.h);
    return s;
}

std::vector<double> geometric_schedule(double start, int len) {
    std::vector<double> out(std::max(len, 0));
    for (int i = 0; i < len; ++i)
        out[i] = len == 1 ? 1.0 : std::pow(start, 1.0 - static_cast<double>(i) / (len - 1));
    return out;
}

double adapted_step(double step, double rate, double target, int iter) {
    double kappa = std::min(1.0, 10.0 / std::sqrt(static_cast<double>(iter) + 1.0));
    double next = step * std::exp(kappa * (rate - target));
    return std::clamp(next, 1e-10, 1e10);
}

GibbsSampler::GibbsSampler(const FitContext& ctx, const SamplerConfig& cfg)
    : ctx_(ctx), cfg_(cfg), rng_(cfg.seed) {
    if (cfg_.burnin_iters < 0 || cfg_.sample_iters < 0)
        throw ConfigError("iteration counts must be nonnegative");
    if (cfg_.thin < 1) throw ConfigError("thin must be >= 1");
    if (cfg_.adapt_window < 1) throw ConfigError("adapt_window must be >= 1");

    const int U = ctx_.n_mult();
    sigma_step_.resize(U);
    for (int u = 0; u < U; ++u)
        sigma_step_[u] = cfg_.sigma_step0 > 0 ? cfg_.sigma_step0
                                              : ctx_.mult[u].mult->shift_bound / 5.0;
    v_step_.assign(ctx_.n_metabolites(), cfg_.v_step0);
    mu_step_ = cfg_.mu_step0;

    // Wavelet coefficients refreshed with each multiplet's shift move: those
    // whose support touches the multiplet's reachable extent plus padding.
    masks_.resize(U);
    if (ctx_.use_wavelet && ctx_.n_coeff() > 0) {
        const auto& ppm = ctx_.spec->ppm;
        for (int u = 0; u < U; ++u) {
            const Multiplet& mu = *ctx_.mult[u].mult;
            double lo = mu.center_ppm + mu.min_offset() - mu.shift_bound - cfg_.mask_pad_ppm;
            double hi = mu.center_ppm + mu.max_offset() + mu.shift_bound + cfg_.mask_pad_ppm;
            for (int i = 0; i < ctx_.n_coeff(); ++i) {
                if (!ctx_.coeff_active(i)) continue;
                std::pair<int, int> ranges[2];
                int cnt = ctx_.plan.support_ranges(i, ranges);
                bool hit = false;
                for (int k = 0; k < cnt && !hit; ++k) {
                    int s = ranges[k].first;
                    int e = s + ranges[k].second - 1;
                    hit = ppm[s] <= hi && ppm[e] >= lo;
                }
                if (hit) masks_[u].push_back(i);
            }
        }
    }
}

double GibbsSampler::temperature(int iter) const {
    if (iter >= cfg_.burnin_iters) return 1.0;
    return iter == cfg_.burnin_iters - 1
               ? 1.0
               : std::pow(ctx_.hp.burnin_temp0,
                          1.0 - static_cast<double>(iter) / (cfg_.burnin_iters - 1));
}

double GibbsSampler::penalty(int iter) const {
    if (iter >= cfg_.burnin_iters) return 1.0;
    return iter == cfg_.burnin_iters - 1
               ? 1.0
               : std::pow(ctx_.hp.psi_penalty0,
                          1.0 - static_cast<double>(iter) / (cfg_.burnin_iters - 1));
}

void GibbsSampler::initialize() {
    state_ = init_state(ctx_, rng_);
    rebuild_caches();
}

void GibbsSampler::set_state(const ModelState& s) {
    state_ = s;
    rebuild_caches();
}

void GibbsSampler::rebuild_caches() {
    const int n = ctx_.n();
    const int M = ctx_.n_metabolites();
    tmult_.assign(ctx_.n_mult(), {});
    tcols_ = Eigen::MatrixXd::Zero(n, M);
    for (int u = 0; u < ctx_.n_mult(); ++u) {
        int m = ctx_.mult[u].metabolite;
        tmult_[u] = render_multiplet(*ctx_.mult[u].mult, state_.sigma[u],
                                     ctx_.gamma_of(m, state_.mu, state_.v), ctx_.spec->ppm);
        for (int i = 0; i < n; ++i) tcols_(i, m) += tmult_[u][i];
    }
    std::vector<double> yu = wavelet_component(state_, ctx_);
    r_.resize(n);
    for (int i = 0; i < n; ++i) {
        double yc = 0.0;
        for (int m = 0; m < M; ++m) yc += tcols_(i, m) * state_.beta[m];
        r_[i] = ctx_.spec->intensity[i] - yc - yu[i];
    }
}

double GibbsSampler::col_norm2(int m) const { return tcols_.col(m).squaredNorm(); }

void GibbsSampler::refresh_multiplet(int u, double sigma, double gamma) {
    int m = ctx_.mult[u].metabolite;
    std::vector<double> tnew = render_multiplet(*ctx_.mult[u].mult, sigma, gamma, ctx_.spec->ppm);
    for (int i = 0; i < ctx_.n(); ++i) tcols_(i, m) += tnew[i] - tmult_[u][i];
    tmult_[u] = std::move(tnew);
}

void GibbsSampler::beta_theta_block(double temp, double pen) {
    const double lam_t = state_.lambda / temp;
    const Hyperparameters& hp = ctx_.hp;

    if (cfg_.update_beta) {
        for (int m = 0; m < ctx_.n_metabolites(); ++m) {
            double c2 = col_norm2(m);
            double prec = lam_t * c2 + 1.0 / sq(hp.beta_sd);
            double dot = 0.0;
            for (int i = 0; i < ctx_.n(); ++i) dot += tcols_(i, m) * r_[i];
            dot += state_.beta[m] * c2;
            double mean = (lam_t * dot + hp.beta_mean / sq(hp.beta_sd)) / prec;
            double next = rng_.trunc_normal(mean, 1.0 / std::sqrt(prec), 0.0, kInf);
            double diff = state_.beta[m] - next;
            if (diff != 0.0)
                for (int i = 0; i < ctx_.n(); ++i) r_[i] += tcols_(i, m) * diff;
            state_.beta[m] = next;
        }
    }

    if (cfg_.update_theta && ctx_.use_wavelet) {
        for (int i = 0; i < ctx_.n_coeff(); ++i) {
            if (!ctx_.coeff_active(i)) continue;
            double pn2 = ctx_.plan.pnorm2(i);
            double prec = lam_t * pn2 + pen * state_.lambda * state_.psi[i];
            double dot = ctx_.plan.dot_signal(i, r_.data()) + state_.theta[i] * pn2;
            double mean = lam_t * dot / prec;
            double next = rng_.trunc_normal(mean, 1.0 / std::sqrt(prec), state_.tau[i], kInf);
            double diff = next - state_.theta[i];
            if (diff != 0.0) ctx_.plan.axpy_signal(i, -diff, r_.data());
            state_.theta[i] = next;
        }
    }

    auto& a = accept_["beta_theta"];
    ++a.proposed;
    ++a.accepted;
}

void GibbsSampler::sigma_move(int u, double temp, double pen) {
    const FlatMultiplet& fm = ctx_.mult[u];
    const int m = fm.metabolite;
    const Multiplet& mult = *fm.mult;
    const double bound = mult.shift_bound;
    const double cur = state_.sigma[u];
    const double prop = reflect_into(cur + sigma_step_[u] * rng_.normal(), -bound, bound);
    const double lam = state_.lambda;
    const double lam_t = lam / temp;
    const std::vector<int>& mask = masks_[u];
    const std::string key = "sigma:" + ctx_.cat->metabolites[m].name + ":" + mult.id;

    std::vector<double> tnew =
        render_multiplet(mult, prop, ctx_.gamma_of(m, state_.mu, state_.v), ctx_.spec->ppm);
    const std::vector<double>& told = tmult_[u];
    const double beta = state_.beta[m];

    // Proposed residual: restore the masked wavelet contributions, swap the
    // template, then lay the coefficients back down one at a time.
    std::vector<double> rp = r_;
    for (int i : mask) ctx_.plan.axpy_signal(i, state_.theta[i], rp.data());
    for (int k = 0; k < ctx_.n(); ++k) rp[k] -= beta * (tnew[k] - told[k]);

    double logq_fwd = 0.0, dprior_theta = 0.0;
    std::vector<double> thprop(mask.size());
    for (std::size_t j = 0; j < mask.size(); ++j) {
        int i = mask[j];
        double pn2 = ctx_.plan.pnorm2(i);
        double prec = lam_t * pn2 + pen * lam * state_.psi[i];
        double sd = 1.0 / std::sqrt(prec);
        double mean = lam_t * ctx_.plan.dot_signal(i, rp.data()) / prec;
        double th = rng_.trunc_normal(mean, sd, state_.tau[i], kInf);
        logq_fwd += trunc_normal_logpdf(th, mean, sd, state_.tau[i], kInf);
        ctx_.plan.axpy_signal(i, -th, rp.data());
        thprop[j] = th;
        dprior_theta -= 0.5 * pen * lam * state_.psi[i] * (sq(th) - sq(state_.theta[i]));
    }

    // Density of drawing the current coefficients back at the current shift.
    double logq_rev = 0.0;
    if (!mask.empty()) {
        std::vector<double> rrev = r_;
        for (int i : mask) ctx_.plan.axpy_signal(i, state_.theta[i], rrev.data());
        for (std::size_t j = 0; j < mask.size(); ++j) {
            int i = mask[j];
            double pn2 = ctx_.plan.pnorm2(i);
            double prec = lam_t * pn2 + pen * lam * state_.psi[i];
            double sd = 1.0 / std::sqrt(prec);
            double mean = lam_t * ctx_.plan.dot_signal(i, rrev.data()) / prec;
            logq_rev += trunc_normal_logpdf(state_.theta[i], mean, sd, state_.tau[i], kInf);
            ctx_.plan.axpy_signal(i, -state_.theta[i], rrev.data());
        }
    }

    double sdp = ctx_.sigma_prior_sd(u);
    double lna = 0.5 * lam_t * (sum_sq(r_) - sum_sq(rp)) - 0.5 * (sq(prop) - sq(cur)) / sq(sdp) +
                 dprior_theta + logq_rev - logq_fwd;

    ++accept_[key].proposed;
    ++window_[key].proposed;
    if (std::log(rng_.uniform_pos()) < lna) {
        ++accept_[key].accepted;
        ++window_[key].accepted;
        state_.sigma[u] = prop;
        for (std::size_t j = 0; j < mask.size(); ++j) state_.theta[mask[j]] = thprop[j];
        for (int i = 0; i < ctx_.n(); ++i) tcols_(i, m) += tnew[i] - told[i];
        tmult_[u] = std::move(tnew);
        r_ = std::move(rp);
    }
}

void GibbsSampler::width_move(int m, double temp) {
    const std::string key = "v:" + ctx_.cat->metabolites[m].name;
    const double cur = state_.v[m];
    const double prop = cur + v_step_[m] * rng_.normal();
    const double gamma_new = std::exp(state_.mu + prop);
    const double beta = state_.beta[m];

    std::vector<double> rp = r_;
    std::vector<std::vector<double>> tnew(ctx_.n_mult());
    for (int u = 0; u < ctx_.n_mult(); ++u) {
        if (ctx_.mult[u].metabolite != m) continue;
        tnew[u] = render_multiplet(*ctx_.mult[u].mult, state_.sigma[u], gamma_new, ctx_.spec->ppm);
        for (int i = 0; i < ctx_.n(); ++i) rp[i] -= beta * (tnew[u][i] - tmult_[u][i]);
    }

    double lna = 0.5 * (state_.lambda / temp) * (sum_sq(r_) - sum_sq(rp)) -
                 0.5 * (sq(prop) - sq(cur)) / sq(ctx_.hp.s_v);

    ++accept_[key].proposed;
    ++window_[key].proposed;
    if (std::log(rng_.uniform_pos()) < lna) {
        ++accept_[key].accepted;
        ++window_[key].accepted;
        state_.v[m] = prop;
        for (int u = 0; u < ctx_.n_mult(); ++u) {
            if (ctx_.mult[u].metabolite != m) continue;
            for (int i = 0; i < ctx_.n(); ++i) tcols_(i, m) += tnew[u][i] - tmult_[u][i];
            tmult_[u] = std::move(tnew[u]);
        }
        r_ = std::move(rp);
    }
}

void GibbsSampler::mu_move(double temp) {
    const double cur = state_.mu;
    const double prop = cur + mu_step_ * rng_.normal();

    std::vector<double> rp = r_;
    std::vector<std::vector<double>> tnew(ctx_.n_mult());
    for (int u = 0; u < ctx_.n_mult(); ++u) {
        int m = ctx_.mult[u].metabolite;
        tnew[u] = render_multiplet(*ctx_.mult[u].mult, state_.sigma[u],
                                   std::exp(prop + state_.v[m]), ctx_.spec->ppm);
        for (int i = 0; i < ctx_.n(); ++i) rp[i] -= state_.beta[m] * (tnew[u][i] - tmult_[u][i]);
    }

    double lna = 0.5 * (state_.lambda / temp) * (sum_sq(r_) - sum_sq(rp)) -
                 0.5 * (sq(prop - ctx_.hp.mu0) - sq(cur - ctx_.hp.mu0)) / sq(ctx_.hp.s_mu);

    ++accept_["mu"].proposed;
    ++window_["mu"].proposed;
    if (std::log(rng_.uniform_pos()) < lna) {
        ++accept_["mu"].accepted;
        ++window_["mu"].accepted;
        state_.mu = prop;
        for (int u = 0; u < ctx_.n_mult(); ++u) {
            int m = ctx_.mult[u].metabolite;
            for (int i = 0; i < ctx_.n(); ++i) tcols_(i, m) += tnew[u][i] - tmult_[u][i];
            tmult_[u] = std::move(tnew[u]);
        }
        r_ = std::move(rp);
    }
}

void GibbsSampler::lambda_move(double temp, double pen) {
    const int K = static_cast<int>(state_.theta.size());
    double quad = 0.0;
    int active = 0;
    for (int i = 0; i < K; ++i) {
        if (!ctx_.coeff_active(i)) continue;
        ++active;
        quad += state_.psi[i] * sq(state_.theta[i]);
    }
    double shape = ctx_.hp.a + 0.5 * ctx_.n() / temp + 0.5 * active;
    double rate = ctx_.hp.b / 2.0 + 0.5 * sum_sq(r_) / temp + 0.5 * pen * quad;
    double prop = rng_.gamma(shape, rate);

    // The conjugate proposal ignores the truncation normalizers of the
    // theta prior; correct for them.
    double lna = theta_trunc_log_normalizer(ctx_, state_.tau, state_.psi, state_.lambda, pen) -
                 theta_trunc_log_normalizer(ctx_, state_.tau, state_.psi, prop, pen);

    ++accept_["lambda"].proposed;
    if (std::log(rng_.uniform_pos()) < lna) {
        ++accept_["lambda"].accepted;
        state_.lambda = prop;
    }
}

void GibbsSampler::psi_tau_moves(double pen) {
    const int K = static_cast<int>(state_.theta.size());
    const double lam = state_.lambda;
    const Hyperparameters& hp = ctx_.hp;

    if (cfg_.update_psi) {
        auto& a = accept_["psi"];
        for (int i = 0; i < K; ++i) {
            if (!ctx_.coeff_active(i)) continue;
            double shape = hp.c + 0.5;
            double rate = (hp.d + pen * lam * sq(state_.theta[i])) / 2.0;
            double prop = rng_.gamma(shape, rate);
            double s = pen * lam;
            double lna = log_norm_sf(state_.tau[i] * std::sqrt(s * state_.psi[i])) -
                         log_norm_sf(state_.tau[i] * std::sqrt(s * prop));
            ++a.proposed;
            if (std::log(rng_.uniform_pos()) < lna) {
                ++a.accepted;
                state_.psi[i] = prop;
            }
        }
    }

    if (cfg_.update_tau) {
        auto& a = accept_["tau"];
        for (int i = 0; i < K; ++i) {
            if (!ctx_.coeff_active(i)) continue;
            ++a.proposed;
            if (state_.theta[i] <= hp.h) {
                // Coefficient pinned to the floor: tau collapses onto h.
                state_.tau[i] = hp.h;
                ++a.accepted;
                continue;
            }
            double prop = rng_.trunc_normal(hp.tau_mean, hp.tau_sd, hp.h, state_.theta[i]);
            double s = std::sqrt(pen * lam * state_.psi[i]);
            double lna = log_norm_sf(state_.tau[i] * s) - log_norm_sf(prop * s);
            if (std::log(rng_.uniform_pos()) < lna) {
                ++a.accepted;
                state_.tau[i] = prop;
            }
        }
    }
}

void GibbsSampler::sweep(int iter) {
    const double temp = temperature(iter);
    const double pen = penalty(iter);

    if (cfg_.update_beta || cfg_.update_theta) beta_theta_block(temp, pen);
    if (cfg_.update_sigma)
        for (int u = 0; u < ctx_.n_mult(); ++u) sigma_move(u, temp, pen);
    if (cfg_.update_width) {
        for (int m = 0; m < ctx_.n_metabolites(); ++m) width_move(m, temp);
        mu_move(temp);
    }
    if (cfg_.update_lambda) lambda_move(temp, pen);
    psi_tau_moves(pen);
}

void GibbsSampler::adapt(int iter) {
    auto tune = [&](const std::string& key, double& step) {
        auto it = window_.find(key);
        if (it == window_.end() || it->second.proposed == 0) return;
        double rate = it->second.rate();
        step = adapted_step(step, rate, cfg_.target_accept, iter);
        step_history_.push_back({iter, key, step, rate});
        it->second = {};
    };
    for (int u = 0; u < ctx_.n_mult(); ++u) {
        const auto& fm = ctx_.mult[u];
        tune("sigma:" + ctx_.cat->metabolites[fm.metabolite].name + ":" + fm.mult->id,
             sigma_step_[u]);
    }
    for (int m = 0; m < ctx_.n_metabolites(); ++m)
        tune("v:" + ctx_.cat->metabolites[m].name, v_step_[m]);
    tune("mu", mu_step_);
}

ChainResult GibbsSampler::run() {
    initialize();

    const int n = ctx_.n();
    const int M = ctx_.n_metabolites();
    const int U = ctx_.n_mult();
    const int K = ctx_.n_coeff();
    const int total = cfg_.burnin_iters + cfg_.sample_iters;
    const int kept = cfg_.sample_iters > 0 ? (cfg_.sample_iters - 1) / cfg_.thin + 1 : 0;

    ChainResult res;
    res.spectrum_id = ctx_.spec->id;
    for (const auto& met : ctx_.cat->metabolites) res.metabolite_names.push_back(met.name);
    for (const auto& fm : ctx_.mult) {
        res.multiplet_labels.push_back(ctx_.cat->metabolites[fm.metabolite].name + ":" +
                                       fm.mult->id);
        res.multiplet_centers.push_back(fm.mult->center_ppm);
    }
    res.ppm = ctx_.spec->ppm;
    res.observed = ctx_.spec->intensity;
    res.config = cfg_;
    res.beta.resize(kept, M);
    res.sigma.resize(kept, U);
    res.v.resize(kept, M);
    res.mu.resize(kept);
    res.lambda.resize(kept);
    if (cfg_.record_theta) {
        res.theta.resize(kept, K);
        res.psi.resize(kept, K);
        res.tau.resize(kept, K);
    }
    res.mean_catalogued.assign(n, 0.0);
    res.mean_wavelet.assign(n, 0.0);
    res.temperature_schedule.resize(cfg_.burnin_iters);
    res.penalty_schedule.resize(cfg_.burnin_iters);
    for (int it = 0; it < cfg_.burnin_iters; ++it) {
        res.temperature_schedule[it] = temperature(it);
        res.penalty_schedule[it] = penalty(it);
    }

    int row = 0;
    for (int it = 0; it < total; ++it) {
        sweep(it);
        if (it < cfg_.burnin_iters && (it + 1) % cfg_.adapt_window == 0) adapt(it);
        if (it >= cfg_.burnin_iters && (it - cfg_.burnin_iters) % cfg_.thin == 0) {
            res.beta.row(row) = state_.beta;
            res.sigma.row(row) = state_.sigma;
            res.v.row(row) = state_.v;
            res.mu[row] = state_.mu;
            res.lambda[row] = state_.lambda;
            if (cfg_.record_theta) {
                res.theta.row(row) = state_.theta;
                res.psi.row(row) = state_.psi;
                res.tau.row(row) = state_.tau;
            }
            Eigen::VectorXd yc = tcols_ * state_.beta;
            for (int i = 0; i < n; ++i) {
                res.mean_catalogued[i] += yc[i];
                res.mean_wavelet[i] += ctx_.spec->intensity[i] - yc[i] - r_[i];
            }
            ++row;
        }
        if (cfg_.progress_interval > 0 && (it + 1) % cfg_.progress_interval == 0)
            std::fprintf(stderr, "[%s] sweep %d/%d\n", res.spectrum_id.c_str(), it + 1, total);
    }
    if (row > 0)
        for (int i = 0; i < n; ++i) {
            res.mean_catalogued[i] /= row;
            res.mean_wavelet[i] /= row;
        }
    res.acceptance = accept_;
    res.step_history = std::move(step_history_);
    return res;
}

ChainResult run_chain(const Spectrum& spec, const TemplateCatalog& cat, const Hyperparameters& hp,
                      const SamplerConfig& cfg) {
    Hyperparameters resolved = hp.resolved() ? hp : resolve_hyperparameters(hp, spec, cat);
    FitContext ctx = make_fit_context(spec, cat, resolved, cfg.use_wavelet, cfg.wavelet_levels);
    GibbsSampler sampler(ctx, cfg);
    return sampler.run();
}

std::vector<BatchEntry> run_batch(const std::vector<Spectrum>& specs, const TemplateCatalog& cat,
                                  const Hyperparameters& hp, const SamplerConfig& cfg,
                                  int workers) {
    const int n = static_cast<int>(specs.size());
    std::vector<BatchEntry> out(n);
    workers = std::max(1, workers);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int k = 0; k < n; ++k) {
        try {
            SamplerConfig c = cfg;
            c.seed = cfg.seed ^ static_cast<std::uint64_t>(k);
            out[k].chain = run_chain(specs[k], cat, hp, c);
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    }
    return out;
}

}  // namespace specfit
