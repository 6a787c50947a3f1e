#include "specfit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specfit/errors.hpp"
#include "specfit/rng.hpp"

namespace specfit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double sq(double x) { return x * x; }

// log Gamma(shape, rate) density at x > 0.
double gamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0)) return -kInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

}  // namespace

Hyperparameters resolve_hyperparameters(Hyperparameters hp, const Spectrum& spec,
                                        const TemplateCatalog& cat) {
    spec.validate();
    double ymax = spec.max_abs_intensity();
    if (std::isnan(hp.h)) hp.h = -0.01 * ymax;
    if (!(hp.h < 0)) hp.h = -1e-12;  // degenerate flat spectrum still needs h < 0
    if (std::isnan(hp.tau_mean)) hp.tau_mean = hp.h;
    if (std::isnan(hp.tau_sd)) hp.tau_sd = std::fabs(hp.h);

    if (std::isnan(hp.beta_sd)) {
        // Crude per-proton integral of the tallest candidate: trapezoid of
        // |y| over center +/- 0.02 ppm of the multiplet with the most
        // protons that sits on the axis.
        double best = 0.0;
        for (const auto& met : cat.metabolites)
            for (const auto& mu : met.multiplets) {
                double c = mu.center_ppm;
                if (c < spec.ppm.front() || c > spec.ppm.back()) continue;
                auto first = std::lower_bound(spec.ppm.begin(), spec.ppm.end(), c - 0.02);
                auto last = std::upper_bound(spec.ppm.begin(), spec.ppm.end(), c + 0.02);
                std::size_t i0 = first - spec.ppm.begin();
                std::size_t i1 = last - spec.ppm.begin();
                double area = 0.0;
                for (std::size_t i = i0 + 1; i < i1; ++i)
                    area += 0.5 * (std::fabs(spec.intensity[i]) + std::fabs(spec.intensity[i - 1])) *
                            (spec.ppm[i] - spec.ppm[i - 1]);
                best = std::max(best, area / mu.proton_count);
            }
        if (!(best > 0)) best = std::max(ymax, 1e-12);
        hp.beta_sd = 10.0 * best;
    }
    if (!(hp.a > 0) || !(hp.b > 0) || !(hp.c > 0) || !(hp.d > 0))
        throw ConfigError("gamma prior parameters must be positive");
    if (!(hp.tau_sd > 0) || !(hp.beta_sd > 0) || !(hp.s_mu > 0) || !(hp.s_v > 0))
        throw ConfigError("prior scales must be positive");
    if (!(hp.burnin_temp0 >= 1.0) || !(hp.psi_penalty0 >= 1.0))
        throw ConfigError("burn-in schedule starts must be >= 1");
    return hp;
}

FitContext make_fit_context(const Spectrum& spec, const TemplateCatalog& cat,
                            const Hyperparameters& hp, bool use_wavelet, int wavelet_levels) {
    spec.validate();
    FitContext ctx;
    ctx.spec = &spec;
    ctx.cat = &cat;
    ctx.use_wavelet = use_wavelet;
    ctx.hp = hp.resolved() ? hp : resolve_hyperparameters(hp, spec, cat);

    const double lo = spec.ppm.front();
    const double hi = spec.ppm.back();
    std::vector<bool> covered(cat.metabolites.size(), false);
    for (const auto& fm : flatten(cat)) {
        bool in = false;
        for (const auto& p : fm.mult->peaks) {
            double c = fm.mult->center_ppm + p.offset_ppm;
            if (c >= lo && c <= hi) in = true;
        }
        if (in) {
            ctx.mult.push_back(fm);
            covered[fm.metabolite] = true;
        }
    }
    for (std::size_t m = 0; m < covered.size(); ++m)
        if (!covered[m])
            throw ConfigError("metabolite '" + cat.metabolites[m].name +
                              "' has no multiplet inside the fitted window");

    if (use_wavelet)
        ctx.plan = SegmentedPlan::make(spec.segment_lengths(), wavelet_levels);
    return ctx;
}

std::vector<double> catalogued_component(const ModelState& s, const FitContext& ctx) {
    std::vector<double> out(ctx.n(), 0.0);
    for (int u = 0; u < ctx.n_mult(); ++u) {
        const auto& fm = ctx.mult[u];
        double beta = s.beta[fm.metabolite];
        if (beta == 0.0) continue;
        std::vector<double> t = render_multiplet(*fm.mult, s.sigma[u],
                                                 ctx.gamma_of(fm.metabolite, s.mu, s.v),
                                                 ctx.spec->ppm);
        for (int i = 0; i < ctx.n(); ++i) out[i] += beta * t[i];
    }
    return out;
}

std::vector<double> wavelet_component(const ModelState& s, const FitContext& ctx) {
    if (!ctx.use_wavelet || s.theta.size() == 0) return std::vector<double>(ctx.n(), 0.0);
    std::vector<double> theta(s.theta.data(), s.theta.data() + s.theta.size());
    return ctx.plan.inverse(theta);
}

std::vector<double> residual_signal(const ModelState& s, const FitContext& ctx) {
    std::vector<double> yc = catalogued_component(s, ctx);
    std::vector<double> yu = wavelet_component(s, ctx);
    std::vector<double> r(ctx.n());
    for (int i = 0; i < ctx.n(); ++i) r[i] = ctx.spec->intensity[i] - yc[i] - yu[i];
    return r;
}

double log_likelihood(const ModelState& s, const FitContext& ctx, double temp) {
    if (!(s.lambda > 0)) return -kInf;
    std::vector<double> r = residual_signal(s, ctx);
    double ssr = 0.0;
    for (double x : r) ssr += x * x;
    double n = static_cast<double>(ctx.n());
    return (0.5 * n * (std::log(s.lambda) - kLog2Pi) - 0.5 * s.lambda * ssr) / temp;
}

double theta_trunc_log_normalizer(const FitContext& ctx, const Eigen::VectorXd& tau,
                                  const Eigen::VectorXd& psi, double lambda, double penalty) {
    double sum = 0.0;
    for (int i = 0; i < tau.size(); ++i) {
        if (!ctx.coeff_active(i)) continue;
        sum += log_norm_sf(tau[i] * std::sqrt(penalty * lambda * psi[i]));
    }
    return sum;
}

double log_prior(const ModelState& s, const FitContext& ctx, double penalty) {
    const Hyperparameters& hp = ctx.hp;
    double lp = 0.0;

    if (!(s.lambda > 0)) return -kInf;
    lp += gamma_logpdf(s.lambda, hp.a, hp.b / 2.0);

    for (int m = 0; m < ctx.n_metabolites(); ++m) {
        lp += trunc_normal_logpdf(s.beta[m], hp.beta_mean, hp.beta_sd, 0.0, kInf);
        lp += -0.5 * kLog2Pi - std::log(hp.s_v) - 0.5 * sq(s.v[m] / hp.s_v);
    }
    lp += -0.5 * kLog2Pi - std::log(hp.s_mu) - 0.5 * sq((s.mu - hp.mu0) / hp.s_mu);

    for (int u = 0; u < ctx.n_mult(); ++u) {
        double bound = ctx.mult[u].mult->shift_bound;
        lp += trunc_normal_logpdf(s.sigma[u], 0.0, ctx.sigma_prior_sd(u), -bound, bound);
    }

    const int K = static_cast<int>(s.theta.size());
    for (int i = 0; i < K; ++i) {
        if (!ctx.coeff_active(i)) continue;
        if (!(s.psi[i] > 0)) return -kInf;
        if (s.tau[i] < hp.h) return -kInf;
        if (s.theta[i] < s.tau[i]) return -kInf;
        lp += gamma_logpdf(s.psi[i], hp.c, hp.d / 2.0);
        lp += trunc_normal_logpdf(s.tau[i], hp.tau_mean, hp.tau_sd, hp.h, kInf);
        double prec = penalty * s.lambda * s.psi[i];
        lp += 0.5 * (std::log(prec) - kLog2Pi) - 0.5 * prec * sq(s.theta[i]) -
              log_norm_sf(s.tau[i] * std::sqrt(prec));
    }
    return lp;
}

GammaParams lambda_conditional(const ModelState& s, const FitContext& ctx, double temp,
                               double penalty) {
    const int K = static_cast<int>(s.theta.size());
    double ssr = 0.0;
    if (ctx.n() > 0) {
        std::vector<double> r = residual_signal(s, ctx);
        for (double x : r) ssr += x * x;
    }
    double quad = 0.0;
    int active = 0;
    for (int i = 0; i < K; ++i) {
        if (!ctx.coeff_active(i)) continue;
        ++active;
        quad += s.psi[i] * sq(s.theta[i]);
    }
    GammaParams g;
    g.shape = ctx.hp.a + 0.5 * ctx.n() / temp + 0.5 * active;
    g.rate = ctx.hp.b / 2.0 + 0.5 * ssr / temp + 0.5 * penalty * quad;
    return g;
}

GammaParams psi_conditional(const ModelState& s, const FitContext& ctx, int i, double penalty) {
    GammaParams g;
    g.shape = ctx.hp.c + 0.5;
    g.rate = (ctx.hp.d + penalty * s.lambda * sq(s.theta[i])) / 2.0;
    return g;
}

TruncGaussian tau_conditional(const ModelState& s, const FitContext& ctx, int i) {
    if (s.theta[i] < ctx.hp.h)
        throw DomainError("tau conditional: theta below the truncation floor");
    return {ctx.hp.tau_mean, ctx.hp.tau_sd, ctx.hp.h, s.theta[i]};
}

BetaBlockConditional beta_block_conditional(const ModelState& s, const FitContext& ctx,
                                            double temp) {
    const Hyperparameters& hp = ctx.hp;
    const int M = ctx.n_metabolites();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ctx.n(), M);
    for (int u = 0; u < ctx.n_mult(); ++u) {
        int m = ctx.mult[u].metabolite;
        add_multiplet(*ctx.mult[u].mult, s.sigma[u], ctx.gamma_of(m, s.mu, s.v), ctx.spec->ppm,
                      T.col(m).data());
    }

    std::vector<double> yu = wavelet_component(s, ctx);
    Eigen::VectorXd z(ctx.n());
    for (int i = 0; i < ctx.n(); ++i) z[i] = ctx.spec->intensity[i] - yu[i];

    BetaBlockConditional out;
    out.precision = (s.lambda / temp) * (T.transpose() * T);
    out.precision.diagonal().array() += 1.0 / sq(hp.beta_sd);
    Eigen::VectorXd rhs = (s.lambda / temp) * (T.transpose() * z);
    rhs.array() += hp.beta_mean / sq(hp.beta_sd);
    Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
    if (llt.info() != Eigen::Success)
        throw SingularityError("beta conditional precision is not positive definite");
    out.mean = llt.solve(rhs);
    return out;
}

TruncGaussian beta_conditional(const ModelState& s, const FitContext& ctx, int m, double temp) {
    const Hyperparameters& hp = ctx.hp;
    // Column m of the design matrix at the current shifts/widths.
    std::vector<double> col(ctx.n(), 0.0);
    for (int u = 0; u < ctx.n_mult(); ++u)
        if (ctx.mult[u].metabolite == m)
            add_multiplet(*ctx.mult[u].mult, s.sigma[u], ctx.gamma_of(m, s.mu, s.v),
                          ctx.spec->ppm, col.data());

    std::vector<double> r = residual_signal(s, ctx);
    double col2 = 0.0, dot = 0.0;
    for (int i = 0; i < ctx.n(); ++i) {
        col2 += col[i] * col[i];
        dot += col[i] * (r[i] + s.beta[m] * col[i]);  // residual without this column
    }
    double prec = (s.lambda / temp) * col2 + 1.0 / sq(hp.beta_sd);
    double mean = ((s.lambda / temp) * dot + hp.beta_mean / sq(hp.beta_sd)) / prec;
    return {mean, 1.0 / std::sqrt(prec), 0.0, kInf};
}

TruncGaussian theta_conditional(const ModelState& s, const FitContext& ctx, int i, double temp,
                                double penalty) {
    std::vector<double> r = residual_signal(s, ctx);
    double pn2 = ctx.plan.pnorm2(i);
    double dot = ctx.plan.dot_signal(i, r.data()) + s.theta[i] * pn2;
    double prec = (s.lambda / temp) * pn2 + penalty * s.lambda * s.psi[i];
    double mean = (s.lambda / temp) * dot / prec;
    return {mean, 1.0 / std::sqrt(prec), s.tau[i], kInf};
}

double sigma_log_target(const ModelState& s, const FitContext& ctx, int u, double sigma_prop,
                        double temp) {
    double bound = ctx.mult[u].mult->shift_bound;
    if (std::fabs(sigma_prop) > bound) return -kInf;
    ModelState t = s;
    t.sigma[u] = sigma_prop;
    return log_likelihood(t, ctx, temp) - 0.5 * sq(sigma_prop / ctx.sigma_prior_sd(u));
}

double width_log_target(const ModelState& s, const FitContext& ctx, int m, double v_prop,
                        double temp) {
    ModelState t = s;
    t.v[m] = v_prop;
    return log_likelihood(t, ctx, temp) - 0.5 * sq(v_prop / ctx.hp.s_v);
}

double mu_log_target(const ModelState& s, const FitContext& ctx, double mu_prop, double temp) {
    ModelState t = s;
    t.mu = mu_prop;
    return log_likelihood(t, ctx, temp) - 0.5 * sq((mu_prop - ctx.hp.mu0) / ctx.hp.s_mu);
}

}  // namespace specfit
