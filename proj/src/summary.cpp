#include "specfit/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "specfit/errors.hpp"
#include "specfit/io.hpp"

namespace specfit {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> col_vector(const Eigen::MatrixXd& m, int c) {
    std::vector<double> out(m.rows());
    for (int i = 0; i < m.rows(); ++i) out[i] = m(i, c);
    return out;
}

// Two-sided z score comparing first- and second-half means of the draws.
double split_half_z(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) return 0.0;
    std::size_t half = n / 2;
    auto moments = [](std::span<const double> part) {
        double m = 0.0;
        for (double v : part) m += v;
        m /= part.size();
        double var = 0.0;
        for (double v : part) var += (v - m) * (v - m);
        var /= (part.size() - 1);
        return std::make_pair(m, var);
    };
    auto [m1, v1] = moments(x.subspan(0, half));
    auto [m2, v2] = moments(x.subspan(half));
    double se = std::sqrt(v1 / half + v2 / (n - half));
    return se > 0 ? (m1 - m2) / se : 0.0;
}

}  // namespace

double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double idx = p * (n - 1);
    std::size_t lo = static_cast<std::size_t>(std::clamp(std::floor(idx), 0.0,
                                                         static_cast<double>(n - 1)));
    std::size_t hi = std::min(lo + 1, n - 1);
    double w = idx - lo;
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

QuantileStats compute_stats(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("statistics of empty sample");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    QuantileStats st;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= x.size();
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    st.mean = mean;
    st.sd = x.size() > 1 ? std::sqrt(var / (x.size() - 1)) : 0.0;
    st.q025 = quantile(x, 0.025);
    st.q25 = quantile(x, 0.25);
    st.median = quantile(x, 0.5);
    st.q75 = quantile(x, 0.75);
    st.q975 = quantile(x, 0.975);
    return st;
}

PosteriorSummary summarize(const ChainResult& chain) {
    if (chain.kept() == 0) throw DomainError("cannot summarize an empty chain");
    PosteriorSummary s;
    s.metabolites = chain.metabolite_names;
    s.multiplet_labels = chain.multiplet_labels;
    s.multiplet_centers = chain.multiplet_centers;

    const int M = static_cast<int>(chain.beta.cols());
    for (int m = 0; m < M; ++m) {
        std::vector<double> b = col_vector(chain.beta, m);
        s.beta.push_back(compute_stats(b));
        s.beta_split_z.push_back(split_half_z(b));
        std::vector<double> g(chain.kept());
        for (int k = 0; k < chain.kept(); ++k) g[k] = std::exp(chain.mu[k] + chain.v(k, m));
        s.gamma.push_back(compute_stats(g));
    }
    for (int u = 0; u < chain.sigma.cols(); ++u)
        s.sigma.push_back(compute_stats(col_vector(chain.sigma, u)));

    std::vector<double> lam(chain.lambda.data(), chain.lambda.data() + chain.kept());
    s.lambda = compute_stats(lam);
    for (const auto& [name, st] : chain.acceptance) s.acceptance[name] = st.rate();
    return s;
}

FitDecomposition reconstruct_fit(const ChainResult& chain, const Spectrum& spec,
                                 const TemplateCatalog& cat) {
    if (spec.ppm != chain.ppm)
        throw AxisError("spectrum axis does not match the fitted chain");
    const int n = spec.size();

    FitDecomposition fd;
    fd.ppm = chain.ppm;
    fd.observed = chain.observed;

    if (!chain.mean_catalogued.empty()) {
        fd.catalogued = chain.mean_catalogued;
        fd.wavelet = chain.mean_wavelet;
    } else if (chain.theta.cols() > 0 && chain.kept() > 0) {
        // Rebuild from the recorded draws.
        FitContext ctx = make_fit_context(spec, cat, resolve_hyperparameters({}, spec, cat),
                                          true, chain.config.wavelet_levels);
        if (static_cast<int>(ctx.mult.size()) != chain.sigma.cols())
            throw ConfigError("catalog does not match the recorded chain");
        fd.catalogued.assign(n, 0.0);
        fd.wavelet.assign(n, 0.0);
        for (int k = 0; k < chain.kept(); ++k) {
            for (int u = 0; u < ctx.n_mult(); ++u) {
                int m = ctx.mult[u].metabolite;
                std::vector<double> t =
                    render_multiplet(*ctx.mult[u].mult, chain.sigma(k, u),
                                     std::exp(chain.mu[k] + chain.v(k, m)), spec.ppm);
                for (int i = 0; i < n; ++i) fd.catalogued[i] += chain.beta(k, m) * t[i];
            }
            std::vector<double> th(chain.theta.cols());
            for (int i = 0; i < chain.theta.cols(); ++i) th[i] = chain.theta(k, i);
            std::vector<double> yu = ctx.plan.inverse(th);
            for (int i = 0; i < n; ++i) fd.wavelet[i] += yu[i];
        }
        for (int i = 0; i < n; ++i) {
            fd.catalogued[i] /= chain.kept();
            fd.wavelet[i] /= chain.kept();
        }
    } else {
        throw ConfigError("chain recorded neither component means nor theta draws");
    }

    fd.total.resize(n);
    fd.residual.resize(n);
    for (int i = 0; i < n; ++i) {
        fd.total[i] = fd.catalogued[i] + fd.wavelet[i];
        fd.residual[i] = fd.observed[i] - fd.total[i];
    }
    return fd;
}

std::vector<double> density_estimate(std::span<const double> samples,
                                     std::span<const double> grid) {
    if (samples.size() < 2) throw DomainError("density estimate needs at least 2 samples");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const std::size_t m = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= m;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / (m - 1));
    double iqr = quantile(x, 0.75) - quantile(x, 0.25);
    double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    double bw = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
    if (!(bw > 0)) throw DomainError("density estimate: zero bandwidth (degenerate sample)");

    std::vector<double> out(grid.size(), 0.0);
    const double norm = 1.0 / (m * bw * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double v : x) {
            double z = (grid[g] - v) / bw;
            acc += std::exp(-0.5 * z * z);
        }
        out[g] = acc * norm;
    }
    return out;
}

int count_local_maxima(std::span<const double> values) {
    const int n = static_cast<int>(values.size());
    int count = 0;
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && values[j + 1] == values[i]) ++j;  // plateau
        bool left_up = i == 0 || values[i - 1] < values[i];
        bool right_down = j == n - 1 || values[j + 1] < values[j];
        if (left_up && right_down && !(i == 0 && j == n - 1)) ++count;
        i = j + 1;
    }
    return count;
}

int count_prominent_maxima(std::span<const double> values, double min_prominence) {
    const int n = static_cast<int>(values.size());
    if (n == 0) return 0;

    // Sweep points from highest to lowest, growing connected components
    // (union-find). A point with no processed neighbour births a mode; a
    // point joining two components is the saddle where the lower-born mode
    // dies, with prominence = birth height - saddle height.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] > values[b]; });

    std::vector<int> parent(n, -1);  // -1 marks "not yet processed"
    std::vector<double> birth(n, 0.0);
    auto find = [&](int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };

    int count = 0;
    for (int idx : order) {
        bool left = idx > 0 && parent[idx - 1] != -1;
        bool right = idx + 1 < n && parent[idx + 1] != -1;
        parent[idx] = idx;
        birth[idx] = values[idx];
        if (left && right) {
            int rl = find(idx - 1);
            int rr = find(idx + 1);
            if (rl != rr) {
                int hi = birth[rl] >= birth[rr] ? rl : rr;
                int lo = hi == rl ? rr : rl;
                if (birth[lo] - values[idx] >= min_prominence) ++count;
                parent[lo] = hi;
                parent[idx] = hi;
            } else {
                parent[idx] = rl;
            }
        } else if (left) {
            parent[idx] = find(idx - 1);
        } else if (right) {
            parent[idx] = find(idx + 1);
        }
    }

    // The last surviving component is the global maximum's mode.
    double vmin = *std::min_element(values.begin(), values.end());
    for (int i = 0; i < n; ++i)
        if (parent[i] == i && birth[i] - vmin >= min_prominence) ++count;
    return count;
}

std::vector<double> integrate_baseline(const Spectrum& spec, const TemplateCatalog& cat,
                                       double win_pad) {
    spec.validate();
    std::vector<double> out;
    for (const auto& met : cat.metabolites) {
        // Largest proton count among multiplets whose center is on the axis.
        const Multiplet* pick = nullptr;
        for (const auto& mu : met.multiplets) {
            if (mu.center_ppm < spec.ppm.front() || mu.center_ppm > spec.ppm.back()) continue;
            if (!pick || mu.proton_count > pick->proton_count) pick = &mu;
        }
        if (!pick)
            throw EmptyWindowError("metabolite '" + met.name + "' has no multiplet on the axis");
        double lo = pick->center_ppm - win_pad;
        double hi = pick->center_ppm + win_pad;
        auto first = std::lower_bound(spec.ppm.begin(), spec.ppm.end(), lo);
        auto last = std::upper_bound(spec.ppm.begin(), spec.ppm.end(), hi);
        if (last - first < 2)
            throw EmptyWindowError("integration window around " + std::to_string(pick->center_ppm) +
                                   " ppm misses the axis");
        std::size_t i0 = first - spec.ppm.begin();
        std::size_t i1 = last - spec.ppm.begin();
        double area = 0.0;
        for (std::size_t i = i0 + 1; i < i1; ++i)
            area += 0.5 * (spec.intensity[i] + spec.intensity[i - 1]) *
                    (spec.ppm[i] - spec.ppm[i - 1]);
        out.push_back(area / pick->proton_count);
    }
    return out;
}

ErrorStats compare_errors(std::span<const double> estimate, std::span<const double> truth) {
    if (estimate.size() != truth.size())
        throw DomainError("compare_errors: estimate and truth lengths differ");
    if (estimate.empty()) throw DomainError("compare_errors: empty input");

    ErrorStats es;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        num += estimate[i] * truth[i];
        den += estimate[i] * estimate[i];
    }
    es.scale = den > 0 ? num / den : 1.0;

    double sse = 0.0, rel_sum = 0.0;
    int rel_n = 0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        double err = es.scale * estimate[i] - truth[i];
        es.abs_err.push_back(std::fabs(err));
        sse += err * err;
        if (truth[i] != 0.0) {
            double rel = std::fabs(err) / std::fabs(truth[i]);
            es.rel_err.push_back(rel);
            rel_sum += rel;
            ++rel_n;
        } else {
            es.rel_err.push_back(NAN);
        }
    }
    es.rmse = std::sqrt(sse / estimate.size());
    es.mean_rel_err = rel_n > 0 ? rel_sum / rel_n : 0.0;
    return es;
}

void write_fit_outputs(const std::filesystem::path& dir, const ChainResult& chain,
                       const Spectrum& spec, const TemplateCatalog& cat) {
    std::filesystem::create_directories(dir);
    PosteriorSummary s = summarize(chain);
    FitDecomposition fd = reconstruct_fit(chain, spec, cat);

    {
        std::ostringstream out;
        out << "metabolite,beta_mean,beta_sd,beta_q025,beta_q25,beta_median,beta_q75,beta_q975,"
               "gamma_mean,gamma_q025,gamma_q975,split_z\n";
        for (std::size_t m = 0; m < s.metabolites.size(); ++m) {
            const auto& b = s.beta[m];
            const auto& g = s.gamma[m];
            out << s.metabolites[m] << ',' << fmt_g17(b.mean) << ',' << fmt_g17(b.sd) << ','
                << fmt_g17(b.q025) << ',' << fmt_g17(b.q25) << ',' << fmt_g17(b.median) << ','
                << fmt_g17(b.q75) << ',' << fmt_g17(b.q975) << ',' << fmt_g17(g.mean) << ','
                << fmt_g17(g.q025) << ',' << fmt_g17(g.q975) << ','
                << fmt_g17(s.beta_split_z[m]) << '\n';
        }
        atomic_write(dir / "summary.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "multiplet,center_ppm,sigma_mean,sigma_sd,sigma_q025,sigma_median,sigma_q975\n";
        for (std::size_t u = 0; u < s.multiplet_labels.size(); ++u) {
            const auto& st = s.sigma[u];
            out << s.multiplet_labels[u] << ',' << fmt_g17(s.multiplet_centers[u]) << ','
                << fmt_g17(st.mean) << ',' << fmt_g17(st.sd) << ',' << fmt_g17(st.q025) << ','
                << fmt_g17(st.median) << ',' << fmt_g17(st.q975) << '\n';
        }
        atomic_write(dir / "sigma_summary.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "ppm,observed,total,catalogued,wavelet,residual\n";
        for (std::size_t i = 0; i < fd.ppm.size(); ++i)
            out << fmt_g17(fd.ppm[i]) << ',' << fmt_g17(fd.observed[i]) << ','
                << fmt_g17(fd.total[i]) << ',' << fmt_g17(fd.catalogued[i]) << ','
                << fmt_g17(fd.wavelet[i]) << ',' << fmt_g17(fd.residual[i]) << '\n';
        atomic_write(dir / "fit.csv", out.str());
    }
    {
        std::ostringstream out;
        for (std::size_t m = 0; m < chain.metabolite_names.size(); ++m)
            out << (m ? "," : "") << chain.metabolite_names[m];
        out << '\n';
        for (int k = 0; k < chain.kept(); ++k) {
            for (int m = 0; m < chain.beta.cols(); ++m)
                out << (m ? "," : "") << fmt_g17(chain.beta(k, m));
            out << '\n';
        }
        atomic_write(dir / "beta_samples.csv", out.str());
    }
    {
        std::ostringstream out;
        for (std::size_t u = 0; u < chain.multiplet_labels.size(); ++u)
            out << (u ? "," : "") << chain.multiplet_labels[u];
        out << '\n';
        for (int k = 0; k < chain.kept(); ++k) {
            for (int u = 0; u < chain.sigma.cols(); ++u)
                out << (u ? "," : "") << fmt_g17(chain.sigma(k, u));
            out << '\n';
        }
        atomic_write(dir / "sigma_samples.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "kind,name,value\n";
        for (const auto& [name, st] : chain.acceptance) {
            out << "proposed," << name << ',' << st.proposed << '\n';
            out << "accepted," << name << ',' << st.accepted << '\n';
            out << "acceptance," << name << ',' << fmt_g17(st.rate()) << '\n';
        }
        for (const auto& rec : chain.step_history)
            out << "step_at_" << rec.iter << ',' << rec.move << ',' << fmt_g17(rec.step) << '\n';
        for (std::size_t m = 0; m < s.metabolites.size(); ++m)
            out << "split_z," << s.metabolites[m] << ',' << fmt_g17(s.beta_split_z[m]) << '\n';
        out << "lambda_mean,lambda," << fmt_g17(s.lambda.mean) << '\n';
        out << "kept,draws," << chain.kept() << '\n';
        atomic_write(dir / "diagnostics.csv", out.str());
    }
    if (chain.theta.cols() > 0) {
        std::ostringstream out;
        for (int i = 0; i < chain.theta.cols(); ++i) out << (i ? "," : "") << "theta_" << i;
        out << '\n';
        for (int k = 0; k < chain.kept(); ++k) {
            for (int i = 0; i < chain.theta.cols(); ++i)
                out << (i ? "," : "") << fmt_g17(chain.theta(k, i));
            out << '\n';
        }
        atomic_write(dir / "theta_samples.csv", out.str());
    }
}

}  // namespace specfit
