#include "specfit/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "specfit/errors.hpp"
#include "specfit/io.hpp"
#include "specfit/sampler.hpp"
#include "specfit/summary.hpp"
#include "specfit/synth.hpp"

namespace specfit {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct FitOptions {
    std::vector<std::string> spectra_files;
    std::vector<std::string> bruker_dirs;
    std::string catalog_path;
    std::vector<std::string> windows;  // "lo:hi"
    std::string out_dir;
    bool no_header = false;
    int workers = 1;
    Hyperparameters hp;
    SamplerConfig cfg;
};

std::pair<double, double> parse_window(const std::string& text) {
    std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("window must be lo:hi, got '" + text + "'");
    char* end = nullptr;
    double lo = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + colon) throw ConfigError("bad window bound in '" + text + "'");
    const char* hi_start = text.c_str() + colon + 1;
    double hi = std::strtod(hi_start, &end);
    if (*end != '\0' || !(lo < hi)) throw ConfigError("bad window '" + text + "' (need lo < hi)");
    return {lo, hi};
}

// Registers every hyperparameter and sampler key as a --key flag so the
// options file (key = value) and the command line stay in one-to-one
// correspondence.
void add_model_options(CLI::App* cmd, FitOptions& o) {
    cmd->add_option("--a", o.hp.a, "Gamma shape of the lambda prior")->capture_default_str();
    cmd->add_option("--b", o.hp.b, "Lambda prior: rate is b/2")->capture_default_str();
    cmd->add_option("--c", o.hp.c, "Gamma shape of each psi prior")->capture_default_str();
    cmd->add_option("--d", o.hp.d, "Psi prior: rate is d/2")->capture_default_str();
    cmd->add_option("--h", o.hp.h, "Tau truncation floor (default -0.01*max|y|)");
    cmd->add_option("--tau_mean", o.hp.tau_mean, "Tau prior mean (default h)");
    cmd->add_option("--tau_sd", o.hp.tau_sd, "Tau prior sd (default |h|)");
    cmd->add_option("--beta_mean", o.hp.beta_mean, "Beta prior mean")->capture_default_str();
    cmd->add_option("--beta_sd", o.hp.beta_sd, "Beta prior sd (default 10x crude integral)");
    cmd->add_option("--sigma_sd", o.hp.sigma_sd, "Shift prior sd (default shift_bound/2)");
    cmd->add_option("--mu0", o.hp.mu0, "Log-width prior mean")->capture_default_str();
    cmd->add_option("--s_mu", o.hp.s_mu, "Log-width prior sd")->capture_default_str();
    cmd->add_option("--s_v", o.hp.s_v, "Per-metabolite log-width sd")->capture_default_str();
    cmd->add_option("--burnin_temp0", o.hp.burnin_temp0, "Initial tempering temperature")
        ->capture_default_str();
    cmd->add_option("--psi_penalty0", o.hp.psi_penalty0, "Initial wavelet penalty")
        ->capture_default_str();

    cmd->add_option("--burnin", o.cfg.burnin_iters, "Burn-in sweeps")->capture_default_str();
    cmd->add_option("--iters", o.cfg.sample_iters, "Sampling sweeps")->capture_default_str();
    cmd->add_option("--thin", o.cfg.thin, "Keep every k-th sweep")->capture_default_str();
    cmd->add_option("--seed", o.cfg.seed, "Random seed")->capture_default_str();
    cmd->add_option("--target_accept", o.cfg.target_accept, "Adaptation target rate")
        ->capture_default_str();
    cmd->add_option("--adapt_window", o.cfg.adapt_window, "Sweeps between step updates")
        ->capture_default_str();
    cmd->add_option("--sigma_step0", o.cfg.sigma_step0,
                    "Initial shift step (0 = shift_bound/5)")
        ->capture_default_str();
    cmd->add_option("--v_step0", o.cfg.v_step0, "Initial width step")->capture_default_str();
    cmd->add_option("--mu_step0", o.cfg.mu_step0, "Initial mu step")->capture_default_str();
    cmd->add_option("--use_wavelet", o.cfg.use_wavelet, "Model uncatalogued signal")
        ->capture_default_str();
    cmd->add_option("--wavelet_levels", o.cfg.wavelet_levels, "Decomposition depth (0 = auto)")
        ->capture_default_str();
    cmd->add_option("--mask_pad_ppm", o.cfg.mask_pad_ppm, "Shift-move wavelet mask padding")
        ->capture_default_str();
    cmd->add_flag("--record-theta,--record_theta", o.cfg.record_theta,
                  "Record wavelet coefficient draws");
    cmd->add_option("--progress_interval", o.cfg.progress_interval,
                    "Sweeps between progress lines (0 = quiet)")
        ->capture_default_str();
    cmd->add_option("--update_beta", o.cfg.update_beta, "Enable beta updates")
        ->capture_default_str();
    cmd->add_option("--update_theta", o.cfg.update_theta, "Enable theta updates")
        ->capture_default_str();
    cmd->add_option("--update_sigma", o.cfg.update_sigma, "Enable shift updates")
        ->capture_default_str();
    cmd->add_option("--update_width", o.cfg.update_width, "Enable width updates")
        ->capture_default_str();
    cmd->add_option("--update_lambda", o.cfg.update_lambda, "Enable lambda updates")
        ->capture_default_str();
    cmd->add_option("--update_psi", o.cfg.update_psi, "Enable psi updates")
        ->capture_default_str();
    cmd->add_option("--update_tau", o.cfg.update_tau, "Enable tau updates")
        ->capture_default_str();
}

struct NamedSpectrum {
    Spectrum spec;
    std::string source;
};

int cmd_fit(const FitOptions& o) {
    if (o.spectra_files.empty() && o.bruker_dirs.empty())
        throw ConfigError("no input spectra: pass --spectra or --bruker-dir");
    if (o.out_dir.empty()) throw ConfigError("missing --out directory");

    TemplateCatalog cat = load_catalog(o.catalog_path);

    PpmWindow window;
    for (const auto& w : o.windows) {
        auto [lo, hi] = parse_window(w);
        window.add(lo, hi);
    }
    if (!window.empty()) window.normalize();

    // Read and restrict per input so one corrupt file only takes down its
    // own spectra.
    std::vector<Spectrum> ready;
    std::vector<std::pair<std::string, std::string>> failures;  // (source, error)
    auto admit = [&](Spectrum s, const std::string& source) {
        try {
            if (!window.empty()) s = restrict_window(s, window);
            s.validate();
            ready.push_back(std::move(s));
        } catch (const std::exception& e) {
            failures.emplace_back(source, e.what());
        }
    };
    for (const auto& file : o.spectra_files) {
        try {
            for (auto& s : parse_text_spectra(file, !o.no_header))
                admit(std::move(s), file + ":" + s.id);
        } catch (const std::exception& e) {
            failures.emplace_back(file, e.what());
        }
    }
    for (const auto& dir : o.bruker_dirs) {
        try {
            admit(parse_bruker_1d(dir), dir);
        } catch (const std::exception& e) {
            failures.emplace_back(dir, e.what());
        }
    }
    if (ready.empty() && !failures.empty()) {
        for (const auto& [src, err] : failures)
            std::cerr << "error: " << src << ": " << err << "\n";
        return 2;
    }
    if (ready.empty()) throw ConfigError("no spectra found in the given inputs");

    std::vector<Spectrum> aligned = common_axis(ready);

    // Unique output directory names.
    std::set<std::string> used;
    std::vector<std::string> outnames;
    for (const auto& s : aligned) {
        std::string base = s.id.empty() ? "spectrum" : s.id;
        std::string name = base;
        int k = 2;
        while (!used.insert(name).second) name = base + "_" + std::to_string(k++);
        outnames.push_back(name);
    }

    std::vector<BatchEntry> entries = run_batch(aligned, cat, o.hp, o.cfg, o.workers);

    bool partial = !failures.empty();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (!entries[k].chain) {
            std::cerr << "error: " << aligned[k].id << ": " << entries[k].error << "\n";
            partial = true;
            continue;
        }
        write_fit_outputs(std::filesystem::path(o.out_dir) / outnames[k], *entries[k].chain,
                          aligned[k], cat);
    }
    for (const auto& [src, err] : failures)
        std::cerr << "error: " << src << ": " << err << "\n";
    return partial ? 2 : 0;
}

int cmd_synth(const std::string& suite, const std::string& out_dir) {
    std::vector<SynthSpec> specs = standard_suite(suite);
    std::filesystem::path dir = std::filesystem::path(out_dir) / suite;
    std::filesystem::create_directories(dir);

    std::vector<TruthRecord> truths;
    for (const auto& s : specs) {
        auto [spec, truth] = generate(s);
        write_text_spectra(dir / (s.id + ".txt"), std::span<const Spectrum>(&spec, 1));
        truths.push_back(std::move(truth));
    }
    write_catalog(dir / "catalog.csv", suite_catalog(suite));
    write_truth_csv(dir / "truth.csv", truths);
    return 0;
}

std::map<std::string, double> read_summary_betas(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty summary " + file.string());
    std::vector<std::string> header;
    std::stringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) header.push_back(tok);
    int name_col = -1, mean_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "metabolite") name_col = static_cast<int>(i);
        if (header[i] == "beta_mean") mean_col = static_cast<int>(i);
    }
    if (name_col < 0 || mean_col < 0)
        throw FormatError("summary " + file.string() + " lacks metabolite/beta_mean columns");
    std::map<std::string, double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (static_cast<int>(f.size()) <= std::max(name_col, mean_col))
            throw FormatError("short row in " + file.string());
        out[f[name_col]] = std::strtod(f[mean_col].c_str(), nullptr);
    }
    return out;
}

int cmd_compare(const std::vector<std::string>& spectra_files, const std::string& catalog_path,
                const std::string& truth_path, const std::string& fit_dir,
                const std::string& out_file, double win_pad) {
    TemplateCatalog cat = load_catalog(catalog_path);
    std::vector<TruthRecord> truths = read_truth_csv(truth_path);
    if (truths.empty()) throw ConfigError("no truth records in " + truth_path);

    std::map<std::string, Spectrum> by_id;
    for (const auto& file : spectra_files)
        for (auto& s : parse_text_spectra(file, true)) by_id[s.id] = std::move(s);

    std::vector<double> truth_all, mcmc_all, base_all;
    std::vector<std::pair<std::string, std::string>> rows;  // (spectrum, metabolite)
    for (const auto& tr : truths) {
        auto sp = by_id.find(tr.id);
        if (sp == by_id.end())
            throw ConfigError("truth spectrum '" + tr.id + "' not among --spectra inputs");
        std::map<std::string, double> betas =
            read_summary_betas(std::filesystem::path(fit_dir) / tr.id / "summary.csv");
        std::vector<double> baseline = integrate_baseline(sp->second, cat, win_pad);
        for (std::size_t m = 0; m < tr.metabolite_names.size(); ++m) {
            const std::string& name = tr.metabolite_names[m];
            auto bm = betas.find(name);
            if (bm == betas.end())
                throw ConfigError("metabolite '" + name + "' missing from fit summary of " +
                                  tr.id);
            const Metabolite* met = cat.find(name);
            if (!met) throw ConfigError("metabolite '" + name + "' missing from catalog");
            std::size_t cat_index = met - cat.metabolites.data();
            truth_all.push_back(tr.beta[m]);
            mcmc_all.push_back(bm->second);
            base_all.push_back(baseline[cat_index]);
            rows.emplace_back(tr.id, name);
        }
    }

    ErrorStats mcmc = compare_errors(mcmc_all, truth_all);
    ErrorStats base = compare_errors(base_all, truth_all);

    std::ostringstream out;
    out << "kind,spectrum,metabolite,truth,mcmc_scaled,baseline_scaled,mcmc_rel_err,"
           "baseline_rel_err\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << "entry," << rows[i].first << ',' << rows[i].second << ','
            << fmt_g17(truth_all[i]) << ',' << fmt_g17(mcmc.scale * mcmc_all[i]) << ','
            << fmt_g17(base.scale * base_all[i]) << ',' << fmt_g17(mcmc.rel_err[i]) << ','
            << fmt_g17(base.rel_err[i]) << '\n';
    out << "rmse,all,mcmc," << fmt_g17(mcmc.rmse) << ",,,,\n";
    out << "rmse,all,baseline," << fmt_g17(base.rmse) << ",,,,\n";
    out << "mean_rel_err,all,mcmc," << fmt_g17(mcmc.mean_rel_err) << ",,,,\n";
    out << "mean_rel_err,all,baseline," << fmt_g17(base.mean_rel_err) << ",,,,\n";
    out << "scale,all,mcmc," << fmt_g17(mcmc.scale) << ",,,,\n";
    out << "scale,all,baseline," << fmt_g17(base.scale) << ",,,,\n";
    atomic_write(out_file, out.str());
    return 0;
}

int cmd_lint(const std::string& catalog_path, const std::vector<std::string>& windows) {
    TemplateCatalog cat = load_catalog(catalog_path);
    std::cout << describe_catalog(cat);
    if (!windows.empty()) {
        PpmWindow win;
        for (const auto& w : windows) {
            auto [lo, hi] = parse_window(w);
            win.add(lo, hi);
        }
        win.normalize();
        for (const auto& met : cat.metabolites) {
            int inside = 0;
            for (const auto& mu : met.multiplets)
                if (win.contains(mu.center_ppm)) ++inside;
            std::cout << met.name << ": " << inside << "/" << met.multiplets.size()
                      << " multiplets in window\n";
            if (inside == 0)
                std::cout << "  warning: no multiplet of " << met.name
                          << " inside the fit window\n";
        }
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Bayesian NMR spectral deconvolution"};
    app.require_subcommand(1);

    FitOptions fo;
    CLI::App* fit = app.add_subcommand("fit", "Fit spectra against a multiplet catalog");
    fit->add_option("--spectra", fo.spectra_files, "Delimited text spectra (ppm + columns)");
    fit->add_option("--bruker-dir", fo.bruker_dirs, "Processed Bruker 1D directory");
    fit->add_flag("--no-header", fo.no_header, "Text inputs have no header row");
    fit->add_option("--catalog", fo.catalog_path, "Multiplet catalog CSV")->required();
    fit->add_option("--window", fo.windows, "Fit window lo:hi ppm (repeatable)");
    fit->add_option("--out", fo.out_dir, "Output directory")->required();
    fit->add_option("--workers", fo.workers, "Parallel chains")
        ->envname("SPECFIT_WORKERS")
        ->capture_default_str();
    add_model_options(fit, fo);
    fit->set_config("--options", "", "Options file with key = value lines");
    fit->allow_config_extras(false);

    std::string synth_suite, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic spectrum suite");
    synth->add_option("--suite", synth_suite, "isolated|overlapped|crowded|uncatalogued")
        ->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    std::vector<std::string> cmp_spectra;
    std::string cmp_catalog, cmp_truth, cmp_fit_dir, cmp_out;
    double cmp_pad = 0.02;
    CLI::App* compare =
        app.add_subcommand("compare", "Compare fit results and integration against truth");
    compare->add_option("--spectra", cmp_spectra, "Spectra the fits were run on")->required();
    compare->add_option("--catalog", cmp_catalog, "Multiplet catalog CSV")->required();
    compare->add_option("--truth", cmp_truth, "truth.csv from synth")->required();
    compare->add_option("--fit-dir", cmp_fit_dir, "Directory holding per-spectrum fit outputs")
        ->required();
    compare->add_option("--out", cmp_out, "comparison.csv path")->required();
    compare->add_option("--win-pad", cmp_pad, "Integration half-window, ppm")
        ->capture_default_str();

    std::string lint_catalog;
    std::vector<std::string> lint_windows;
    CLI::App* lint = app.add_subcommand("lint-catalog", "Validate and describe a catalog");
    lint->add_option("--catalog", lint_catalog, "Multiplet catalog CSV")->required();
    lint->add_option("--window", lint_windows, "Fit window lo:hi ppm (repeatable)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fit->parsed()) return cmd_fit(fo);
        if (synth->parsed()) return cmd_synth(synth_suite, synth_out);
        if (compare->parsed())
            return cmd_compare(cmp_spectra, cmp_catalog, cmp_truth, cmp_fit_dir, cmp_out,
                               cmp_pad);
        if (lint->parsed()) return cmd_lint(lint_catalog, lint_windows);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace specfit
