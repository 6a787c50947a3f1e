#include "specfit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "specfit/errors.hpp"
#include "specfit/io.hpp"
#include "specfit/render.hpp"
#include "specfit/rng.hpp"

namespace specfit {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void add_lorentzian(std::vector<double>& y, std::span<const double> grid, double center,
                    double gamma, double area) {
    const double radius = kLineTruncationRadius * gamma;
    auto first = std::lower_bound(grid.begin(), grid.end(), center - radius);
    auto last = std::upper_bound(grid.begin(), grid.end(), center + radius);
    const double scale = area * gamma / std::numbers::pi;
    const double g2 = gamma * gamma;
    for (auto it = first; it != last; ++it) {
        double d = *it - center;
        y[it - grid.begin()] += scale / (d * d + g2);
    }
}

std::vector<double> noiseless_signal(const SynthSpec& s) {
    std::vector<double> y(s.grid.size(), 0.0);
    std::vector<FlatMultiplet> flat = flatten(s.catalog);
    for (std::size_t u = 0; u < flat.size(); ++u) {
        int m = flat[u].metabolite;
        if (s.true_beta[m] == 0.0) continue;
        std::vector<double> t =
            render_multiplet(*flat[u].mult, s.true_sigma[u], s.true_gamma[m], s.grid);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += s.true_beta[m] * t[i];
    }
    for (const auto& e : s.extras) add_lorentzian(y, s.grid, e.center_ppm, e.gamma, e.area);
    return y;
}

}  // namespace

void SynthSpec::validate() const {
    if (grid.size() < 2) throw DomainError("synth grid needs at least 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("synth grid must be ascending");
    if (true_beta.size() != static_cast<std::size_t>(catalog.n_metabolites()) ||
        true_gamma.size() != true_beta.size() ||
        true_sigma.size() != static_cast<std::size_t>(catalog.n_multiplets()))
        throw DomainError("synth truth vectors do not match the catalog");
    for (double b : true_beta)
        if (!(b >= 0)) throw DomainError("true_beta must be nonnegative");
    for (double g : true_gamma)
        if (!(g > 0)) throw DomainError("true_gamma must be positive");
    if (!(noise_sd >= 0)) throw DomainError("noise_sd must be nonnegative");
}

std::pair<Spectrum, TruthRecord> generate(const SynthSpec& s) {
    s.validate();
    Spectrum out;
    out.id = s.id;
    out.ppm = s.grid;
    out.intensity = noiseless_signal(s);
    if (s.noise_sd > 0) {
        Rng rng(s.seed);
        for (auto& v : out.intensity) v += s.noise_sd * rng.normal();
    }

    TruthRecord tr;
    tr.id = s.id;
    for (const auto& met : s.catalog.metabolites) tr.metabolite_names.push_back(met.name);
    for (const auto& fm : flatten(s.catalog))
        tr.multiplet_labels.push_back(s.catalog.metabolites[fm.metabolite].name + ":" +
                                      fm.mult->id);
    tr.beta = s.true_beta;
    tr.sigma = s.true_sigma;
    tr.gamma = s.true_gamma;
    tr.extras = s.extras;
    tr.noise_sd = s.noise_sd;
    tr.seed = s.seed;
    return {std::move(out), std::move(tr)};
}

namespace {

struct PatternRow {
    const char* metabolite;
    const char* mult;
    double center;
    double offset;
    double area;
    double protons;
    double bound = 0.03;
};

TemplateCatalog catalog_from_rows(std::span<const PatternRow> rows) {
    TemplateCatalog cat;
    for (const auto& r : rows) {
        Metabolite* met = nullptr;
        for (auto& m : cat.metabolites)
            if (m.name == r.metabolite) met = &m;
        if (!met) {
            cat.metabolites.push_back({r.metabolite, {}});
            met = &cat.metabolites.back();
        }
        Multiplet* mu = nullptr;
        for (auto& x : met->multiplets)
            if (x.id == r.mult) mu = &x;
        if (!mu) {
            Multiplet next;
            next.id = r.mult;
            next.center_ppm = r.center;
            next.proton_count = r.protons;
            next.shift_bound = r.bound;
            met->multiplets.push_back(std::move(next));
            mu = &met->multiplets.back();
        }
        mu->peaks.push_back({r.offset, r.area});
    }
    for (auto& m : cat.metabolites)
        for (auto& mu : m.multiplets) {
            double total = 0.0;
            for (const auto& p : mu.peaks) total += p.rel_area;
            for (auto& p : mu.peaks) p.rel_area *= mu.proton_count / total;
        }
    return cat;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return g;
}

TemplateCatalog isolated_catalog() {
    const PatternRow rows[] = {
        {"ala", "s1", 1.00, 0.0, 1.0, 2.0},
        {"cit", "s1", 2.50, 0.0, 1.0, 2.0},
        {"gly", "s1", 4.00, 0.0, 1.0, 3.0},
    };
    return catalog_from_rows(rows);
}

TemplateCatalog overlapped_catalog() {
    // Three patterns packed into ~0.03 ppm: every pair of multiplets shares
    // most of its support, but distinct couplings keep the closest pair of
    // lines ~3 mppm (one linewidth) apart, so the mixture stays
    // identifiable. Tight shift bounds rule out whole-pattern swaps.
    const PatternRow rows[] = {
        {"met_a", "s1", 3.2400, 0.0000, 1.0, 2.0, 0.006},
        {"met_b", "d1", 3.2455, -0.0095, 1.0, 2.0, 0.006},
        {"met_b", "d1", 3.2455, 0.0095, 1.0, 2.0, 0.006},
        {"met_c", "t1", 3.2505, -0.0075, 1.0, 3.0, 0.006},
        {"met_c", "t1", 3.2505, 0.0000, 2.0, 3.0, 0.006},
        {"met_c", "t1", 3.2505, 0.0075, 1.0, 3.0, 0.006},
    };
    return catalog_from_rows(rows);
}

TemplateCatalog crowded_catalog() {
    std::vector<PatternRow> rows;
    std::vector<std::string> names;
    for (int k = 0; k < 11; ++k) names.push_back("met_" + std::to_string(k + 1));
    for (int k = 0; k < 11; ++k) {
        double c = 2.40 + 0.16 * k;
        const char* name = names[k].c_str();
        switch (k % 3) {
            case 0:
                rows.push_back({name, "s1", c, 0.0, 1.0, 2.0});
                break;
            case 1:
                rows.push_back({name, "d1", c, -0.005, 1.0, 2.0});
                rows.push_back({name, "d1", c, 0.005, 1.0, 2.0});
                break;
            default:
                rows.push_back({name, "t1", c, -0.005, 1.0, 3.0});
                rows.push_back({name, "t1", c, 0.000, 2.0, 3.0});
                rows.push_back({name, "t1", c, 0.005, 1.0, 3.0});
                break;
        }
    }
    return catalog_from_rows(rows);
}

std::vector<ExtraPeak> uncatalogued_extras() {
    return {{3.06, 0.0015, 1.0},
            {3.12, 0.0020, 1.2},
            {3.35, 0.0015, 0.8},
            {3.44, 0.0018, 1.0},
            {3.52, 0.0015, 1.5}};
}

SynthSpec draw_spec(const std::string& id, const TemplateCatalog& cat, std::vector<double> grid,
                    std::uint64_t seed, std::vector<ExtraPeak> extras) {
    SynthSpec s;
    s.id = id;
    s.catalog = cat;
    s.grid = std::move(grid);
    s.seed = seed;
    s.extras = std::move(extras);

    Rng rng(seed);
    const int M = cat.n_metabolites();
    const int U = cat.n_multiplets();
    s.true_beta.resize(M);
    s.true_gamma.resize(M);
    s.true_sigma.resize(U);
    for (int m = 0; m < M; ++m) s.true_beta[m] = 0.5 + 1.5 * rng.uniform();
    // True shifts stay well inside each multiplet's catalogued bound.
    {
        int u = 0;
        for (const auto& met : cat.metabolites)
            for (const auto& mu : met.multiplets) {
                double r = mu.shift_bound / 4.0;
                s.true_sigma[u++] = -r + 2.0 * r * rng.uniform();
            }
    }
    for (int m = 0; m < M; ++m)
        s.true_gamma[m] = std::exp(std::log(0.0015) - 0.2 + 0.4 * rng.uniform());

    // Noise at 2% of the tallest noiseless feature.
    std::vector<double> clean = noiseless_signal(s);
    double peak = 0.0;
    for (double v : clean) peak = std::max(peak, std::fabs(v));
    s.noise_sd = 0.02 * peak;
    return s;
}

}  // namespace

TemplateCatalog suite_catalog(const std::string& name) {
    if (name == "isolated") return isolated_catalog();
    if (name == "overlapped" || name == "uncatalogued") return overlapped_catalog();
    if (name == "crowded") return crowded_catalog();
    throw ConfigError("unknown suite '" + name + "'");
}

std::vector<SynthSpec> standard_suite(const std::string& name) {
    TemplateCatalog cat = suite_catalog(name);
    std::vector<SynthSpec> out;
    auto make_ids = [](const std::string& prefix, int count) {
        std::vector<std::string> ids;
        for (int k = 1; k <= count; ++k) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s_%02d", prefix.c_str(), k);
            ids.emplace_back(buf);
        }
        return ids;
    };

    if (name == "isolated") {
        std::vector<double> grid = uniform_grid(0.5, 4.5, 8001);
        auto ids = make_ids(name, 8);
        for (std::size_t k = 0; k < ids.size(); ++k)
            out.push_back(draw_spec(ids[k], cat, grid, 9001 + k, {}));
    } else if (name == "overlapped" || name == "uncatalogued") {
        std::vector<double> grid = uniform_grid(3.0, 3.6, 1201);
        auto ids = make_ids(name, 20);
        // Same seeds for both suites so the truths pair up spectrum for
        // spectrum; only the extras differ.
        std::vector<ExtraPeak> extras =
            name == "uncatalogued" ? uncatalogued_extras() : std::vector<ExtraPeak>{};
        for (std::size_t k = 0; k < ids.size(); ++k)
            out.push_back(draw_spec(ids[k], cat, grid, 7101 + k, extras));
    } else if (name == "crowded") {
        std::vector<double> grid = uniform_grid(2.3, 4.1, 4601);
        auto ids = make_ids(name, 8);
        for (std::size_t k = 0; k < ids.size(); ++k)
            out.push_back(draw_spec(ids[k], cat, grid, 5301 + k, {}));
    } else {
        throw ConfigError("unknown suite '" + name + "'");
    }
    return out;
}

void write_truth_csv(const std::filesystem::path& file, std::span<const TruthRecord> records) {
    std::ostringstream out;
    out << "spectrum,kind,name,value\n";
    for (const auto& tr : records) {
        for (std::size_t m = 0; m < tr.metabolite_names.size(); ++m) {
            out << tr.id << ",beta," << tr.metabolite_names[m] << ',' << fmt_g17(tr.beta[m])
                << '\n';
            out << tr.id << ",gamma," << tr.metabolite_names[m] << ',' << fmt_g17(tr.gamma[m])
                << '\n';
        }
        for (std::size_t u = 0; u < tr.multiplet_labels.size(); ++u)
            out << tr.id << ",sigma," << tr.multiplet_labels[u] << ',' << fmt_g17(tr.sigma[u])
                << '\n';
        for (std::size_t e = 0; e < tr.extras.size(); ++e) {
            std::string tag = "extra_" + std::to_string(e + 1);
            out << tr.id << ",extra_center," << tag << ',' << fmt_g17(tr.extras[e].center_ppm)
                << '\n';
            out << tr.id << ",extra_gamma," << tag << ',' << fmt_g17(tr.extras[e].gamma) << '\n';
            out << tr.id << ",extra_area," << tag << ',' << fmt_g17(tr.extras[e].area) << '\n';
        }
        out << tr.id << ",noise_sd,-," << fmt_g17(tr.noise_sd) << '\n';
        out << tr.id << ",seed,-," << tr.seed << '\n';
    }
    atomic_write(file, out.str());
}

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open truth file: " + file.string());
    std::vector<TruthRecord> out;
    std::map<std::string, std::size_t> index;
    std::string line;
    int line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                f.push_back(line.substr(start));
                break;
            }
            f.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (f.size() != 4) throw ParseError("truth row needs 4 fields", line_no);
        auto it = index.find(f[0]);
        if (it == index.end()) {
            index[f[0]] = out.size();
            out.push_back({});
            out.back().id = f[0];
            it = index.find(f[0]);
        }
        TruthRecord& tr = out[it->second];
        const std::string& kind = f[1];
        const std::string& tag = f[2];
        char* end = nullptr;
        double val = std::strtod(f[3].c_str(), &end);
        if (kind == "beta") {
            tr.metabolite_names.push_back(tag);
            tr.beta.push_back(val);
        } else if (kind == "gamma") {
            tr.gamma.push_back(val);
        } else if (kind == "sigma") {
            tr.multiplet_labels.push_back(tag);
            tr.sigma.push_back(val);
        } else if (kind == "extra_center") {
            tr.extras.push_back({val, 0.0, 0.0});
        } else if (kind == "extra_gamma") {
            tr.extras.back().gamma = val;
        } else if (kind == "extra_area") {
            tr.extras.back().area = val;
        } else if (kind == "noise_sd") {
            tr.noise_sd = val;
        } else if (kind == "seed") {
            tr.seed = std::strtoull(f[3].c_str(), nullptr, 10);
        } else {
            throw ParseError("unknown truth kind '" + kind + "'", line_no);
        }
    }
    return out;
}

}  // namespace specfit
