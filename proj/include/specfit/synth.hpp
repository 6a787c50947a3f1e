#ifndef SPECFIT_SYNTH_HPP_
#define SPECFIT_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "specfit/catalog.hpp"
#include "specfit/spectrum.hpp"

namespace specfit {

// An interfering Lorentzian absent from the catalog.
struct ExtraPeak {
    double center_ppm = 0.0;
    double gamma = 0.0;
    double area = 0.0;
};

struct SynthSpec {
    std::string id;
    TemplateCatalog catalog;
    std::vector<double> true_beta;   // per metabolite
    std::vector<double> true_sigma;  // per multiplet, flattened catalog order
    std::vector<double> true_gamma;  // per metabolite
    std::vector<ExtraPeak> extras;
    double noise_sd = 0.0;
    std::vector<double> grid;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TruthRecord {
    std::string id;
    std::vector<std::string> metabolite_names;
    std::vector<double> beta;
    std::vector<std::string> multiplet_labels;
    std::vector<double> sigma;
    std::vector<double> gamma;
    std::vector<ExtraPeak> extras;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
};

// y = sum of scaled templates + extra peaks + white noise(noise_sd).
std::pair<Spectrum, TruthRecord> generate(const SynthSpec& s);

// Deterministic test suites: isolated (3 metabolites, disjoint),
// overlapped (3 metabolites with heavy multiplet overlap), crowded
// (11 metabolites in a 1.8 ppm window), uncatalogued (overlapped truths
// plus 5 extra peaks). ConfigError on unknown name.
std::vector<SynthSpec> standard_suite(const std::string& name);
TemplateCatalog suite_catalog(const std::string& name);

void write_truth_csv(const std::filesystem::path& file, std::span<const TruthRecord> records);
std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& file);

}  // namespace specfit

#endif  // SPECFIT_SYNTH_HPP_
