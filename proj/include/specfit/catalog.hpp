#ifndef SPECFIT_CATALOG_HPP_
#define SPECFIT_CATALOG_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace specfit {

struct LorentzianPeak {
    double offset_ppm = 0.0;  // relative to the multiplet center
    double rel_area = 0.0;    // after loading: absolute area, sums to proton_count
};

struct Multiplet {
    std::string id;
    double center_ppm = 0.0;
    double proton_count = 0.0;
    double shift_bound = 0.03;  // max |sigma| in ppm
    std::vector<LorentzianPeak> peaks;

    double min_offset() const;
    double max_offset() const;
};

struct Metabolite {
    std::string name;
    std::vector<Multiplet> multiplets;
};

struct TemplateCatalog {
    std::vector<Metabolite> metabolites;

    int n_metabolites() const { return static_cast<int>(metabolites.size()); }
    int n_multiplets() const;

    const Metabolite* find(const std::string& name) const;
};

// CSV with a header row naming at least: metabolite, multiplet_id,
// center_ppm, peak_offset_ppm, rel_area, proton_count. Optional column
// shift_bound (default 0.03). One row per Lorentzian line; rows group by
// (metabolite, multiplet_id) preserving first-appearance order; rel_area
// is rescaled so each multiplet's areas sum to its proton_count.
TemplateCatalog load_catalog(const std::filesystem::path& file);

// Inverse of load_catalog (stores the normalized areas).
void write_catalog(const std::filesystem::path& file, const TemplateCatalog& cat);

// Human-readable per-multiplet listing used by the lint command.
std::string describe_catalog(const TemplateCatalog& cat);

}  // namespace specfit

#endif  // SPECFIT_CATALOG_HPP_
