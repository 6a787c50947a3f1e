#include "specfit/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "specfit/errors.hpp"
#include "specfit/io.hpp"

namespace specfit {

double Multiplet::min_offset() const {
    double m = 0.0;
    for (const auto& p : peaks) m = std::min(m, p.offset_ppm);
    return m;
}

double Multiplet::max_offset() const {
    double m = 0.0;
    for (const auto& p : peaks) m = std::max(m, p.offset_ppm);
    return m;
}

int TemplateCatalog::n_multiplets() const {
    int n = 0;
    for (const auto& m : metabolites) n += static_cast<int>(m.multiplets.size());
    return n;
}

const Metabolite* TemplateCatalog::find(const std::string& name) const {
    for (const auto& m : metabolites)
        if (m.name == name) return &m;
    return nullptr;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double num_field(const std::string& tok, const std::string& col, int line_no) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size())
        throw ParseError("column " + col + ": not a number: '" + tok + "'", line_no);
    return v;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TemplateCatalog load_catalog(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw CatalogError("cannot open catalog: " + file.string());

    std::string line;
    int line_no = 0;
    std::map<std::string, int> col;
    TemplateCatalog cat;
    // (metabolite index, multiplet index) keyed by (name, multiplet id)
    std::map<std::pair<std::string, std::string>, std::pair<int, int>> where;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> f = split_csv(line);
        if (col.empty()) {
            for (std::size_t i = 0; i < f.size(); ++i) col[f[i]] = static_cast<int>(i);
            for (const char* req : {"metabolite", "multiplet_id", "center_ppm",
                                    "peak_offset_ppm", "rel_area", "proton_count"})
                if (!col.count(req))
                    throw CatalogError("catalog header missing column '" + std::string(req) +
                                       "' in " + file.string());
            continue;
        }
        auto field = [&](const char* name) -> const std::string& {
            int i = col.at(name);
            if (i >= static_cast<int>(f.size()))
                throw ParseError(std::string("row too short for column ") + name, line_no);
            return f[i];
        };
        std::string met = field("metabolite");
        std::string mid = field("multiplet_id");
        if (met.empty() || mid.empty())
            throw ParseError("empty metabolite or multiplet_id", line_no);
        double center = num_field(field("center_ppm"), "center_ppm", line_no);
        double offset = num_field(field("peak_offset_ppm"), "peak_offset_ppm", line_no);
        double area = num_field(field("rel_area"), "rel_area", line_no);
        double protons = num_field(field("proton_count"), "proton_count", line_no);
        double bound = 0.03;
        if (col.count("shift_bound") && col.at("shift_bound") < static_cast<int>(f.size())) {
            const std::string& sb = f[col.at("shift_bound")];
            if (!sb.empty()) bound = num_field(sb, "shift_bound", line_no);
        }
        if (area <= 0) throw CatalogError("rel_area must be positive (line " +
                                          std::to_string(line_no) + ")");
        if (protons <= 0) throw CatalogError("proton_count must be positive (line " +
                                             std::to_string(line_no) + ")");
        if (bound <= 0) throw CatalogError("shift_bound must be positive (line " +
                                           std::to_string(line_no) + ")");

        auto key = std::make_pair(met, mid);
        auto it = where.find(key);
        if (it == where.end()) {
            int mi = -1;
            for (std::size_t k = 0; k < cat.metabolites.size(); ++k)
                if (cat.metabolites[k].name == met) mi = static_cast<int>(k);
            if (mi < 0) {
                mi = static_cast<int>(cat.metabolites.size());
                cat.metabolites.push_back({met, {}});
            }
            Multiplet mu;
            mu.id = mid;
            mu.center_ppm = center;
            mu.proton_count = protons;
            mu.shift_bound = bound;
            cat.metabolites[mi].multiplets.push_back(std::move(mu));
            it = where.emplace(key, std::make_pair(mi, static_cast<int>(
                cat.metabolites[mi].multiplets.size()) - 1)).first;
        }
        Multiplet& mu = cat.metabolites[it->second.first].multiplets[it->second.second];
        if (mu.center_ppm != center || mu.proton_count != protons || mu.shift_bound != bound)
            throw CatalogError("multiplet " + met + ":" + mid +
                               " has inconsistent center/protons/bound (line " +
                               std::to_string(line_no) + ")");
        for (const auto& p : mu.peaks)
            if (p.offset_ppm == offset)
                throw CatalogError("duplicate peak offset in " + met + ":" + mid + " (line " +
                                   std::to_string(line_no) + ")");
        mu.peaks.push_back({offset, area});
    }
    if (cat.metabolites.empty())
        throw CatalogError("catalog has no data rows: " + file.string());

    // Normalize areas: each multiplet integrates to its proton count.
    for (auto& m : cat.metabolites)
        for (auto& mu : m.multiplets) {
            double total = 0.0;
            for (const auto& p : mu.peaks) total += p.rel_area;
            for (auto& p : mu.peaks) p.rel_area *= mu.proton_count / total;
        }
    return cat;
}

void write_catalog(const std::filesystem::path& file, const TemplateCatalog& cat) {
    std::ostringstream out;
    out << "metabolite,multiplet_id,center_ppm,peak_offset_ppm,rel_area,proton_count,shift_bound\n";
    for (const auto& m : cat.metabolites)
        for (const auto& mu : m.multiplets)
            for (const auto& p : mu.peaks)
                out << m.name << ',' << mu.id << ',' << fmt_g17(mu.center_ppm) << ','
                    << fmt_g17(p.offset_ppm) << ',' << fmt_g17(p.rel_area) << ','
                    << fmt_g17(mu.proton_count) << ',' << fmt_g17(mu.shift_bound) << '\n';
    atomic_write(file, out.str());
}

std::string describe_catalog(const TemplateCatalog& cat) {
    std::ostringstream out;
    out << cat.n_metabolites() << " metabolites, " << cat.n_multiplets() << " multiplets\n";
    for (const auto& m : cat.metabolites) {
        out << m.name << "\n";
        for (const auto& mu : m.multiplets) {
            out << "  " << mu.id << ": center " << mu.center_ppm << " ppm, " << mu.peaks.size()
                << (mu.peaks.size() == 1 ? " line" : " lines") << ", protons " << mu.proton_count
                << ", shift bound " << mu.shift_bound << ", span [" << mu.center_ppm + mu.min_offset()
                << ", " << mu.center_ppm + mu.max_offset() << "]\n";
        }
    }
    return out.str();
}

}  // namespace specfit
