#include "specfit/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "specfit/errors.hpp"

namespace specfit {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& tok, int line_no) {
    std::string t = trim(tok);
    if (t.empty()) throw ParseError("empty field", line_no);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ParseError("not a number: '" + t + "'", line_no);
    return v;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void atomic_write(const std::filesystem::path& file, const std::string& text) {
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open for writing: " + tmp.string());
        out << text;
        if (!out) throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

std::vector<Spectrum> parse_text_spectra(const std::filesystem::path& file, bool has_header) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open: " + file.string());

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    // Find first non-empty line to detect the delimiter.
    char delim = '\t';
    bool found = false;
    for (const auto& l : lines) {
        if (trim(l).empty()) continue;
        delim = l.find('\t') != std::string::npos ? '\t' : ',';
        found = true;
        break;
    }
    if (!found) throw FormatError("empty file: " + file.string());

    std::vector<std::string> names;
    std::vector<double> ppm;
    std::vector<std::vector<double>> cols;
    int ncol = -1;
    bool header_pending = has_header;

    for (std::size_t k = 0; k < lines.size(); ++k) {
        int line_no = static_cast<int>(k) + 1;
        if (trim(lines[k]).empty()) continue;
        std::vector<std::string> fields = split(lines[k], delim);
        if (ncol < 0) {
            ncol = static_cast<int>(fields.size());
            if (ncol < 2) throw ParseError("need a ppm column plus at least one spectrum", line_no);
        } else if (static_cast<int>(fields.size()) != ncol) {
            throw ParseError("expected " + std::to_string(ncol) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (header_pending) {
            header_pending = false;
            for (int c = 1; c < ncol; ++c) {
                std::string name = trim(fields[c]);
                if (name.empty()) name = "spec_" + std::to_string(c);
                names.push_back(name);
            }
            continue;
        }
        if (cols.empty()) cols.resize(ncol - 1);
        ppm.push_back(parse_double(fields[0], line_no));
        for (int c = 1; c < ncol; ++c) {
            double v = parse_double(fields[c], line_no);
            if (!std::isfinite(v))
                throw ParseError("non-finite intensity", line_no);
            cols[c - 1].push_back(v);
        }
    }
    if (ppm.size() < 2) throw FormatError("fewer than 2 data rows in " + file.string());

    bool ascending = ppm[1] > ppm[0];
    for (std::size_t i = 1; i < ppm.size(); ++i) {
        bool ok = ascending ? ppm[i] > ppm[i - 1] : ppm[i] < ppm[i - 1];
        if (!ok) throw AxisError("ppm axis not strictly monotonic in " + file.string());
    }
    if (!ascending) {
        std::reverse(ppm.begin(), ppm.end());
        for (auto& c : cols) std::reverse(c.begin(), c.end());
    }

    std::vector<Spectrum> out;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        Spectrum s;
        s.id = has_header ? names[c] : "spec_" + std::to_string(c + 1);
        s.ppm = ppm;
        s.intensity = std::move(cols[c]);
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

void write_text_spectra(const std::filesystem::path& file, std::span<const Spectrum> specs) {
    if (specs.empty()) throw DomainError("no spectra to write");
    for (const auto& s : specs) {
        s.validate();
        if (s.ppm != specs[0].ppm)
            throw AxisError("spectra must share one axis to be written together");
    }
    std::ostringstream out;
    out << "ppm";
    for (const auto& s : specs) out << '\t' << s.id;
    out << '\n';
    for (std::size_t i = 0; i < specs[0].ppm.size(); ++i) {
        out << fmt_g17(specs[0].ppm[i]);
        for (const auto& s : specs) out << '\t' << fmt_g17(s.intensity[i]);
        out << '\n';
    }
    atomic_write(file, out.str());
}

namespace {

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

std::uint64_t bswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v))) << 32) |
           bswap32(static_cast<std::uint32_t>(v >> 32));
}

std::map<std::string, std::string> parse_jcamp(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open: " + file.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("##$", 0) != 0) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(line.substr(3, eq - 3));
        std::string val = trim(line.substr(eq + 1));
        kv[key] = val;
    }
    return kv;
}

double jcamp_num(const std::map<std::string, std::string>& kv, const std::string& key,
                 const std::filesystem::path& file) {
    auto it = kv.find(key);
    if (it == kv.end())
        throw FormatError("missing " + key + " in " + file.string());
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str())
        throw FormatError("bad value for " + key + " in " + file.string());
    return v;
}

}  // namespace

Spectrum parse_bruker_1d(const std::filesystem::path& dir) {
    std::filesystem::path procs = dir / "procs";
    std::filesystem::path oner = dir / "1r";
    if (!std::filesystem::exists(procs))
        throw FormatError("missing procs file in " + dir.string());
    if (!std::filesystem::exists(oner))
        throw FormatError("missing 1r file in " + dir.string());

    auto kv = parse_jcamp(procs);
    const long si = static_cast<long>(jcamp_num(kv, "SI", procs));
    const double swp = jcamp_num(kv, "SW_p", procs);
    const double offset = jcamp_num(kv, "OFFSET", procs);
    const double sf = jcamp_num(kv, "SF", procs);
    const int bytordp = static_cast<int>(jcamp_num(kv, "BYTORDP", procs));
    const int nc_proc = static_cast<int>(jcamp_num(kv, "NC_proc", procs));
    const int dtypp = kv.count("DTYPP") ? static_cast<int>(jcamp_num(kv, "DTYPP", procs)) : 0;
    if (si < 2) throw FormatError("SI < 2 in " + procs.string());
    if (sf <= 0) throw FormatError("SF must be positive in " + procs.string());

    std::ifstream in(oner, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t width = (dtypp == 2) ? 8 : 4;
    if (bytes.size() != static_cast<std::size_t>(si) * width)
        throw FormatError("1r size " + std::to_string(bytes.size()) + " does not match SI=" +
                          std::to_string(si) + " in " + dir.string());

    const bool big_endian = bytordp == 1;
    std::vector<double> raw(si);
    for (long i = 0; i < si; ++i) {
        if (width == 4) {
            std::uint32_t u;
            std::memcpy(&u, bytes.data() + i * 4, 4);
            if (big_endian != (std::endian::native == std::endian::big)) u = bswap32(u);
            raw[i] = static_cast<double>(std::bit_cast<std::int32_t>(u));
        } else {
            std::uint64_t u;
            std::memcpy(&u, bytes.data() + i * 8, 8);
            if (big_endian != (std::endian::native == std::endian::big)) u = bswap64(u);
            raw[i] = std::bit_cast<double>(u);
        }
    }

    Spectrum s;
    s.id = dir.filename().string();
    s.spectrometer_freq = sf;
    s.ppm.resize(si);
    s.intensity.resize(si);
    const double step = swp / (sf * static_cast<double>(si));
    for (long i = 0; i < si; ++i) {
        // Bruker stores the downfield end first; reverse to ascending ppm.
        long j = si - 1 - i;
        s.ppm[i] = offset - static_cast<double>(j) * step;
        s.intensity[i] = std::ldexp(raw[j], nc_proc);
    }
    s.validate();
    return s;
}

}  // namespace specfit
