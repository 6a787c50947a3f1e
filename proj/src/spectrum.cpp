#include "specfit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "specfit/errors.hpp"

namespace specfit {

std::vector<int> Spectrum::segment_lengths() const {
    std::vector<int> lens;
    const int n = size();
    for (std::size_t s = 0; s < segment_offsets.size(); ++s) {
        int end = (s + 1 < segment_offsets.size()) ? segment_offsets[s + 1] : n;
        lens.push_back(end - segment_offsets[s]);
    }
    return lens;
}

double Spectrum::max_abs_intensity() const {
    double m = 0.0;
    for (double v : intensity) m = std::max(m, std::fabs(v));
    return m;
}

void Spectrum::validate() const {
    if (ppm.size() != intensity.size())
        throw AxisError("spectrum '" + id + "': ppm and intensity lengths differ");
    if (ppm.size() < 2)
        throw AxisError("spectrum '" + id + "': needs at least 2 points");
    for (std::size_t i = 1; i < ppm.size(); ++i)
        if (!(ppm[i] > ppm[i - 1]))
            throw AxisError("spectrum '" + id + "': ppm axis not strictly ascending at index " +
                            std::to_string(i));
    for (std::size_t i = 0; i < intensity.size(); ++i)
        if (!std::isfinite(intensity[i]))
            throw AxisError("spectrum '" + id + "': non-finite intensity at index " +
                            std::to_string(i));
    if (segment_offsets.empty() || segment_offsets.front() != 0)
        throw AxisError("spectrum '" + id + "': segment offsets must start at 0");
    for (std::size_t s = 1; s < segment_offsets.size(); ++s)
        if (segment_offsets[s] <= segment_offsets[s - 1] ||
            segment_offsets[s] >= static_cast<int>(ppm.size()))
            throw AxisError("spectrum '" + id + "': bad segment offsets");
}

PpmWindow PpmWindow::all() {
    PpmWindow w;
    w.intervals.emplace_back(-std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity());
    return w;
}

PpmWindow PpmWindow::single(double lo, double hi) {
    PpmWindow w;
    w.add(lo, hi);
    w.normalize();
    return w;
}

void PpmWindow::add(double lo, double hi) { intervals.emplace_back(lo, hi); }

bool PpmWindow::contains(double x) const {
    for (const auto& [lo, hi] : intervals)
        if (x >= lo && x <= hi) return true;
    return false;
}

void PpmWindow::normalize() {
    for (const auto& [lo, hi] : intervals)
        if (!(lo < hi))
            throw DomainError("window interval must have lo < hi");
    std::sort(intervals.begin(), intervals.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : intervals) {
        if (!merged.empty() && iv.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, iv.second);
        else
            merged.push_back(iv);
    }
    intervals = std::move(merged);
}

Spectrum restrict_window(const Spectrum& spec, const PpmWindow& win) {
    PpmWindow w = win;
    w.normalize();
    Spectrum out;
    out.id = spec.id;
    out.spectrometer_freq = spec.spectrometer_freq;
    out.segment_offsets.clear();
    for (const auto& [lo, hi] : w.intervals) {
        auto first = std::lower_bound(spec.ppm.begin(), spec.ppm.end(), lo);
        auto last = std::upper_bound(spec.ppm.begin(), spec.ppm.end(), hi);
        if (first >= last) continue;
        out.segment_offsets.push_back(static_cast<int>(out.ppm.size()));
        for (auto it = first; it != last; ++it) {
            std::size_t idx = static_cast<std::size_t>(it - spec.ppm.begin());
            out.ppm.push_back(spec.ppm[idx]);
            out.intensity.push_back(spec.intensity[idx]);
        }
    }
    if (out.ppm.empty())
        throw EmptyWindowError("window selects no points of spectrum '" + spec.id + "'");
    if (out.segment_offsets.empty()) out.segment_offsets.push_back(0);
    return out;
}

namespace {

// Linear interpolation of (xs, ys) onto x; x must lie in [xs.front(), xs.back()].
double interp_at(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    std::size_t j = static_cast<std::size_t>(it - xs.begin());
    if (xs[j] == x) return ys[j];
    if (j == 0) return ys.front();
    double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

}  // namespace

std::vector<Spectrum> common_axis(const std::vector<Spectrum>& specs) {
    if (specs.empty()) throw DomainError("common_axis: no spectra");
    for (const auto& s : specs) s.validate();

    bool same = true;
    for (std::size_t k = 1; k < specs.size() && same; ++k)
        same = specs[k].ppm == specs[0].ppm;
    if (same) return specs;

    double lo = specs[0].ppm.front();
    double hi = specs[0].ppm.back();
    for (const auto& s : specs) {
        lo = std::max(lo, s.ppm.front());
        hi = std::min(hi, s.ppm.back());
    }
    if (!(lo <= hi)) throw AxisError("spectra share no ppm range");

    // Target axis: the first spectrum's points inside the shared range,
    // keeping its segmentation.
    std::vector<double> target;
    std::vector<int> target_offsets;
    const auto& ref = specs[0];
    std::vector<int> ref_lens = ref.segment_lengths();
    int pos = 0;
    for (std::size_t s = 0; s < ref_lens.size(); ++s) {
        int kept_start = -1;
        for (int i = 0; i < ref_lens[s]; ++i, ++pos) {
            double x = ref.ppm[pos];
            if (x < lo || x > hi) continue;
            if (kept_start < 0) {
                kept_start = static_cast<int>(target.size());
                target_offsets.push_back(kept_start);
            }
            target.push_back(x);
        }
    }
    if (target.size() < 2) throw AxisError("shared ppm range holds fewer than 2 points");

    std::vector<Spectrum> out;
    out.reserve(specs.size());
    for (const auto& s : specs) {
        Spectrum r;
        r.id = s.id;
        r.spectrometer_freq = s.spectrometer_freq;
        r.ppm = target;
        r.segment_offsets = target_offsets;
        r.intensity.resize(target.size());
        for (std::size_t i = 0; i < target.size(); ++i)
            r.intensity[i] = interp_at(s.ppm, s.intensity, target[i]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace specfit
