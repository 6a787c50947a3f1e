#ifndef SPECFIT_IO_HPP_
#define SPECFIT_IO_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "specfit/spectrum.hpp"

namespace specfit {

// Delimited text matrix: first column ppm, remaining columns one spectrum
// each. Delimiter (tab or comma) is auto-detected from the first data line.
// With has_header the first row names the spectra; otherwise columns are
// named spec_1, spec_2, ... A descending axis is reversed to ascending.
std::vector<Spectrum> parse_text_spectra(const std::filesystem::path& file, bool has_header);

// Inverse of parse_text_spectra (tab-delimited, %.17g, header row). All
// spectra must share the same axis.
void write_text_spectra(const std::filesystem::path& file, std::span<const Spectrum> specs);

// Processed Bruker 1D directory: reads `procs` (JCAMP-DX key/value) and the
// `1r` intensity file it describes. ppm[i] = OFFSET - i * SW_p / (SF * SI),
// intensities scaled by 2^NC_proc; result is reversed to an ascending axis.
Spectrum parse_bruker_1d(const std::filesystem::path& dir);

// Write `text` to `file` atomically (temp file + rename).
void atomic_write(const std::filesystem::path& file, const std::string& text);

}  // namespace specfit

#endif  // SPECFIT_IO_HPP_
