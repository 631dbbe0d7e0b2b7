#pragma once

#include <filesystem>
#include <string>

#include "nvmag/odmr.hpp"
#include "nvmag/pattern.hpp"

namespace nvmag {

// Scan CSV layout:
//   width,height,pitch_nm,origin_x_nm,origin_y_nm
//   <w>,<h>,<pitch>,<ox>,<oy>
//   then h rows of w comma-separated values (row-major)
std::string scan_image_to_csv(const ScanImage& image);
ScanImage scan_image_from_csv(const std::string& text);

// Spectrum CSV: header "frequency_MHz,contrast", one sample per line.
std::string spectrum_to_csv(const Spectrum& spectrum);
Spectrum spectrum_from_csv(const std::string& text);

struct GraymapScaling {
  double min = 0.0;
  double max = 0.0;
  int max_value = 65535;
};

// Binary PGM (P5), values min-max scaled to 8 or 16 bits (16-bit big-endian).
std::string scan_image_to_pgm(const ScanImage& image, int bits, GraymapScaling& scaling);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace nvmag
