#include "nvmag/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& field, std::size_t line_number) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    std::ostringstream msg;
    msg << "line " << line_number << ": '" << field << "' is not a number";
    throw Error(ErrorCode::ParseError, msg.str());
  }
  return value;
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    std::string t = trim(line);
    if (!t.empty()) lines.push_back(t);
  }
  return lines;
}

std::string format(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::string scan_image_to_csv(const ScanImage& image) {
  image.grid.validate();
  std::ostringstream out;
  out << "width,height,pitch_nm,origin_x_nm,origin_y_nm\n";
  out << image.grid.width_px << ',' << image.grid.height_px << ',' << format(image.grid.pitch_nm) << ','
      << format(image.grid.origin_nm.x()) << ',' << format(image.grid.origin_nm.y()) << '\n';
  for (int row = 0; row < image.grid.height_px; ++row) {
    for (int col = 0; col < image.grid.width_px; ++col) {
      if (col) out << ',';
      out << format(image.at(col, row));
    }
    out << '\n';
  }
  return out.str();
}

ScanImage scan_image_from_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.size() < 2) throw Error(ErrorCode::ParseError, "scan CSV needs a header and a metadata row");
  const auto header = split_fields(lines[0]);
  const std::vector<std::string> expected{"width", "height", "pitch_nm", "origin_x_nm", "origin_y_nm"};
  if (header != expected) throw Error(ErrorCode::ParseError, "unexpected scan CSV header");
  const auto meta = split_fields(lines[1]);
  if (meta.size() != 5) throw Error(ErrorCode::ParseError, "scan CSV metadata row needs 5 fields");

  ScanImage image;
  const double width = parse_double(meta[0], 2);
  const double height = parse_double(meta[1], 2);
  if (width != std::floor(width) || height != std::floor(height) || width < 1 || height < 1 ||
      width * height > static_cast<double>(kMaxScanPixels)) {
    throw Error(ErrorCode::ParseError, "scan CSV dimensions must be positive integers within the pixel limit");
  }
  image.grid.width_px = static_cast<int>(width);
  image.grid.height_px = static_cast<int>(height);
  image.grid.pitch_nm = parse_double(meta[2], 2);
  image.grid.origin_nm = {parse_double(meta[3], 2), parse_double(meta[4], 2)};
  if (lines.size() != static_cast<std::size_t>(image.grid.height_px) + 2) {
    std::ostringstream msg;
    msg << "expected " << image.grid.height_px << " data rows, found " << lines.size() - 2;
    throw Error(ErrorCode::ParseError, msg.str());
  }
  image.values.reserve(image.grid.pixel_count());
  for (std::size_t r = 2; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != static_cast<std::size_t>(image.grid.width_px)) {
      std::ostringstream msg;
      msg << "line " << r + 1 << ": expected " << image.grid.width_px << " values, found " << fields.size();
      throw Error(ErrorCode::ParseError, msg.str());
    }
    for (const auto& f : fields) image.values.push_back(parse_double(f, r + 1));
  }
  try {
    image.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return image;
}

std::string spectrum_to_csv(const Spectrum& spectrum) {
  std::ostringstream out;
  out << "frequency_MHz,contrast\n";
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    out << format(spectrum.frequencies[i]) << ',' << format(spectrum.contrast[i]) << '\n';
  }
  return out.str();
}

Spectrum spectrum_from_csv(const std::string& text) {
  const auto lines = nonempty_lines(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty spectrum file");
  std::size_t first = 0;
  if (split_fields(lines[0]) == std::vector<std::string>{"frequency_MHz", "contrast"}) first = 1;
  Spectrum spectrum;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 2) {
      std::ostringstream msg;
      msg << "line " << i + 1 << ": expected 2 columns";
      throw Error(ErrorCode::ParseError, msg.str());
    }
    spectrum.frequencies.push_back(parse_double(fields[0], i + 1));
    spectrum.contrast.push_back(parse_double(fields[1], i + 1));
  }
  try {
    spectrum.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return spectrum;
}

std::string scan_image_to_pgm(const ScanImage& image, int bits, GraymapScaling& scaling) {
  if (bits != 8 && bits != 16) throw Error(ErrorCode::InvalidArgument, "graymap depth must be 8 or 16 bits");
  image.validate();
  const auto [lo, hi] = std::minmax_element(image.values.begin(), image.values.end());
  scaling.min = *lo;
  scaling.max = *hi;
  scaling.max_value = bits == 8 ? 255 : 65535;
  const double range = scaling.max - scaling.min;

  std::string out = "P5\n" + std::to_string(image.grid.width_px) + " " + std::to_string(image.grid.height_px) +
                    "\n" + std::to_string(scaling.max_value) + "\n";
  for (double v : image.values) {
    const double unit = range > 0.0 ? (v - scaling.min) / range : 0.0;
    const auto level = static_cast<unsigned>(std::lround(unit * scaling.max_value));
    if (bits == 16) out.push_back(static_cast<char>((level >> 8) & 0xFF));
    out.push_back(static_cast<char>(level & 0xFF));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + temp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

}  // namespace nvmag
