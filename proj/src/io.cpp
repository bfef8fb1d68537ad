#include "phasedecoder/io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dpd {

namespace {

bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char byte;
  std::memcpy(&byte, &probe, 1);
  return byte == 1;
}

void byteswap_floats(std::vector<float>& data) {
  for (float& f : data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    bits = ((bits & 0xff000000u) >> 24) | ((bits & 0x00ff0000u) >> 8) |
           ((bits & 0x0000ff00u) << 8) | ((bits & 0x000000ffu) << 24);
    std::memcpy(&f, &bits, 4);
  }
}

// Compact viridis ramp; linear interpolation between anchors.
constexpr std::array<std::array<int, 3>, 9> kViridis = {{{68, 1, 84},
                                                         {71, 44, 122},
                                                         {59, 81, 139},
                                                         {44, 113, 142},
                                                         {33, 144, 141},
                                                         {39, 173, 129},
                                                         {92, 200, 99},
                                                         {170, 220, 50},
                                                         {253, 231, 37}}};

void viridis(double t, unsigned char rgb[3]) {
  t = std::clamp(t, 0.0, 1.0) * (kViridis.size() - 1);
  const int lo = std::min(static_cast<int>(t), static_cast<int>(kViridis.size()) - 2);
  const double w = t - lo;
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<unsigned char>(
        std::lround((1.0 - w) * kViridis[lo][c] + w * kViridis[lo + 1][c]));
  }
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const RealImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_pfm: cannot open " + path.string());
  os << "Pf\n" << image.grid.width << " " << image.grid.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.grid.width));
  for (int y = image.grid.height - 1; y >= 0; --y) {  // bottom row first
    for (int x = 0; x < image.grid.width; ++x) row[x] = static_cast<float>(image.at(y, x));
    if (!host_is_little_endian()) byteswap_floats(row);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!os) throw IoError("write_pfm: write failed for " + path.string());
}

std::pair<int, int> read_pfm_size(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_pfm: cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  is >> magic >> width >> height;
  if (magic != "Pf" || width <= 0 || height <= 0) {
    throw IoError("read_pfm: not a grayscale PFM: " + path.string());
  }
  return {width, height};
}

RealImage read_pfm(const std::filesystem::path& path, const Grid2D& grid) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_pfm: cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  is >> magic >> width >> height >> scale;
  is.get();  // single whitespace after the scale line
  if (magic != "Pf") throw IoError("read_pfm: not a grayscale PFM: " + path.string());
  if (width != grid.width || height != grid.height) {
    throw IoError("read_pfm: image size does not match grid in " + path.string());
  }

  RealImage image(grid);
  std::vector<float> row(static_cast<std::size_t>(width));
  const bool file_little = scale < 0.0;
  for (int y = height - 1; y >= 0; --y) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!is) throw IoError("read_pfm: truncated file " + path.string());
    if (file_little != host_is_little_endian()) byteswap_floats(row);
    for (int x = 0; x < width; ++x) image.at(y, x) = row[x];
  }
  return image;
}

void write_heatmap_png(const std::filesystem::path& path, const RealImage& image, double vmin,
                       double vmax, bool centered) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("write_heatmap_png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw IoError("write_heatmap_png: libpng failure for " + path.string());
  }
  png_init_io(png, fp);

  const int w = image.grid.width;
  const int h = image.grid.height;
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

  char key_cmap[] = "colormap";
  char val_cmap[] = "viridis";
  char key_range[] = "range";
  std::ostringstream range_text;
  range_text << "[" << vmin << ", " << vmax << "]";
  std::string range_str = range_text.str();
  png_text texts[2];
  std::memset(texts, 0, sizeof(texts));
  texts[0].compression = PNG_TEXT_COMPRESSION_NONE;
  texts[0].key = key_cmap;
  texts[0].text = val_cmap;
  texts[1].compression = PNG_TEXT_COMPRESSION_NONE;
  texts[1].key = key_range;
  texts[1].text = range_str.data();
  png_set_text(png, info, texts, 2);
  png_write_info(png, info);

  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  const double span = (vmax > vmin) ? (vmax - vmin) : 1.0;
  for (int y = 0; y < h; ++y) {
    const int src_y = centered ? (y + h / 2) % h : y;
    for (int x = 0; x < w; ++x) {
      const int src_x = centered ? (x + w / 2) % w : x;
      viridis((image.at(src_y, src_x) - vmin) / span, &row[static_cast<std::size_t>(x) * 3]);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<long, LossReport>>& history) {
  std::ofstream os(path);
  if (!os) throw IoError("write_loss_csv: cannot open " + path.string());
  os << "iteration,loss\n";
  for (const auto& [iteration, report] : history) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", report.total);
    os << iteration << "," << buf << "\n";
  }
  if (!os) throw IoError("write_loss_csv: write failed for " + path.string());
}

void write_zernike_csv(const std::filesystem::path& path, const Eigen::MatrixXd& coeffs) {
  std::ofstream os(path);
  if (!os) throw IoError("write_zernike_csv: cannot open " + path.string());
  for (Eigen::Index n = 0; n < coeffs.rows(); ++n) {
    os << n;
    for (Eigen::Index m = 0; m < coeffs.cols(); ++m) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", coeffs(n, m));
      os << "," << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("write_zernike_csv: write failed for " + path.string());
}

Eigen::MatrixXd read_zernike_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_zernike_csv: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        first = false;  // measurement index column
        continue;
      }
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("read_zernike_csv: empty file " + path.string());
  Eigen::MatrixXd coeffs(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (rows[n].size() != rows[0].size()) {
      throw IoError("read_zernike_csv: ragged rows in " + path.string());
    }
    for (std::size_t m = 0; m < rows[n].size(); ++m) {
      coeffs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = rows[n][m];
    }
  }
  return coeffs;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_text_file: cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_text_file: cannot open " + path.string());
  os << content;
  if (!os) throw IoError("write_text_file: write failed for " + path.string());
}

}  // namespace dpd
