#ifndef PHASEDECODER_IO_HPP
#define PHASEDECODER_IO_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "phasedecoder/field.hpp"
#include "phasedecoder/grad.hpp"

namespace dpd {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grayscale PFM (portable float map): "Pf", dimensions, scale -1.0
// (little-endian), rows bottom-to-top, 32-bit floats. Deterministic byte
// layout; doubles are rounded to float on write.
void write_pfm(const std::filesystem::path& path, const RealImage& image);
RealImage read_pfm(const std::filesystem::path& path, const Grid2D& grid);
std::pair<int, int> read_pfm_size(const std::filesystem::path& path);

/// 8-bit RGB viridis heatmap with fixed value range [vmin, vmax]; the range
/// and colormap name are recorded in PNG text chunks. `centered` moves DC to
/// the image center (for frequency-plane maps).
void write_heatmap_png(const std::filesystem::path& path, const RealImage& image, double vmin,
                       double vmax, bool centered = false);

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<long, LossReport>>& history);

/// Rows of "measurement_index,c1,...,cM".
void write_zernike_csv(const std::filesystem::path& path, const Eigen::MatrixXd& coeffs);
Eigen::MatrixXd read_zernike_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dpd

#endif
