#pragma once

#include <filesystem>
#include <string>

#include "mothvision/geometry.hpp"
#include "mothvision/tensor.hpp"

namespace moth {

// Planar RGB image, values in [0, 1]. chw has shape [3][height][width].
struct Image {
  Tensor chw;

  Image() = default;
  Image(int width, int height) : chw(Tensor({3, height, width})) {}

  int width() const { return chw.empty() ? 0 : chw.dim(2); }
  int height() const { return chw.empty() ? 0 : chw.dim(1); }

  double& at(int c, int y, int x) { return chw(c, y, x); }
  double at(int c, int y, int x) const { return chw(c, y, x); }
};

// Binary PPM (P6, 8-bit). Values are clamped and rounded on write, so a
// save/load round trip quantizes to 1/255 steps.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

// Header-only probe: returns (width, height) and checks that the file size
// matches the advertised payload. Throws on malformed files.
std::pair<int, int> probe_ppm(const std::filesystem::path& path);

Image resize_image(const Image& img, int width, int height);

// Pixel-rect crop of a continuous box: covers [floor(x_min), ceil(x_max)) x
// [floor(y_min), ceil(y_max)), clamped to the image, at least 1x1.
Image crop_image(const Image& img, const BoundingBox& box);

// Drawing helpers for the visualize command.
void draw_rect(Image& img, const BoundingBox& box, double r, double g, double b,
               int thickness = 1);
Image heatmap_to_image(const Tensor& map);  // [H][W] in [0,1] -> color ramp

}  // namespace moth
