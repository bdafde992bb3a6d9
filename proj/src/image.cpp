#include "mothvision/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "mothvision/kernels.hpp"

namespace moth {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

// Reads the P6 header; leaves the stream right after the maxval newline.
void read_ppm_header(std::ifstream& in, const std::filesystem::path& path,
                     int& w, int& h) {
  std::string magic;
  in >> magic;
  if (magic != "P6") fail(path, "not a P6 ppm file");
  auto next_token = [&](int& out) {
    // Skip whitespace and '#' comment lines.
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    if (!(in >> out)) fail(path, "truncated ppm header");
  };
  int maxval = 0;
  next_token(w);
  next_token(h);
  next_token(maxval);
  if (w <= 0 || h <= 0) fail(path, "non-positive ppm dimensions");
  if (maxval != 255) fail(path, "unsupported ppm maxval (expected 255)");
  in.get();  // single whitespace byte before the payload
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  int w = 0, h = 0;
  read_ppm_header(in, path, w, h);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(path, "truncated ppm payload");
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t o = (static_cast<size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = raw[o + static_cast<size_t>(c)] / 255.0;
      }
    }
  }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  const int w = img.width();
  const int h = img.height();
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t o = (static_cast<size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        raw[o + static_cast<size_t>(c)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "short write");
}

std::pair<int, int> probe_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  int w = 0, h = 0;
  read_ppm_header(in, path, w, h);
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto total = in.tellg();
  const std::int64_t payload = static_cast<std::int64_t>(total - header_end);
  if (payload != static_cast<std::int64_t>(w) * h * 3) {
    fail(path, "payload size does not match header");
  }
  return {w, h};
}

Image resize_image(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize_image: non-positive size");
  Image out(width, height);
  kernels::resize_bilinear(img.chw.data(), 3, img.height(), img.width(),
                           out.chw.data(), height, width);
  return out;
}

Image crop_image(const Image& img, const BoundingBox& box) {
  if (box.normalized) throw std::invalid_argument("crop_image: expects pixel coordinates");
  int x0 = static_cast<int>(std::floor(box.x_min));
  int y0 = static_cast<int>(std::floor(box.y_min));
  int x1 = static_cast<int>(std::ceil(box.x_max));
  int y1 = static_cast<int>(std::ceil(box.y_max));
  x0 = std::clamp(x0, 0, img.width() - 1);
  y0 = std::clamp(y0, 0, img.height() - 1);
  x1 = std::clamp(x1, x0 + 1, img.width());
  y1 = std::clamp(y1, y0 + 1, img.height());
  Image out(x1 - x0, y1 - y0);
  for (int c = 0; c < 3; ++c) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        out.at(c, y - y0, x - x0) = img.at(c, y, x);
      }
    }
  }
  return out;
}

void draw_rect(Image& img, const BoundingBox& box, double r, double g, double b,
               int thickness) {
  BoundingBox px = box;
  if (px.normalized) {
    px.x_min *= img.width();
    px.x_max *= img.width();
    px.y_min *= img.height();
    px.y_max *= img.height();
    px.normalized = false;
  }
  const int x0 = std::clamp(static_cast<int>(std::lround(px.x_min)), 0, img.width() - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(px.x_max)) - 1, 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(px.y_min)), 0, img.height() - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(px.y_max)) - 1, 0, img.height() - 1);
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    img.at(0, y, x) = r;
    img.at(1, y, x) = g;
    img.at(2, y, x) = b;
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0 + t);
      put(x, y1 - t);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0 + t, y);
      put(x1 - t, y);
    }
  }
}

Image heatmap_to_image(const Tensor& map) {
  const int h = map.dim(0);
  const int w = map.dim(1);
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = std::clamp(map(y, x), 0.0, 1.0);
      // Black -> blue -> red -> yellow ramp.
      out.at(0, y, x) = std::clamp(2.0 * v - 0.5, 0.0, 1.0);
      out.at(1, y, x) = std::clamp(2.0 * v - 1.0, 0.0, 1.0);
      out.at(2, y, x) = std::clamp(1.0 - 2.0 * std::abs(v - 0.25), 0.0, 1.0) * 0.8;
    }
  }
  return out;
}

}  // namespace moth
