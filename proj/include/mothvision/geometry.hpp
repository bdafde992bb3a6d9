#pragma once

#include <vector>

namespace moth {

// Axis-aligned box in corner form. Coordinates are continuous (a pixel (i, j)
// occupies the unit square [i, i+1) x [j, j+1)); no +1 convention anywhere.
// `normalized` flags coordinates in [0, 1] instead of pixels.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  bool normalized = false;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
};

// Same box in center-size form.
struct CenterSizeBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool normalized = false;
};

CenterSizeBox to_center_size(const BoundingBox& box);
BoundingBox to_corner(const CenterSizeBox& box);

struct ScoredBox {
  BoundingBox box;
  double score = 0.0;
};

// Intersection-over-union. Degenerate (zero-area) boxes are valid inputs and
// give 0 against anything. Throws std::invalid_argument when the normalized
// flags differ.
double iou(const BoundingBox& a, const BoundingBox& b);

// Greedy non-maximum suppression. Output sorted by descending score; no two
// kept boxes overlap with IoU > iou_threshold. Ties break by
// (score desc, x_min asc, y_min asc). iou_threshold must lie in (0, 1].
std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold,
                           int max_keep);

// Clips the box to the rectangle [0, w] x [0, h].
BoundingBox clip_box(const BoundingBox& box, double w, double h);

}  // namespace moth
