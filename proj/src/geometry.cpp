#include "mothvision/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace moth {

CenterSizeBox to_center_size(const BoundingBox& box) {
  CenterSizeBox out;
  out.cx = 0.5 * (box.x_min + box.x_max);
  out.cy = 0.5 * (box.y_min + box.y_max);
  out.w = box.x_max - box.x_min;
  out.h = box.y_max - box.y_min;
  out.normalized = box.normalized;
  return out;
}

BoundingBox to_corner(const CenterSizeBox& box) {
  BoundingBox out;
  out.x_min = box.cx - 0.5 * box.w;
  out.y_min = box.cy - 0.5 * box.h;
  out.x_max = box.cx + 0.5 * box.w;
  out.y_max = box.cy + 0.5 * box.h;
  out.normalized = box.normalized;
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.normalized != b.normalized) {
    throw std::invalid_argument("iou: mixed normalized and pixel boxes");
  }
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold,
                           int max_keep) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms: iou_threshold must lie in (0, 1]");
  }
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const ScoredBox& a, const ScoredBox& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
                     return a.box.y_min < b.box.y_min;
                   });
  std::vector<ScoredBox> kept;
  for (const ScoredBox& cand : boxes) {
    if (max_keep >= 0 && static_cast<int>(kept.size()) >= max_keep) break;
    bool suppressed = false;
    for (const ScoredBox& k : kept) {
      if (iou(cand.box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

BoundingBox clip_box(const BoundingBox& box, double w, double h) {
  BoundingBox out = box;
  out.x_min = std::clamp(out.x_min, 0.0, w);
  out.x_max = std::clamp(out.x_max, 0.0, w);
  out.y_min = std::clamp(out.y_min, 0.0, h);
  out.y_max = std::clamp(out.y_max, 0.0, h);
  return out;
}

}  // namespace moth
