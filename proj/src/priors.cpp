#include "mothvision/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mothvision/kernels.hpp"

namespace moth {

void PriorSpec::validate() const {
  if (feature_maps.empty()) throw std::invalid_argument("PriorSpec: no feature maps");
  if (scales.size() != feature_maps.size()) {
    throw std::invalid_argument("PriorSpec: one scale per feature map required");
  }
  if (aspect_ratios.size() != feature_maps.size()) {
    throw std::invalid_argument("PriorSpec: one ratio list per feature map required");
  }
  for (const auto& m : feature_maps) {
    if (m.rows <= 0 || m.cols <= 0) throw std::invalid_argument("PriorSpec: zero-sized feature map");
  }
  for (size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0 && scales[i] <= 1.0)) {
      throw std::invalid_argument("PriorSpec: scales must lie in (0, 1]");
    }
    if (i > 0 && !(scales[i] > scales[i - 1])) {
      throw std::invalid_argument("PriorSpec: scales must be strictly increasing");
    }
  }
  for (const auto& ratios : aspect_ratios) {
    if (ratios.empty()) throw std::invalid_argument("PriorSpec: every map needs >= 1 aspect ratio");
    for (double a : ratios) {
      if (!(a > 0.0)) throw std::invalid_argument("PriorSpec: aspect ratios must be positive");
    }
  }
  if (image_size <= 0) throw std::invalid_argument("PriorSpec: image_size must be positive");
}

std::vector<double> default_scales(int n_maps) {
  std::vector<double> out;
  if (n_maps == 1) {
    out.push_back(0.5);
    return out;
  }
  for (int i = 0; i < n_maps; ++i) {
    out.push_back(0.2 + (0.9 - 0.2) * i / (n_maps - 1));
  }
  return out;
}

PriorGrid generate_priors(const PriorSpec& spec) {
  spec.validate();
  PriorGrid grid;
  const int n_maps = static_cast<int>(spec.feature_maps.size());
  for (int m = 0; m < n_maps; ++m) {
    const auto& fm = spec.feature_maps[static_cast<size_t>(m)];
    const double scale = spec.scales[static_cast<size_t>(m)];
    // The extra square prior sits between this scale and the next one
    // (1.0 past the last map).
    const double next_scale = (m + 1 < n_maps) ? spec.scales[static_cast<size_t>(m + 1)] : 1.0;
    const double extra_scale = std::sqrt(scale * next_scale);
    const auto& ratios = spec.aspect_ratios[static_cast<size_t>(m)];
    const int k_per_cell = spec.priors_per_cell(m);
    for (int row = 0; row < fm.rows; ++row) {
      for (int col = 0; col < fm.cols; ++col) {
        const double cx = (col + 0.5) / fm.cols;
        const double cy = (row + 0.5) / fm.rows;
        for (int k = 0; k < k_per_cell; ++k) {
          CenterSizeBox prior;
          prior.cx = cx;
          prior.cy = cy;
          prior.normalized = true;
          if (k < static_cast<int>(ratios.size())) {
            const double a = ratios[static_cast<size_t>(k)];
            prior.w = scale * std::sqrt(a);
            prior.h = scale / std::sqrt(a);
          } else {
            prior.w = extra_scale;
            prior.h = extra_scale;
          }
          BoundingBox corner = to_corner(prior);
          if (spec.clip) {
            corner = clip_box(corner, 1.0, 1.0);
            prior = to_center_size(corner);
          }
          grid.priors.push_back(prior);
          grid.corner_cache.push_back(corner);
          grid.provenance.push_back({m, row, col, k});
        }
      }
    }
  }
  return grid;
}

MatchResult match(const PriorGrid& priors,
                  const std::vector<BoundingBox>& ground_truth,
                  double iou_threshold) {
  const int n = priors.size();
  const int g = static_cast<int>(ground_truth.size());
  MatchResult out;
  out.labels.assign(static_cast<size_t>(n), PriorLabel::background);
  out.matched_gt.assign(static_cast<size_t>(n), -1);
  if (g == 0) return out;

  std::vector<double> prior_quads(static_cast<size_t>(n) * 4);
  for (int i = 0; i < n; ++i) {
    const BoundingBox& b = priors.corner_cache[static_cast<size_t>(i)];
    prior_quads[4 * static_cast<size_t>(i) + 0] = b.x_min;
    prior_quads[4 * static_cast<size_t>(i) + 1] = b.y_min;
    prior_quads[4 * static_cast<size_t>(i) + 2] = b.x_max;
    prior_quads[4 * static_cast<size_t>(i) + 3] = b.y_max;
  }
  std::vector<double> gt_quads(static_cast<size_t>(g) * 4);
  for (int j = 0; j < g; ++j) {
    const BoundingBox& b = ground_truth[static_cast<size_t>(j)];
    if (!b.normalized) throw std::invalid_argument("match: ground truth must be normalized");
    gt_quads[4 * static_cast<size_t>(j) + 0] = b.x_min;
    gt_quads[4 * static_cast<size_t>(j) + 1] = b.y_min;
    gt_quads[4 * static_cast<size_t>(j) + 2] = b.x_max;
    gt_quads[4 * static_cast<size_t>(j) + 3] = b.y_max;
  }
  std::vector<double> ious(static_cast<size_t>(n) * static_cast<size_t>(g));
  kernels::iou_matrix(prior_quads.data(), n, gt_quads.data(), g, ious.data());

  // Threshold rule: argmax over ground truths, first index wins ties.
  for (int i = 0; i < n; ++i) {
    int best_j = 0;
    double best = ious[static_cast<size_t>(i) * g];
    for (int j = 1; j < g; ++j) {
      const double v = ious[static_cast<size_t>(i) * g + j];
      if (v > best) {
        best = v;
        best_j = j;
      }
    }
    if (best > iou_threshold) {
      out.labels[static_cast<size_t>(i)] = PriorLabel::moth;
      out.matched_gt[static_cast<size_t>(i)] = best_j;
    }
  }

  // Best-prior-per-ground-truth floor, injective over priors.
  std::vector<char> forced(static_cast<size_t>(n), 0);
  for (int j = 0; j < g; ++j) {
    int best_i = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (forced[static_cast<size_t>(i)]) continue;
      const double v = ious[static_cast<size_t>(i) * g + j];
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    if (best_i >= 0) {
      forced[static_cast<size_t>(best_i)] = 1;
      out.labels[static_cast<size_t>(best_i)] = PriorLabel::moth;
      out.matched_gt[static_cast<size_t>(best_i)] = j;
    }
  }

  out.matched_count = static_cast<int>(
      std::count(out.labels.begin(), out.labels.end(), PriorLabel::moth));
  return out;
}

OffsetTarget encode_offsets(const BoundingBox& gt, const CenterSizeBox& prior,
                            double center_variance, double size_variance) {
  if (!(prior.w > 0.0 && prior.h > 0.0)) {
    throw std::invalid_argument("encode_offsets: prior must have positive size");
  }
  const CenterSizeBox g = to_center_size(gt);
  if (!(g.w > 0.0 && g.h > 0.0)) {
    throw std::invalid_argument("encode_offsets: zero-size ground truth box");
  }
  OffsetTarget t;
  t.dx = (g.cx - prior.cx) / prior.w / center_variance;
  t.dy = (g.cy - prior.cy) / prior.h / center_variance;
  t.dw = std::log(g.w / prior.w) / size_variance;
  t.dh = std::log(g.h / prior.h) / size_variance;
  return t;
}

BoundingBox decode_offsets(const OffsetTarget& offsets, const CenterSizeBox& prior,
                           double center_variance, double size_variance,
                           bool clip) {
  if (!std::isfinite(offsets.dx) || !std::isfinite(offsets.dy) ||
      !std::isfinite(offsets.dw) || !std::isfinite(offsets.dh)) {
    throw std::invalid_argument("decode_offsets: non-finite offsets");
  }
  CenterSizeBox g;
  g.cx = prior.cx + offsets.dx * center_variance * prior.w;
  g.cy = prior.cy + offsets.dy * center_variance * prior.h;
  g.w = prior.w * std::exp(offsets.dw * size_variance);
  g.h = prior.h * std::exp(offsets.dh * size_variance);
  g.normalized = prior.normalized;
  BoundingBox out = to_corner(g);
  if (clip) out = clip_box(out, 1.0, 1.0);
  return out;
}

}  // namespace moth
