#pragma once

#include <optional>
#include <vector>

#include "mothvision/geometry.hpp"

namespace moth {

// Layout of the detector's reference boxes: one set of K boxes per cell of
// each feature map. K per map = aspect ratios + one extra square box at the
// intermediate scale when extra_square_prior is set.
struct PriorSpec {
  struct MapSpec {
    int rows = 0;
    int cols = 0;
  };
  std::vector<MapSpec> feature_maps;
  std::vector<double> scales;                       // one per map, strictly increasing, in (0,1]
  std::vector<std::vector<double>> aspect_ratios;   // per map, each > 0
  int image_size = 300;
  bool extra_square_prior = true;
  bool clip = true;
  double center_variance = 0.1;
  double size_variance = 0.2;

  int priors_per_cell(int map_index) const {
    return static_cast<int>(aspect_ratios[static_cast<size_t>(map_index)].size()) +
           (extra_square_prior ? 1 : 0);
  }
  void validate() const;  // throws std::invalid_argument on bad specs
};

// Returns the spec's default scale ladder: linear from 0.2 to 0.9 across maps.
std::vector<double> default_scales(int n_maps);

struct PriorGrid {
  struct Provenance {
    int map = 0;
    int row = 0;
    int col = 0;
    int ratio = 0;  // index into the per-cell prior set
  };
  std::vector<CenterSizeBox> priors;  // normalized center-size form
  std::vector<Provenance> provenance;
  std::vector<BoundingBox> corner_cache;  // corner form of the same priors

  int size() const { return static_cast<int>(priors.size()); }
};

// Priors are centered at ((col+0.5)/cols, (row+0.5)/rows); a prior of scale s
// and ratio a has size (s*sqrt(a), s/sqrt(a)). Ordering is (map, row, col,
// ratio) and is the contract every detector output row follows.
PriorGrid generate_priors(const PriorSpec& spec);

enum class PriorLabel { background, moth };

struct MatchResult {
  std::vector<PriorLabel> labels;         // one per prior
  std::vector<int> matched_gt;            // gt index, or -1
  int matched_count = 0;                  // number of priors labeled moth
};

// A prior is positive when its best IoU over ground truth exceeds
// iou_threshold (assigned to the argmax gt, ties to the lowest gt index).
// Additionally every ground truth's best prior is forced positive so no
// annotated object is left unmatched; forced picks go gt by gt, skipping
// priors already forced, ties to the lowest prior index.
MatchResult match(const PriorGrid& priors,
                  const std::vector<BoundingBox>& ground_truth,
                  double iou_threshold = 0.5);

// Regression target for one (ground truth, prior) pair: center offsets
// relative to the prior size, log-space size ratios, both divided by the
// configured variances.
struct OffsetTarget {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

OffsetTarget encode_offsets(const BoundingBox& gt, const CenterSizeBox& prior,
                            double center_variance = 0.1,
                            double size_variance = 0.2);

// Exact inverse of encode_offsets. Throws on non-finite offsets. Clipping to
// [0,1] happens only when clip is set (inference decode).
BoundingBox decode_offsets(const OffsetTarget& offsets, const CenterSizeBox& prior,
                           double center_variance = 0.1,
                           double size_variance = 0.2, bool clip = false);

}  // namespace moth
