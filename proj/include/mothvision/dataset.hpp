#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mothvision/geometry.hpp"
#include "mothvision/image.hpp"
#include "mothvision/rng.hpp"

namespace moth {

// Thrown for bad user input (malformed annotations, unsatisfiable splits,
// missing files). The CLI maps it to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetEntry {
  std::string image_path;               // relative to the dataset root
  int label = -1;                       // class index, -1 = unlabeled
  std::vector<BoundingBox> boxes;       // pixel coordinates
  int width = 0;
  int height = 0;
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;
  std::vector<std::string> class_names;

  int find_class(const std::string& name) const;  // -1 when absent
  std::filesystem::path image_file(const DatasetEntry& e) const { return root / e.image_path; }
  Image load_image(const DatasetEntry& e) const { return read_ppm(image_file(e)); }
};

// Annotation format: one header line, then one line per box,
//   image_path<TAB>class_name<TAB>x_min<TAB>y_min<TAB>x_max<TAB>y_max
// in absolute pixels; class_name "-" means unlabeled. A .json file in the
// usual detection-annotation layout (images/annotations/categories) is
// accepted and converted on the fly.
DatasetIndex load_dataset(const std::filesystem::path& root,
                          const std::filesystem::path& annotation_file);
void save_annotations(const DatasetIndex& index, const std::filesystem::path& annotation_file);

struct SplitSpec {
  // Either exact per-class counts (train_per_class/test_per_class >= 0) or a
  // ratio in (0,1); counts win when both are set.
  int train_per_class = -1;
  int test_per_class = -1;
  double train_ratio = -1.0;
  std::uint64_t seed = 0;
};

std::pair<DatasetIndex, DatasetIndex> make_split(const DatasetIndex& index,
                                                 const SplitSpec& spec);

struct AugmentConfig {
  bool enabled = true;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  bool crop_enabled = true;
  double crop_min_scale = 0.7;      // side scale of the random crop
  double jitter_min = 0.8;          // contrast / brightness / saturation factors
  double jitter_max = 1.2;
  double box_keep_fraction = 0.3;   // drop boxes with less visible area than this
};

// Seed-deterministic augmentation. Order: crop, flips, color jitter. A crop
// that would remove every box is resampled up to 10 times, then skipped.
std::pair<Image, std::vector<BoundingBox>> augment(const Image& image,
                                                   const std::vector<BoundingBox>& boxes,
                                                   const AugmentConfig& config,
                                                   std::uint64_t seed);

enum class ShapeKind { disk, square, triangle, ring, cross };
enum class TextureKind { solid, stripes, dots };

struct SyntheticSpecies {
  std::string name;
  ShapeKind shape = ShapeKind::disk;
  TextureKind texture = TextureKind::solid;
  double color[3] = {0.5, 0.35, 0.2};
  double color_jitter = 0.08;
  double min_size_frac = 0.10;  // shape diameter as a fraction of the canvas
  double max_size_frac = 0.22;
};

struct SyntheticSceneSpec {
  int canvas = 256;
  double background = 0.92;
  double noise = 0.03;
  double p_single = 0.92;              // else 2 or 3 insects, uniform
  bool same_species_per_scene = true;  // one species per image
  std::vector<SyntheticSpecies> species;

  void validate() const;  // throws ValidationError
};

// Five shape species on a light background; the default desk-scale grammar.
std::vector<SyntheticSpecies> default_species();

struct SceneInsect {
  int species = 0;
  ShapeKind shape = ShapeKind::disk;
  TextureKind texture = TextureKind::solid;
  double cx = 0, cy = 0, radius = 0;  // pixels
  double color[3] = {0, 0, 0};
  BoundingBox box;  // exact hull of the rasterized mask, pixels
};

struct SceneLayout {
  std::vector<SceneInsect> insects;
};

// Layout sampling is separate from rendering so statistical checks do not
// need to rasterize anything.
SceneLayout sample_scene_layout(const SyntheticSceneSpec& spec, Rng& rng);
Image render_scene(const SyntheticSceneSpec& spec, const SceneLayout& layout, Rng& rng);

// Rasterized hull of one insect; render_scene fills SceneInsect::box with
// exactly this.
BoundingBox rasterize_hull(const SceneInsect& insect, int canvas);

// Writes images/scene_XXXXX.ppm plus annotations.tsv under out_root and
// returns the corresponding index.
DatasetIndex generate_synthetic(const SyntheticSceneSpec& spec, int n_images,
                                std::uint64_t seed,
                                const std::filesystem::path& out_root);

// Derived classification set: one crop per labeled box (pixel padding is
// relative to the box size). Written like a regular dataset.
DatasetIndex crop_dataset(const DatasetIndex& index, double padding,
                          const std::filesystem::path& out_root);

}  // namespace moth
