#include "mothvision/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace moth {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_coord(const std::string& s, const std::string& ctx) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ValidationError(ctx + ": bad coordinate '" + s + "'");
  }
}

DatasetIndex load_json_annotations(const std::filesystem::path& root,
                                   const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open annotation file: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(file.string() + ": invalid json: " + e.what());
  }
  DatasetIndex index;
  index.root = root;
  std::map<int, std::string> categories;
  for (const auto& c : j.value("categories", nlohmann::json::array())) {
    categories[c.at("id").get<int>()] = c.at("name").get<std::string>();
  }
  std::map<std::string, int> class_ids;
  for (const auto& [id, name] : categories) {
    class_ids[name] = static_cast<int>(index.class_names.size());
    index.class_names.push_back(name);
  }
  std::map<int, size_t> entry_of_image;
  for (const auto& im : j.at("images")) {
    DatasetEntry e;
    e.image_path = im.at("file_name").get<std::string>();
    entry_of_image[im.at("id").get<int>()] = index.entries.size();
    index.entries.push_back(std::move(e));
  }
  for (const auto& a : j.value("annotations", nlohmann::json::array())) {
    const auto it = entry_of_image.find(a.at("image_id").get<int>());
    if (it == entry_of_image.end()) {
      throw ValidationError(file.string() + ": annotation references unknown image id");
    }
    DatasetEntry& e = index.entries[it->second];
    const auto& bb = a.at("bbox");  // [x, y, w, h]
    BoundingBox box;
    box.x_min = bb.at(0).get<double>();
    box.y_min = bb.at(1).get<double>();
    box.x_max = box.x_min + bb.at(2).get<double>();
    box.y_max = box.y_min + bb.at(3).get<double>();
    e.boxes.push_back(box);
    if (a.contains("category_id")) {
      const auto cit = categories.find(a.at("category_id").get<int>());
      if (cit == categories.end()) {
        throw ValidationError(file.string() + ": annotation references unknown category id");
      }
      e.label = class_ids[cit->second];
    }
  }
  return index;
}

void validate_index(DatasetIndex& index, const std::filesystem::path& annotation_file) {
  std::vector<std::string> problems;
  for (auto& e : index.entries) {
    const auto path = index.image_file(e);
    try {
      const auto [w, h] = probe_ppm(path);
      e.width = w;
      e.height = h;
    } catch (const std::exception& ex) {
      problems.emplace_back(ex.what());
      continue;
    }
    for (const auto& b : e.boxes) {
      if (!b.valid()) {
        problems.push_back(e.image_path + ": box has x_max < x_min or y_max < y_min");
      } else if (b.x_min < 0 || b.y_min < 0 || b.x_max > e.width || b.y_max > e.height) {
        problems.push_back(e.image_path + ": box outside image bounds");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = annotation_file.string() + ": " +
                      std::to_string(problems.size()) + " validation error(s):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  std::stable_sort(index.entries.begin(), index.entries.end(),
                   [](const DatasetEntry& a, const DatasetEntry& b) {
                     return a.image_path < b.image_path;
                   });
}

}  // namespace

int DatasetIndex::find_class(const std::string& name) const {
  for (size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

DatasetIndex load_dataset(const std::filesystem::path& root,
                          const std::filesystem::path& annotation_file) {
  if (annotation_file.extension() == ".json") {
    DatasetIndex index = load_json_annotations(root, annotation_file);
    validate_index(index, annotation_file);
    return index;
  }
  std::ifstream in(annotation_file);
  if (!in) throw ValidationError("cannot open annotation file: " + annotation_file.string());
  DatasetIndex index;
  index.root = root;
  std::map<std::string, size_t> entry_by_path;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!header_seen) {
      header_seen = true;  // first line is the column header
      continue;
    }
    if (line.empty()) continue;
    const std::string ctx = annotation_file.string() + ":" + std::to_string(line_no);
    const auto cols = split_tabs(line);
    if (cols.size() != 6) {
      throw ValidationError(ctx + ": expected 6 tab-separated columns, got " +
                            std::to_string(cols.size()));
    }
    BoundingBox box;
    box.x_min = parse_coord(cols[2], ctx);
    box.y_min = parse_coord(cols[3], ctx);
    box.x_max = parse_coord(cols[4], ctx);
    box.y_max = parse_coord(cols[5], ctx);
    if (!box.valid()) {
      throw ValidationError(ctx + ": box has x_max < x_min or y_max < y_min");
    }
    int label = -1;
    if (cols[1] != "-") {
      label = index.find_class(cols[1]);
      if (label < 0) {
        label = static_cast<int>(index.class_names.size());
        index.class_names.push_back(cols[1]);
      }
    }
    auto it = entry_by_path.find(cols[0]);
    if (it == entry_by_path.end()) {
      DatasetEntry e;
      e.image_path = cols[0];
      e.label = label;
      e.boxes.push_back(box);
      entry_by_path[cols[0]] = index.entries.size();
      index.entries.push_back(std::move(e));
    } else {
      DatasetEntry& e = index.entries[it->second];
      if (e.label != label) {
        throw ValidationError(ctx + ": conflicting class for image " + cols[0]);
      }
      e.boxes.push_back(box);
    }
  }
  validate_index(index, annotation_file);
  return index;
}

void save_annotations(const DatasetIndex& index, const std::filesystem::path& annotation_file) {
  std::ofstream out(annotation_file);
  if (!out) throw std::runtime_error("cannot write: " + annotation_file.string());
  out << "image_path\tclass_name\tx_min\ty_min\tx_max\ty_max\n";
  char buf[64];
  for (const auto& e : index.entries) {
    const std::string cls = e.label < 0 ? "-" : index.class_names[static_cast<size_t>(e.label)];
    for (const auto& b : e.boxes) {
      out << e.image_path << '\t' << cls;
      for (double v : {b.x_min, b.y_min, b.x_max, b.y_max}) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

std::pair<DatasetIndex, DatasetIndex> make_split(const DatasetIndex& index,
                                                 const SplitSpec& spec) {
  const bool counts_mode = spec.train_per_class >= 0 && spec.test_per_class >= 0;
  if (!counts_mode && !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0)) {
    throw ValidationError("make_split: need per-class counts or a ratio in (0,1)");
  }
  // Group entry indices by class; unlabeled entries count as one group.
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < index.entries.size(); ++i) {
    by_class[index.entries[i].label].push_back(i);
  }
  DatasetIndex train, test;
  train.root = test.root = index.root;
  train.class_names = test.class_names = index.class_names;
  std::vector<std::string> problems;
  for (auto& [label, ids] : by_class) {
    const int n = static_cast<int>(ids.size());
    int n_train, n_test;
    if (counts_mode) {
      n_train = spec.train_per_class;
      n_test = spec.test_per_class;
      if (n < n_train + n_test) {
        const std::string cls = label < 0 ? std::string("<unlabeled>")
                                          : index.class_names[static_cast<size_t>(label)];
        problems.push_back(cls + " has " + std::to_string(n) + " image(s), needs " +
                           std::to_string(n_train + n_test));
        continue;
      }
    } else {
      n_train = std::max(1, static_cast<int>(std::floor(n * spec.train_ratio)));
      n_train = std::min(n_train, n - 1);
      n_test = n - n_train;
    }
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(label) + 0x5eed));
    rng.shuffle(ids);
    for (int i = 0; i < n_train; ++i) train.entries.push_back(index.entries[ids[static_cast<size_t>(i)]]);
    for (int i = n_train; i < n_train + n_test; ++i) {
      test.entries.push_back(index.entries[ids[static_cast<size_t>(i)]]);
    }
    // Extra images beyond the requested counts are dropped.
  }
  if (!problems.empty()) {
    std::string msg = "make_split: unsatisfiable per-class counts:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  auto sort_entries = [](DatasetIndex& idx) {
    std::stable_sort(idx.entries.begin(), idx.entries.end(),
                     [](const DatasetEntry& a, const DatasetEntry& b) {
                       return a.image_path < b.image_path;
                     });
  };
  sort_entries(train);
  sort_entries(test);
  return {std::move(train), std::move(test)};
}

namespace {

void hflip_image(Image& img) {
  const int w = img.width();
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < w / 2; ++x) {
        std::swap(img.at(c, y, x), img.at(c, y, w - 1 - x));
      }
    }
  }
}

void vflip_image(Image& img) {
  const int h = img.height();
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < img.width(); ++x) {
        std::swap(img.at(c, y, x), img.at(c, h - 1 - y, x));
      }
    }
  }
}

}  // namespace

std::pair<Image, std::vector<BoundingBox>> augment(const Image& image,
                                                   const std::vector<BoundingBox>& boxes,
                                                   const AugmentConfig& config,
                                                   std::uint64_t seed) {
  Image img = image;
  std::vector<BoundingBox> out_boxes = boxes;
  if (!config.enabled) return {std::move(img), std::move(out_boxes)};
  Rng rng(seed);

  // Random crop; keeps retrying while it would lose every box.
  if (config.crop_enabled && config.crop_min_scale < 1.0) {
    const int w = img.width(), h = img.height();
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double s = rng.uniform(config.crop_min_scale, 1.0);
      const int cw = std::max(1, static_cast<int>(std::lround(s * w)));
      const int ch = std::max(1, static_cast<int>(std::lround(s * h)));
      const int x0 = rng.uniform_int(w - cw + 1);
      const int y0 = rng.uniform_int(h - ch + 1);
      std::vector<BoundingBox> kept;
      for (const auto& b : boxes) {
        BoundingBox c = b;
        c.x_min = std::clamp(b.x_min - x0, 0.0, static_cast<double>(cw));
        c.x_max = std::clamp(b.x_max - x0, 0.0, static_cast<double>(cw));
        c.y_min = std::clamp(b.y_min - y0, 0.0, static_cast<double>(ch));
        c.y_max = std::clamp(b.y_max - y0, 0.0, static_cast<double>(ch));
        if (b.area() > 0 && c.area() / b.area() >= config.box_keep_fraction) {
          kept.push_back(c);
        }
      }
      if (!boxes.empty() && kept.empty()) continue;  // resample
      BoundingBox crop;
      crop.x_min = x0;
      crop.y_min = y0;
      crop.x_max = x0 + cw;
      crop.y_max = y0 + ch;
      img = crop_image(img, crop);
      out_boxes = std::move(kept);
      break;
    }
  }

  const int w = img.width(), h = img.height();
  if (rng.uniform() < config.hflip_prob) {
    hflip_image(img);
    for (auto& b : out_boxes) {
      const double x0 = b.x_min, x1 = b.x_max;
      b.x_min = w - x1;
      b.x_max = w - x0;
    }
  }
  if (rng.uniform() < config.vflip_prob) {
    vflip_image(img);
    for (auto& b : out_boxes) {
      const double y0 = b.y_min, y1 = b.y_max;
      b.y_min = h - y1;
      b.y_max = h - y0;
    }
  }

  // Color jitter: brightness, contrast, saturation, each with its own factor.
  const double fb = rng.uniform(config.jitter_min, config.jitter_max);
  const double fc = rng.uniform(config.jitter_min, config.jitter_max);
  const double fs = rng.uniform(config.jitter_min, config.jitter_max);
  double mean_gray = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      mean_gray += (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
    }
  }
  mean_gray /= std::max(1, w * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gray = (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
      for (int c = 0; c < 3; ++c) {
        double v = img.at(c, y, x) * fb;
        v = (v - mean_gray * fb) * fc + mean_gray * fb;
        v = gray * fb + (v - gray * fb) * fs;
        img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return {std::move(img), std::move(out_boxes)};
}

void SyntheticSceneSpec::validate() const {
  if (species.empty()) throw ValidationError("synthetic spec: at least one species required");
  if (canvas < 8) throw ValidationError("synthetic spec: canvas too small");
  for (const auto& s : species) {
    if (!(s.min_size_frac > 0 && s.max_size_frac >= s.min_size_frac)) {
      throw ValidationError("synthetic spec: bad size range for species " + s.name);
    }
    if (s.max_size_frac >= 1.0) {
      throw ValidationError("synthetic spec: species " + s.name + " cannot fit the canvas");
    }
  }
  if (!(p_single >= 0.0 && p_single <= 1.0)) {
    throw ValidationError("synthetic spec: p_single must lie in [0,1]");
  }
}

std::vector<SyntheticSpecies> default_species() {
  std::vector<SyntheticSpecies> out(5);
  out[0].name = "umbra";
  out[0].shape = ShapeKind::disk;
  out[1].name = "quadrata";
  out[1].shape = ShapeKind::square;
  out[2].name = "deltoid";
  out[2].shape = ShapeKind::triangle;
  out[3].name = "annulata";
  out[3].shape = ShapeKind::ring;
  out[4].name = "cruciata";
  out[4].shape = ShapeKind::cross;
  // Shared muted palette so shape, not color, separates the classes.
  for (auto& s : out) {
    s.color[0] = 0.45;
    s.color[1] = 0.33;
    s.color[2] = 0.22;
    s.color_jitter = 0.08;
    s.min_size_frac = 0.10;
    s.max_size_frac = 0.22;
  }
  return out;
}

namespace {

bool inside_shape(ShapeKind shape, double dx, double dy, double r) {
  switch (shape) {
    case ShapeKind::disk:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::square:
      return std::abs(dx) <= r * 0.9 && std::abs(dy) <= r * 0.9;
    case ShapeKind::triangle:
      // Apex up, base at dy = +r.
      return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) * 0.5;
    case ShapeKind::ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= (0.55 * r) * (0.55 * r);
    }
    case ShapeKind::cross:
      return (std::abs(dx) <= r / 3.0 && std::abs(dy) <= r) ||
             (std::abs(dy) <= r / 3.0 && std::abs(dx) <= r);
  }
  return false;
}

double texture_factor(TextureKind texture, double dx, double dy, double r) {
  switch (texture) {
    case TextureKind::solid:
      return 1.0;
    case TextureKind::stripes: {
      const double period = std::max(2.0, r / 2.0);
      const int band = static_cast<int>(std::floor((dx + dy + 1000.0 * period) / period));
      return band % 2 == 0 ? 1.0 : 0.55;
    }
    case TextureKind::dots: {
      const double period = std::max(3.0, r / 2.0);
      const double mx = dx - period * std::floor(dx / period);
      const double my = dy - period * std::floor(dy / period);
      return (mx < period / 2 && my < period / 2) ? 0.55 : 1.0;
    }
  }
  return 1.0;
}

}  // namespace

BoundingBox rasterize_hull(const SceneInsect& insect, int canvas) {
  int min_x = canvas, min_y = canvas, max_x = -1, max_y = -1;
  const int x0 = std::max(0, static_cast<int>(std::floor(insect.cx - insect.radius - 1)));
  const int x1 = std::min(canvas - 1, static_cast<int>(std::ceil(insect.cx + insect.radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(insect.cy - insect.radius - 1)));
  const int y1 = std::min(canvas - 1, static_cast<int>(std::ceil(insect.cy + insect.radius + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (inside_shape(insect.shape, x + 0.5 - insect.cx, y + 0.5 - insect.cy, insect.radius)) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
    }
  }
  BoundingBox box;
  if (max_x < min_x) return box;  // nothing rasterized
  box.x_min = min_x;
  box.y_min = min_y;
  box.x_max = max_x + 1;  // pixels are unit squares
  box.y_max = max_y + 1;
  return box;
}

SceneLayout sample_scene_layout(const SyntheticSceneSpec& spec, Rng& rng) {
  spec.validate();
  SceneLayout layout;
  int count = 1;
  if (rng.uniform() >= spec.p_single) count = 2 + rng.uniform_int(2);
  const int scene_species = rng.uniform_int(static_cast<int>(spec.species.size()));
  for (int i = 0; i < count; ++i) {
    SceneInsect insect;
    insect.species = spec.same_species_per_scene
                         ? scene_species
                         : rng.uniform_int(static_cast<int>(spec.species.size()));
    const SyntheticSpecies& sp = spec.species[static_cast<size_t>(insect.species)];
    insect.shape = sp.shape;
    insect.texture = sp.texture;
    for (int c = 0; c < 3; ++c) {
      insect.color[c] = std::clamp(
          sp.color[c] + rng.uniform(-sp.color_jitter, sp.color_jitter), 0.0, 1.0);
    }
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const double frac = rng.uniform(sp.min_size_frac, sp.max_size_frac);
      insect.radius = 0.5 * frac * spec.canvas;
      const double margin = insect.radius + 2.0;
      insect.cx = rng.uniform(margin, spec.canvas - margin);
      insect.cy = rng.uniform(margin, spec.canvas - margin);
      insect.box = rasterize_hull(insect, spec.canvas);
      if (insect.box.area() <= 0.0) continue;
      placed = true;
      for (const auto& other : layout.insects) {
        if (iou(insect.box, other.box) > 0.05) {
          placed = false;
          break;
        }
      }
    }
    if (placed) layout.insects.push_back(insect);
    // An insect that cannot be placed without overlap is dropped.
  }
  return layout;
}

Image render_scene(const SyntheticSceneSpec& spec, const SceneLayout& layout, Rng& rng) {
  Image img(spec.canvas, spec.canvas);
  for (int y = 0; y < spec.canvas; ++y) {
    for (int x = 0; x < spec.canvas; ++x) {
      const double n = spec.noise > 0 ? rng.uniform(-spec.noise, spec.noise) : 0.0;
      const double v = std::clamp(spec.background + n, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = v;
    }
  }
  for (const auto& insect : layout.insects) {
    const int x0 = std::max(0, static_cast<int>(std::floor(insect.cx - insect.radius - 1)));
    const int x1 = std::min(spec.canvas - 1, static_cast<int>(std::ceil(insect.cx + insect.radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(insect.cy - insect.radius - 1)));
    const int y1 = std::min(spec.canvas - 1, static_cast<int>(std::ceil(insect.cy + insect.radius + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - insect.cx;
        const double dy = y + 0.5 - insect.cy;
        if (!inside_shape(insect.shape, dx, dy, insect.radius)) continue;
        const double f = texture_factor(insect.texture, dx, dy, insect.radius);
        for (int c = 0; c < 3; ++c) {
          img.at(c, y, x) = std::clamp(insect.color[c] * f, 0.0, 1.0);
        }
      }
    }
  }
  return img;
}

DatasetIndex generate_synthetic(const SyntheticSceneSpec& spec, int n_images,
                                std::uint64_t seed,
                                const std::filesystem::path& out_root) {
  spec.validate();
  if (n_images < 0) throw ValidationError("generate_synthetic: negative image count");
  std::filesystem::create_directories(out_root / "images");
  DatasetIndex index;
  index.root = out_root;
  for (const auto& s : spec.species) index.class_names.push_back(s.name);
  char name[64];
  for (int i = 0; i < n_images; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const SceneLayout layout = sample_scene_layout(spec, rng);
    const Image img = render_scene(spec, layout, rng);
    std::snprintf(name, sizeof(name), "images/scene_%05d.ppm", i);
    write_ppm(img, out_root / name);
    DatasetEntry e;
    e.image_path = name;
    e.width = spec.canvas;
    e.height = spec.canvas;
    e.label = layout.insects.empty() ? -1 : layout.insects.front().species;
    for (const auto& insect : layout.insects) e.boxes.push_back(insect.box);
    index.entries.push_back(std::move(e));
  }
  save_annotations(index, out_root / "annotations.tsv");
  return index;
}

DatasetIndex crop_dataset(const DatasetIndex& index, double padding,
                          const std::filesystem::path& out_root) {
  std::filesystem::create_directories(out_root / "images");
  DatasetIndex out;
  out.root = out_root;
  out.class_names = index.class_names;
  char name[64];
  int counter = 0;
  for (const auto& e : index.entries) {
    if (e.label < 0) continue;
    const Image img = index.load_image(e);
    for (const auto& b : e.boxes) {
      BoundingBox padded = b;
      const double px = padding * b.width();
      const double py = padding * b.height();
      padded.x_min -= px;
      padded.x_max += px;
      padded.y_min -= py;
      padded.y_max += py;
      const Image crop = crop_image(img, padded);
      std::snprintf(name, sizeof(name), "images/crop_%05d.ppm", counter++);
      write_ppm(crop, out_root / name);
      DatasetEntry ce;
      ce.image_path = name;
      ce.label = e.label;
      ce.width = crop.width();
      ce.height = crop.height();
      BoundingBox full;
      full.x_max = crop.width();
      full.y_max = crop.height();
      ce.boxes.push_back(full);
      out.entries.push_back(std::move(ce));
    }
  }
  save_annotations(out, out_root / "annotations.tsv");
  return out;
}

}  // namespace moth
