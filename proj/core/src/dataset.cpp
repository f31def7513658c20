#include "crossview/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>

#include "crossview/errors.hpp"
#include "crossview/parallel.hpp"
#include "crossview/rng.hpp"

namespace crossview {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Disjoint seed streams per split.
enum class Split : std::uint64_t { kPaired = 0, kSource = 1, kTarget = 2, kTargetTest = 3 };

std::uint64_t scene_seed(std::uint64_t master, Split split, int index) {
  return Rng::derive(master, (static_cast<std::uint64_t>(split) << 32) |
                                 static_cast<std::uint64_t>(index));
}

int class_index(const std::vector<std::string>& classes,
                const std::string& name) {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Vector3 jitter_color(const Vector3& base, Rng& rng, double radius = 0.04) {
  Vector3 c;
  for (int i = 0; i < 3; ++i) {
    c(i) = std::clamp(base(i) + rng.uniform(-radius, radius), 0.02, 0.98);
  }
  return c;
}

json pose_to_json(const CameraPose& p) {
  auto mat = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  return json{{"k", mat(p.k)},
              {"r", mat(p.r)},
              {"t", {p.t(0), p.t(1), p.t(2)}}};
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Vector3 vector3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("expected [r,g,b]");
  return Vector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string index_name(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d.%s", i, ext);
  return buf;
}

void tint_image(Image& img, const Vector3& gain, const Vector3& offset) {
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    img.data[i] = std::clamp(img.data[i] * gain(c) + offset(c), 0.0, 1.0);
  }
}

void write_json_atomic(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os << j.dump(2) << "\n";
    if (!os) throw DataError("short write: " + tmp);
  }
  fs::rename(tmp, path);
}

}  // namespace

void fill_default_palette(SceneTemplate& tmpl) {
  if (!tmpl.palette.empty()) return;
  const std::map<std::string, Vector3> defaults = {
      {"road", {0.42, 0.42, 0.46}},    {"building", {0.78, 0.26, 0.20}},
      {"car", {0.15, 0.35, 0.85}},     {"tree", {0.10, 0.62, 0.24}},
      {"person", {0.95, 0.78, 0.10}},  {"terrain", {0.52, 0.38, 0.15}},
  };
  tmpl.palette.reserve(tmpl.classes.size());
  for (const auto& name : tmpl.classes) {
    auto it = defaults.find(name);
    if (it == defaults.end()) {
      throw DataError("no default color for class: " + name);
    }
    tmpl.palette.push_back(it->second);
  }
}

SceneTemplate scene_template_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("scene template: ") + e.what());
  }
  SceneTemplate t;
  if (j.contains("classes")) {
    t.classes = j["classes"].get<std::vector<std::string>>();
  }
  if (j.contains("palette")) {
    t.palette.clear();
    for (const auto& name : t.classes) {
      if (!j["palette"].contains(name)) {
        throw DataError("palette missing class: " + name);
      }
      t.palette.push_back(vector3_from_json(j["palette"][name]));
    }
  }
  t.extent = j.value("extent", t.extent);
  if (j.contains("resolution")) {
    t.width = j["resolution"][0].get<int>();
    t.height = j["resolution"][1].get<int>();
  }
  t.focal_px = j.value("focal_px", static_cast<double>(t.width));
  t.noise_sigma = j.value("noise_sigma", t.noise_sigma);
  t.exposure_jitter = j.value("exposure_jitter", t.exposure_jitter);
  auto range = [&](const char* key, CameraRange& r) {
    if (!j.contains(key)) return;
    const json& c = j[key];
    r.height_lo = c.value("height_lo", r.height_lo);
    r.height_hi = c.value("height_hi", r.height_hi);
    r.pitch_lo_deg = c.value("pitch_lo_deg", r.pitch_lo_deg);
    r.pitch_hi_deg = c.value("pitch_hi_deg", r.pitch_hi_deg);
  };
  range("car_camera", t.car);
  range("drone_camera", t.drone);
  if (j.contains("target_tint")) {
    t.target_gain = vector3_from_json(j["target_tint"]["gain"]);
    t.target_offset = vector3_from_json(j["target_tint"]["offset"]);
  }
  fill_default_palette(t);
  if (t.classes.empty() || t.classes.size() != t.palette.size()) {
    throw DataError("scene template: classes/palette mismatch");
  }
  return t;
}

std::string to_json(const SceneTemplate& t) {
  json palette;
  for (std::size_t i = 0; i < t.classes.size(); ++i) {
    palette[t.classes[i]] = {t.palette[i](0), t.palette[i](1), t.palette[i](2)};
  }
  json j{{"classes", t.classes},
         {"palette", palette},
         {"extent", t.extent},
         {"resolution", {t.width, t.height}},
         {"focal_px", t.focal_px},
         {"noise_sigma", t.noise_sigma},
         {"exposure_jitter", t.exposure_jitter},
         {"car_camera",
          {{"height_lo", t.car.height_lo},
           {"height_hi", t.car.height_hi},
           {"pitch_lo_deg", t.car.pitch_lo_deg},
           {"pitch_hi_deg", t.car.pitch_hi_deg}}},
         {"drone_camera",
          {{"height_lo", t.drone.height_lo},
           {"height_hi", t.drone.height_hi},
           {"pitch_lo_deg", t.drone.pitch_lo_deg},
           {"pitch_hi_deg", t.drone.pitch_hi_deg}}},
         {"target_tint",
          {{"gain", {t.target_gain(0), t.target_gain(1), t.target_gain(2)}},
           {"offset",
            {t.target_offset(0), t.target_offset(1), t.target_offset(2)}}}}};
  return j.dump(2);
}

SceneSample sample_scene(const SceneTemplate& tmpl, std::uint64_t seed) {
  Rng rng(seed);

  const int road = class_index(tmpl.classes, "road");
  const int building = class_index(tmpl.classes, "building");
  const int car = class_index(tmpl.classes, "car");
  const int tree = class_index(tmpl.classes, "tree");
  const int person = class_index(tmpl.classes, "person");
  const int terrain = class_index(tmpl.classes, "terrain");
  if (road < 0) throw DataError("scene family requires a road class");

  SceneConfig scene;
  scene.extent = tmpl.extent;
  scene.classes = tmpl.classes;
  scene.palette = tmpl.palette;
  scene.seed = seed;
  scene.width = tmpl.width;
  scene.height = tmpl.height;
  scene.noise_sigma = tmpl.noise_sigma;

  const double half = 0.5 * tmpl.extent;
  const int ground_class = terrain >= 0 ? terrain : road;

  // Ground slab first: render uses objects[0] for rays that miss everything.
  SceneObject ground;
  ground.shape = ShapeKind::kBox;
  ground.class_id = ground_class;
  ground.position = Vector3(0, 0, -0.2);
  ground.size = Vector3(tmpl.extent, tmpl.extent, 0.2);
  ground.color = jitter_color(tmpl.palette[ground_class], rng, 0.025);
  scene.objects.push_back(ground);

  // Road strip along +x; the car camera drives down it.
  const double road_width = rng.uniform(5.0, 9.0);
  const double road_y = rng.uniform(-5.0, 5.0);
  SceneObject strip;
  strip.shape = ShapeKind::kBox;
  strip.class_id = road;
  strip.position = Vector3(0, road_y, 0.0);
  strip.size = Vector3(tmpl.extent, road_width, 0.04);
  strip.color = jitter_color(tmpl.palette[road], rng, 0.025);
  scene.objects.push_back(strip);

  // Car camera pose (sampled before solids so placement can avoid it).
  const double cam_x = -half + rng.uniform(2.0, 5.0);
  const double cam_y = road_y + rng.uniform(-1.5, 1.5);
  const double car_h = rng.uniform(tmpl.car.height_lo, tmpl.car.height_hi);
  const double car_yaw = rng.uniform(-8.0, 8.0) * kDegToRad;
  const double car_pitch =
      rng.uniform(tmpl.car.pitch_lo_deg, tmpl.car.pitch_hi_deg) * kDegToRad;

  auto avoid_camera = [&](double x, double y, double margin) {
    const double dx = x - cam_x;
    const double dy = y - cam_y;
    return dx * dx + dy * dy > margin * margin;
  };

  auto place = [&](int cls, ShapeKind shape, const Vector3& size_lo,
                   const Vector3& size_hi, bool on_road, double z) {
    SceneObject obj;
    obj.shape = shape;
    obj.class_id = cls;
    obj.size = Vector3(rng.uniform(size_lo(0), size_hi(0)),
                       rng.uniform(size_lo(1), size_hi(1)),
                       rng.uniform(size_lo(2), size_hi(2)));
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double x = rng.uniform(-half + 3.0, half - 3.0);
      double y;
      if (on_road) {
        y = road_y + rng.uniform(-0.5, 0.5) * (road_width - 2.0);
      } else {
        const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
        y = road_y + side * (0.5 * road_width + rng.uniform(1.0, 9.0));
        y = std::clamp(y, -half + 2.0, half - 2.0);
      }
      const double margin = shape == ShapeKind::kBox
                                ? 2.0 + 0.5 * std::max(obj.size(0), obj.size(1))
                                : 1.0;
      if (!avoid_camera(x, y, margin)) continue;
      obj.position = Vector3(x, y, z);
      obj.color = jitter_color(tmpl.palette[cls], rng);
      scene.objects.push_back(obj);
      return;
    }
  };

  if (building >= 0) {
    const int n = 1 + rng.below_int(4);
    for (int i = 0; i < n; ++i) {
      place(building, ShapeKind::kBox, {4.0, 4.0, 6.0}, {10.0, 10.0, 14.0},
            false, 0.0);
    }
  }
  if (car >= 0) {
    const int n = 1 + rng.below_int(3);
    for (int i = 0; i < n; ++i) {
      place(car, ShapeKind::kBox, {1.8, 1.4, 1.2}, {2.8, 1.8, 1.6}, true, 0.04);
    }
  }
  if (tree >= 0) {
    const int n = 1 + rng.below_int(5);
    for (int i = 0; i < n; ++i) {
      place(tree, ShapeKind::kBillboard, {2.0, 3.0, 1.0}, {4.0, 6.0, 1.0},
            false, 0.0);
    }
  }
  if (person >= 0) {
    const int n = 1 + rng.below_int(3);
    for (int i = 0; i < n; ++i) {
      place(person, ShapeKind::kBillboard, {0.4, 1.6, 1.0}, {0.6, 1.9, 1.0},
            rng.uniform() < 0.4, 0.04);
    }
  }

  SceneSample sample;
  sample.scene = std::move(scene);
  sample.car_pose = make_look_pose(Vector3(cam_x, cam_y, car_h), car_yaw,
                                   car_pitch, tmpl.focal_px, tmpl.width,
                                   tmpl.height);

  const double drone_h = rng.uniform(tmpl.drone.height_lo, tmpl.drone.height_hi);
  const double drone_pitch =
      rng.uniform(tmpl.drone.pitch_lo_deg, tmpl.drone.pitch_hi_deg) * kDegToRad;
  const double drone_yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
  // Hover behind the scene center so the pitched view covers it.
  const double back = drone_h / std::tan(drone_pitch);
  const Vector3 look_at(rng.uniform(-4.0, 4.0), road_y + rng.uniform(-4.0, 4.0),
                        0.0);
  const Vector3 eye = look_at - back * Vector3(std::cos(drone_yaw),
                                               std::sin(drone_yaw), 0.0) +
                      Vector3(0, 0, drone_h);
  sample.drone_pose = make_look_pose(eye, drone_yaw, drone_pitch, tmpl.focal_px,
                                     tmpl.width, tmpl.height);
  sample.transform = view_transform_between(sample.car_pose, sample.drone_pose);
  validate(sample.scene);
  return sample;
}

void make_cross_view_dataset(const SceneTemplate& tmpl,
                             const DatasetCounts& counts, bool paired,
                             std::uint64_t seed, const std::string& out_dir,
                             const std::string& provenance_json) {
  if (counts.source < 1 || (!paired && counts.target < 1)) {
    throw DataError("dataset: need at least one scene per split");
  }

  struct SplitPlan {
    std::string name;
    Split stream;
    int count;
    bool masks;
    bool drone_view;
  };
  std::vector<SplitPlan> plan;
  if (paired) {
    plan.push_back({"source", Split::kPaired, counts.source, true, false});
    plan.push_back({"target", Split::kPaired, counts.source, true, true});
  } else {
    plan.push_back({"source", Split::kSource, counts.source, true, false});
    plan.push_back({"target", Split::kTarget, counts.target, false, true});
    if (counts.target_test > 0) {
      plan.push_back({"target_test", Split::kTargetTest, counts.target_test,
                      true, true});
    }
  }

  fs::create_directories(out_dir);
  std::vector<std::uint64_t> class_pixels(tmpl.classes.size(), 0);
  json scenes_meta;

  for (const auto& split : plan) {
    fs::create_directories(fs::path(out_dir) / split.name / "img");
    if (split.masks) {
      fs::create_directories(fs::path(out_dir) / split.name / "mask");
    }
    std::vector<json> meta(static_cast<std::size_t>(split.count));
    std::vector<std::vector<std::uint64_t>> pixel_counts(
        static_cast<std::size_t>(split.count),
        std::vector<std::uint64_t>(tmpl.classes.size(), 0));

    parallel_for(static_cast<std::size_t>(split.count), [&](std::size_t i) {
      const int idx = static_cast<int>(i);
      const std::uint64_t sseed = scene_seed(seed, split.stream, idx);
      const SceneSample sample = sample_scene(tmpl, sseed);
      const CameraPose& pose =
          split.drone_view ? sample.drone_pose : sample.car_pose;
      RenderResult r = render(sample.scene, pose);
      if (tmpl.exposure_jitter > 0.0) {
        Rng exp_rng(Rng::derive(sseed, 0x65787066));
        const double g =
            1.0 + tmpl.exposure_jitter * (2.0 * exp_rng.uniform() - 1.0);
        tint_image(r.image, Vector3(g, g, g), Vector3(0, 0, 0));
      }
      if (split.drone_view) {
        tint_image(r.image, tmpl.target_gain, tmpl.target_offset);
      }
      const fs::path base = fs::path(out_dir) / split.name;
      write_ppm((base / "img" / index_name(idx, "ppm")).string(), r.image);
      if (split.masks) {
        write_pgm((base / "mask" / index_name(idx, "pgm")).string(), r.mask);
        for (const auto label : r.mask.data) {
          ++pixel_counts[i][label];
        }
      }
      json m{{"index", idx}, {"seed", sseed}, {"pose", pose_to_json(pose)}};
      if (paired && split.drone_view) {
        m["view_transform"] = json{{"t_k", matrix_to_json(sample.transform.t_k)},
                                   {"t_rt", matrix_to_json(sample.transform.t_rt)}};
      }
      meta[i] = std::move(m);
    });

    for (const auto& counts_i : pixel_counts) {
      for (std::size_t c = 0; c < counts_i.size(); ++c) {
        class_pixels[c] += counts_i[c];
      }
    }
    scenes_meta[split.name] = meta;
  }

  json palette;
  for (std::size_t i = 0; i < tmpl.classes.size(); ++i) {
    palette[tmpl.classes[i]] = {tmpl.palette[i](0), tmpl.palette[i](1),
                                tmpl.palette[i](2)};
  }
  json pixels;
  for (std::size_t i = 0; i < tmpl.classes.size(); ++i) {
    pixels[tmpl.classes[i]] = class_pixels[i];
  }
  json manifest{{"format", "crossview-dataset"},
                {"version", 1},
                {"paired", paired},
                {"seed", seed},
                {"classes", tmpl.classes},
                {"palette", palette},
                {"resolution", {tmpl.width, tmpl.height}},
                {"extent", tmpl.extent},
                {"noise_sigma", tmpl.noise_sigma},
                {"exposure_jitter", tmpl.exposure_jitter},
                {"target_tint",
                 {{"gain",
                   {tmpl.target_gain(0), tmpl.target_gain(1), tmpl.target_gain(2)}},
                  {"offset",
                   {tmpl.target_offset(0), tmpl.target_offset(1),
                    tmpl.target_offset(2)}}}},
                {"class_pixels", pixels},
                {"scenes", scenes_meta}};
  if (!provenance_json.empty()) {
    manifest["provenance"] = json::parse(provenance_json);
  }
  write_json_atomic((fs::path(out_dir) / "manifest.json").string(), manifest);
}

DatasetInfo read_dataset_info(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("bad manifest: " + std::string(e.what()));
  }
  DatasetInfo info;
  info.classes = j.at("classes").get<std::vector<std::string>>();
  for (const auto& name : info.classes) {
    info.palette.push_back(vector3_from_json(j.at("palette").at(name)));
  }
  info.width = j.at("resolution")[0].get<int>();
  info.height = j.at("resolution")[1].get<int>();
  info.paired = j.at("paired").get<bool>();
  info.seed = j.at("seed").get<std::uint64_t>();
  return info;
}

DomainData load_domain(const std::string& dir, const std::string& split,
                       bool require_masks) {
  const fs::path img_dir = fs::path(dir) / split / "img";
  const fs::path mask_dir = fs::path(dir) / split / "mask";
  if (!fs::is_directory(img_dir)) {
    throw DataError("missing split directory: " + img_dir.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(img_dir)) {
    if (entry.path().extension() == ".ppm") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw DataError("no images in " + img_dir.string());
  }
  const bool has_masks = fs::is_directory(mask_dir);
  if (require_masks && !has_masks) {
    throw DataError("split has no masks: " + mask_dir.string());
  }
  DomainData data;
  data.images.reserve(names.size());
  for (const auto& name : names) {
    data.images.push_back(read_ppm((img_dir / (name + ".ppm")).string()));
    if (has_masks) {
      data.masks.push_back(read_pgm((mask_dir / (name + ".pgm")).string()));
    }
  }
  return data;
}

}  // namespace crossview
