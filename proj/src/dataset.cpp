#include "mvr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace mvr::sim {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double fold(double x, double lo, double hi) {
  if (hi <= lo) return lo;
  const double span = hi - lo;
  double u = std::fmod(x - lo, 2.0 * span);
  if (u < 0) u += 2.0 * span;
  return lo + (u < span ? u : 2.0 * span - u);
}

Eigen::Vector3d position_at(const SubjectScript& s, const RoamBox& roam, double t) {
  const Eigen::Vector3d raw = s.start + s.velocity * t;
  return {fold(raw.x(), roam.min.x(), roam.max.x()), fold(raw.y(), roam.min.y(), roam.max.y()),
          fold(raw.z(), roam.min.z(), roam.max.z())};
}

// Velocity after wall reflections, for Doppler terms.
Eigen::Vector3d velocity_at(const SubjectScript& s, const RoamBox& roam, double t) {
  Eigen::Vector3d v = s.velocity;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = roam.min[axis], hi = roam.max[axis];
    if (hi <= lo || v[axis] == 0.0) continue;
    const double span = hi - lo;
    double u = std::fmod(s.start[axis] + v[axis] * t - lo, 2.0 * span);
    if (u < 0) u += 2.0 * span;
    if (u >= span) v[axis] = -v[axis];
  }
  return v;
}

std::vector<SubjectScript> seeded_subjects(const DatasetConfig& cfg, Rng& rng) {
  std::vector<SubjectScript> subs;
  for (int i = 0; i < cfg.n_subjects; ++i) {
    SubjectScript s;
    s.start = {rng.uniform(cfg.roam.min.x(), cfg.roam.max.x()),
               cfg.roam.min.y(),
               rng.uniform(cfg.roam.min.z(), cfg.roam.max.z())};
    const double speed = rng.uniform(0.5, 1.1);
    const double heading = rng.uniform(0.0, 2.0 * M_PI);
    s.velocity = {speed * std::cos(heading), 0.0, speed * std::sin(heading)};
    subs.push_back(s);
  }
  return subs;
}

struct BodyCloud {
  std::vector<Eigen::Vector3d> offsets;
  std::vector<double> reflectivity;
};

BodyCloud seeded_cloud(const SubjectScript& s, int n_points, Rng& rng) {
  BodyCloud cloud;
  for (int i = 0; i < n_points; ++i) {
    // Spread across the full height, concentrated laterally like a torso.
    const double y = (static_cast<double>(i) / std::max(1, n_points - 1) - 0.5) * s.box_size.y() * 0.96;
    double x = rng.normal(0.0, s.box_size.x() / 6.0);
    double z = rng.normal(0.0, s.box_size.z() / 6.0);
    x = std::clamp(x, -0.48 * s.box_size.x(), 0.48 * s.box_size.x());
    z = std::clamp(z, -0.48 * s.box_size.z(), 0.48 * s.box_size.z());
    cloud.offsets.emplace_back(x, y, z);
    cloud.reflectivity.push_back(rng.uniform(0.4, 1.0));
  }
  return cloud;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& cfg) {
  RadarConfig radar = cfg.radar;
  if (radar.wavelengths.empty()) radar.derive_wavelengths();
  radar.validate();

  Rng master(cfg.seed);
  Rng layout_rng = master.fork(1);
  std::vector<SubjectScript> subjects =
      cfg.subjects.empty() ? seeded_subjects(cfg, layout_rng) : cfg.subjects;
  std::vector<BodyCloud> clouds;
  for (const auto& s : subjects) {
    clouds.push_back(seeded_cloud(s, cfg.scatterers_per_subject, layout_rng));
  }

  const geom::SceneBounds bounds = radar.bounds();
  const int n_frames = cfg.n_samples + cfg.t_window - 1;
  const int W = radar.w_bins, H = radar.h_bins, D = radar.d_bins;

  struct RawFrame {
    bool valid = false;
    std::vector<double> hor, ver;  // Cartesian W x D / H x D
    std::vector<geom::Box3D> boxes3d;
    std::vector<geom::Box2D> boxes_image;
  };
  std::vector<RawFrame> frames(static_cast<size_t>(n_frames));

  for (int f = 0; f < n_frames; ++f) {
    const double t = f * cfg.frame_dt;
    Scene scene;
    bool ok = true;
    for (size_t si = 0; si < subjects.size(); ++si) {
      const Eigen::Vector3d center = position_at(subjects[si], cfg.roam, t);
      const Eigen::Vector3d vel = velocity_at(subjects[si], cfg.roam, t);
      scene.boxes.push_back({center, subjects[si].box_size});
      for (size_t pi = 0; pi < clouds[si].offsets.size(); ++pi) {
        const Eigen::Vector3d pos = center + clouds[si].offsets[pi];
        Scatterer sc;
        sc.pos = pos;
        sc.reflectivity = clouds[si].reflectivity[pi];
        sc.radial_velocity = vel.dot(pos.normalized());
        scene.scatterers.push_back(sc);
        scene.subject_of.push_back(static_cast<int>(si));
      }
    }
    try {
      validate_scene(scene, radar);
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "[dataset] frame %d dropped: %s\n", f, e.what());
      ok = false;
    }
    if (!ok) continue;

    RawFrame& rf = frames[static_cast<size_t>(f)];
    Rng noise_hor = master.fork(1000 + 2 * static_cast<uint64_t>(f));
    Rng noise_ver = master.fork(1000 + 2 * static_cast<uint64_t>(f) + 1);
    rf.hor = polar_to_cartesian(beamform_direct(scene, radar, View::hor, &noise_hor), radar,
                                View::hor);
    rf.ver = polar_to_cartesian(beamform_direct(scene, radar, View::ver, &noise_ver), radar,
                                View::ver);

    bool proj_ok = true;
    for (size_t si = 0; si < subjects.size(); ++si) {
      const geom::Box3D b3 =
          geom::normalize_box(scene.boxes[si].center, scene.boxes[si].size, bounds);
      const geom::PinholeResult pr = geom::project_pinhole(
          geom::radar_to_camera(geom::denormalize(b3, bounds), cfg.transform), cfg.intrinsics);
      if (!pr.valid) {
        proj_ok = false;
        break;
      }
      rf.boxes3d.push_back(b3);
      rf.boxes_image.push_back(pr.box);
    }
    if (!proj_ok) {
      std::fprintf(stderr, "[dataset] frame %d dropped: subject behind camera\n", f);
      continue;
    }
    rf.valid = true;
  }

  // Log scale, then one normalization constant for the whole dataset.
  if (cfg.log_scale) {
    for (auto& rf : frames) {
      if (!rf.valid) continue;
      for (auto& v : rf.hor) v = std::log1p(v);
      for (auto& v : rf.ver) v = std::log1p(v);
    }
  }
  double norm_scale = 1.0;
  if (cfg.p99_normalize) {
    std::vector<double> all;
    for (const auto& rf : frames) {
      if (!rf.valid) continue;
      all.insert(all.end(), rf.hor.begin(), rf.hor.end());
      all.insert(all.end(), rf.ver.begin(), rf.ver.end());
    }
    if (!all.empty()) {
      const size_t k = static_cast<size_t>(0.99 * (all.size() - 1));
      std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
      norm_scale = std::max(all[k], 1e-12);
      for (auto& rf : frames) {
        if (!rf.valid) continue;
        for (auto& v : rf.hor) v /= norm_scale;
        for (auto& v : rf.ver) v /= norm_scale;
      }
    }
  }

  Dataset ds;
  ds.meta.t_window = cfg.t_window;
  ds.meta.w = W;
  ds.meta.h = H;
  ds.meta.d = D;
  ds.meta.bounds = bounds;
  ds.meta.intrinsics = cfg.intrinsics;
  ds.meta.transform = cfg.transform;
  ds.meta.log_scale = cfg.log_scale;
  ds.meta.norm_scale = norm_scale;
  ds.meta.seed = cfg.seed;

  for (int e = cfg.t_window - 1; e < n_frames; ++e) {
    bool window_ok = true;
    for (int k = e - cfg.t_window + 1; k <= e; ++k) {
      window_ok = window_ok && frames[static_cast<size_t>(k)].valid;
    }
    if (!window_ok) continue;

    FrameSample s;
    s.frame_id = e;
    s.scene_id = 0;
    s.hor.reserve(static_cast<size_t>(cfg.t_window) * W * D);
    s.ver.reserve(static_cast<size_t>(cfg.t_window) * H * D);
    for (int k = e - cfg.t_window + 1; k <= e; ++k) {
      const RawFrame& rf = frames[static_cast<size_t>(k)];
      for (double v : rf.hor) s.hor.push_back(static_cast<float>(v));
      for (double v : rf.ver) s.ver.push_back(static_cast<float>(v));
    }
    s.boxes3d = frames[static_cast<size_t>(e)].boxes3d;
    s.boxes_image = frames[static_cast<size_t>(e)].boxes_image;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ------------------------------- file formats -------------------------------

namespace {

void put_u16(std::ofstream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ofstream& out, float v) {
  uint32_t u;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, 4);
  put_u32(out, u);
}

uint16_t get_u16(std::ifstream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

constexpr uint16_t kMvrhVersion = 1;

json box3d_json(const geom::Box3D& b) { return json::array({b.cx, b.cy, b.cz, b.w, b.h, b.d}); }
json box2d_json(const geom::Box2D& b) { return json::array({b.cx, b.cy, b.w, b.h}); }

geom::Box3D box3d_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>(), j.at(4).get<double>(), j.at(5).get<double>()};
}
geom::Box2D box2d_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

}  // namespace

void write_mvrh(const std::string& path, int d0, int d1, int d2,
                const std::vector<float>& payload) {
  if (static_cast<size_t>(d0) * d1 * d2 != payload.size()) {
    throw std::invalid_argument("write_mvrh: dims do not match payload");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("MVRH", 4);
  put_u16(out, kMvrhVersion);
  put_u32(out, static_cast<uint32_t>(d0));
  put_u32(out, static_cast<uint32_t>(d1));
  put_u32(out, static_cast<uint32_t>(d2));
  for (float v : payload) put_f32(out, v);
}

MvrhData read_mvrh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "MVRH") throw std::runtime_error(path + ": bad magic");
  const uint16_t version = get_u16(in);
  if (version != kMvrhVersion) throw std::runtime_error(path + ": unsupported version");
  MvrhData m;
  m.d0 = static_cast<int>(get_u32(in));
  m.d1 = static_cast<int>(get_u32(in));
  m.d2 = static_cast<int>(get_u32(in));
  const size_t n = static_cast<size_t>(m.d0) * m.d1 * m.d2;
  m.payload.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t u = get_u32(in);
    float f;
    std::memcpy(&f, &u, 4);
    m.payload[i] = f;
  }
  if (!in) throw std::runtime_error(path + ": truncated payload");
  return m;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "heatmaps");
  std::ofstream ann(fs::path(dir) / "annotations.jsonl");
  if (!ann) throw std::runtime_error("cannot write annotations in " + dir);

  json header;
  header["type"] = "header";
  header["version"] = 1;
  header["t_window"] = ds.meta.t_window;
  header["dims"] = {{"w", ds.meta.w}, {"h", ds.meta.h}, {"d", ds.meta.d}};
  header["bounds"] = {{"min", {ds.meta.bounds.min.x(), ds.meta.bounds.min.y(), ds.meta.bounds.min.z()}},
                      {"max", {ds.meta.bounds.max.x(), ds.meta.bounds.max.y(), ds.meta.bounds.max.z()}}};
  header["intrinsics"] = {{"fx", ds.meta.intrinsics.fx},   {"fy", ds.meta.intrinsics.fy},
                          {"cx0", ds.meta.intrinsics.cx0}, {"cy0", ds.meta.intrinsics.cy0},
                          {"image_w", ds.meta.intrinsics.image_w},
                          {"image_h", ds.meta.intrinsics.image_h}};
  header["transform"] = {{"omega", {ds.meta.transform.omega.x(), ds.meta.transform.omega.y(),
                                    ds.meta.transform.omega.z()}},
                         {"t", {ds.meta.transform.t.x(), ds.meta.transform.t.y(),
                                ds.meta.transform.t.z()}}};
  header["log_scale"] = ds.meta.log_scale;
  header["norm_scale"] = ds.meta.norm_scale;
  header["seed"] = ds.meta.seed;
  ann << header.dump() << "\n";

  char name[64];
  for (const FrameSample& s : ds.samples) {
    std::snprintf(name, sizeof(name), "heatmaps/frame_%06d_hor.mvrh", s.frame_id);
    const std::string hor_path = name;
    std::snprintf(name, sizeof(name), "heatmaps/frame_%06d_ver.mvrh", s.frame_id);
    const std::string ver_path = name;
    write_mvrh((fs::path(dir) / hor_path).string(), ds.meta.t_window, ds.meta.w, ds.meta.d, s.hor);
    write_mvrh((fs::path(dir) / ver_path).string(), ds.meta.t_window, ds.meta.h, ds.meta.d, s.ver);

    json row;
    row["type"] = "frame";
    row["frame_id"] = s.frame_id;
    row["scene_id"] = s.scene_id;
    row["boxes3d"] = json::array();
    for (const auto& b : s.boxes3d) row["boxes3d"].push_back(box3d_json(b));
    row["boxes_image"] = json::array();
    for (const auto& b : s.boxes_image) row["boxes_image"].push_back(box2d_json(b));
    row["hor_path"] = hor_path;
    row["ver_path"] = ver_path;
    ann << row.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream ann(fs::path(dir) / "annotations.jsonl");
  if (!ann) throw std::runtime_error("cannot open annotations in " + dir);
  Dataset ds;
  std::string line;
  bool have_header = false;
  while (std::getline(ann, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      ds.meta.t_window = j.at("t_window").get<int>();
      ds.meta.w = j.at("dims").at("w").get<int>();
      ds.meta.h = j.at("dims").at("h").get<int>();
      ds.meta.d = j.at("dims").at("d").get<int>();
      const auto& bmin = j.at("bounds").at("min");
      const auto& bmax = j.at("bounds").at("max");
      ds.meta.bounds.min = {bmin.at(0).get<double>(), bmin.at(1).get<double>(), bmin.at(2).get<double>()};
      ds.meta.bounds.max = {bmax.at(0).get<double>(), bmax.at(1).get<double>(), bmax.at(2).get<double>()};
      const auto& K = j.at("intrinsics");
      ds.meta.intrinsics = {K.at("fx").get<double>(), K.at("fy").get<double>(),
                            K.at("cx0").get<double>(), K.at("cy0").get<double>(),
                            K.at("image_w").get<int>(), K.at("image_h").get<int>()};
      const auto& T = j.at("transform");
      ds.meta.transform.omega = {T.at("omega").at(0).get<double>(), T.at("omega").at(1).get<double>(),
                                 T.at("omega").at(2).get<double>()};
      ds.meta.transform.t = {T.at("t").at(0).get<double>(), T.at("t").at(1).get<double>(),
                             T.at("t").at(2).get<double>()};
      ds.meta.log_scale = j.at("log_scale").get<bool>();
      ds.meta.norm_scale = j.at("norm_scale").get<double>();
      ds.meta.seed = j.at("seed").get<uint64_t>();
      have_header = true;
    } else if (type == "frame") {
      if (!have_header) throw std::runtime_error("annotations: frame before header");
      FrameSample s;
      s.frame_id = j.at("frame_id").get<int>();
      s.scene_id = j.at("scene_id").get<int>();
      for (const auto& b : j.at("boxes3d")) s.boxes3d.push_back(box3d_from(b));
      for (const auto& b : j.at("boxes_image")) s.boxes_image.push_back(box2d_from(b));
      const MvrhData hor = read_mvrh((fs::path(dir) / j.at("hor_path").get<std::string>()).string());
      const MvrhData ver = read_mvrh((fs::path(dir) / j.at("ver_path").get<std::string>()).string());
      if (hor.d0 != ds.meta.t_window || hor.d1 != ds.meta.w || hor.d2 != ds.meta.d ||
          ver.d0 != ds.meta.t_window || ver.d1 != ds.meta.h || ver.d2 != ds.meta.d) {
        throw std::runtime_error("annotations: heatmap dims disagree with header");
      }
      s.hor = hor.payload;
      s.ver = ver.payload;
      ds.samples.push_back(std::move(s));
    }
  }
  if (!have_header) throw std::runtime_error("annotations: missing header line");
  return ds;
}

}  // namespace mvr::sim
