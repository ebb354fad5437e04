#pragma once

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hairwisp/compositing.hpp"
#include "hairwisp/config.hpp"
#include "hairwisp/extraction.hpp"
#include "hairwisp/image_io.hpp"
#include "hairwisp/meshing.hpp"
#include "hairwisp/scene.hpp"
#include "hairwisp/simulation.hpp"
#include "hairwisp/warping.hpp"

namespace hairwisp {

inline std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr)) throw IoError("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string file_digest(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string joined;
    for (const auto& f : files) joined += f.filename().string() + ":" + file_digest(f) + "\n";
    return sha256_hex(joined.data(), joined.size());
  }
  const auto bytes = detail::read_file_bytes(path);
  return sha256_hex(bytes.data(), bytes.size());
}

// Digest of the raw RGBA bytes, independent of the PNG encoder.
inline std::string frame_digest(const Image& img) {
  return sha256_hex(img.data().data(), img.data().size() * sizeof(Rgba8));
}

inline std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.png", index + 1);
  return buf;
}

struct WispStats {
  int index = -1;
  WispClass wisp_class = WispClass::ScalpConnected;
  std::size_t vertices = 0, edges = 0, triangles = 0, pinned = 0;
  bool anchored = false;
  bool refined = false;
  bool animated = false;
  std::string note;
};

// Seconds spent per stage, in execution order.
using StageTimings = std::vector<std::pair<std::string, double>>;

class StageTimer {
 public:
  explicit StageTimer(StageTimings& out) : out_(out) {}
  template <typename F>
  decltype(auto) run(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      StageTimings& out;
      const std::string& name;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        out.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
    } rec{out_, name, t0};
    return f();
  }

 private:
  StageTimings& out_;
};

// Everything that is fixed per scene: refined masks, meshes, layers, the
// inpainted background and the layer order.
class Animator {
 public:
  Animator(StillScene scene, SceneConfig cfg) : scene_(std::move(scene)), cfg_(std::move(cfg)) {
    StageTimer timer(timings_);
    timer.run("extraction", [&] { refine_masks(); });
    std::vector<WispMesh> meshes;
    WispMesh aux;
    timer.run("meshing", [&] { build_meshes(meshes, aux); });
    system_.emplace(std::move(meshes), std::move(aux));
    timer.run("layers", [&] {
      layers_ = extract_layers(scene_);
      background_ = inpaint_background(layers_.background.layer, layers_.hole, {}, &inpaint_);
      plan_ = sort_layers(layers_.face, layers_.wisps);
    });
  }

  const StillScene& scene() const { return scene_; }
  const SceneConfig& config() const { return cfg_; }
  const MeshSystem& system() const { return *system_; }
  const ExtractedLayers& layers() const { return layers_; }
  const Layer& background() const { return background_; }
  const FramePlan& plan() const { return plan_; }
  const std::vector<WispStats>& wisp_stats() const { return stats_; }
  const InpaintStats& inpaint_stats() const { return inpaint_; }
  const StageTimings& timings() const { return timings_; }
  // Index into system().wisps() for wisp k, or -1 when the wisp is static.
  int mesh_of(std::size_t wisp) const { return mesh_of_[wisp]; }

  Trajectory simulate() const { return hairwisp::simulate(*system_, cfg_); }

  Image render_frame(const SimState& state) const {
    const PixelRect frame{0, 0, scene_.width(), scene_.height()};
    std::vector<Layer> warped;
    warped.reserve(layers_.wisps.size());
    for (std::size_t k = 0; k < layers_.wisps.size(); ++k) {
      const int m = mesh_of_[k];
      if (m < 0) {
        warped.push_back(layers_.wisps[k].layer);
        continue;
      }
      const auto um = static_cast<std::size_t>(m);
      warped.push_back(warp_layer(layers_.wisps[k].layer, system_->wisps()[um].rest, state.wisps[um].positions,
                                  frame, cfg_.tps_lambda));
    }
    return composite_frame(plan_, background_, layers_.face.layer, warped);
  }

  // Renders every trajectory frame on `workers` threads. `sink(index, image)`
  // is called from the worker threads, at most once per index.
  void render(const Trajectory& traj, int workers, const std::function<void(std::size_t, Image&&)>& sink) const {
    const std::size_t n = traj.frames.size();
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          sink(i, render_frame(traj.frames[i]));
        } catch (...) {
          std::lock_guard<std::mutex> g(failure_lock);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    };
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (count == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < count; ++t) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
  }

 private:
  void refine_masks() {
    stats_.resize(scene_.wisp_masks.size());
    const RefineParams params{cfg_.poly_degree, cfg_.tip_fraction, cfg_.tip_min_width_ratio};
    for (std::size_t k = 0; k < scene_.wisp_masks.size(); ++k) {
      stats_[k].index = static_cast<int>(k);
      if (!cfg_.refine) continue;
      try {
        Mask refined = refine_wisp(scene_.wisp_masks[k], params);
        if (count_on(refined) >= 16) {
          scene_.wisp_masks[k] = std::move(refined);
          stats_[k].refined = true;
        } else {
          stats_[k].note = "refinement left too few pixels; original mask kept";
        }
      } catch (const ExtractionError& e) {
        stats_[k].note = std::string("refinement skipped: ") + e.what();
      }
    }
  }

  void build_meshes(std::vector<WispMesh>& meshes, WispMesh& aux) {
    const Polyline& contour = scene_.forehead_contour;
    std::vector<WispClass> classes;
    bool need_aux = false;
    for (const Mask& m : scene_.wisp_masks) {
      classes.push_back(classify_wisp(m, contour));
      need_aux |= classes.back() == WispClass::ScalpUnconnected;
    }
    if (need_aux) aux = build_auxiliary_mesh(scene_.hair_matte, contour, cfg_.grid_n_aux);

    mesh_of_.assign(scene_.wisp_masks.size(), -1);
    for (std::size_t k = 0; k < scene_.wisp_masks.size(); ++k) {
      WispStats& st = stats_[k];
      st.wisp_class = classes[k];
      try {
        WispMesh mesh = build_wisp_mesh(scene_.wisp_masks[k], cfg_.grid_n);
        mesh.source_mask_id = static_cast<int>(k);
        mesh.wisp_class = classes[k];
        if (classes[k] == WispClass::ScalpConnected)
          pin_scalp_vertices(mesh, contour);
        else
          bind_unconnected(mesh, aux);
        st.vertices = mesh.vertex_count();
        st.edges = mesh.edges.size();
        st.triangles = mesh.triangles.size();
        st.pinned = mesh.pinned_count();
        st.anchored = mesh.anchor.has_value();
        st.animated = true;
        mesh_of_[k] = static_cast<int>(meshes.size());
        meshes.push_back(std::move(mesh));
      } catch (const MeshError& e) {
        if (!st.note.empty()) st.note += "; ";
        st.note += std::string("rendered static: ") + e.what();
      }
    }
  }

  StillScene scene_;
  SceneConfig cfg_;
  std::optional<MeshSystem> system_;
  ExtractedLayers layers_;
  Layer background_;
  FramePlan plan_;
  InpaintStats inpaint_;
  std::vector<WispStats> stats_;
  std::vector<int> mesh_of_;
  StageTimings timings_;
};

// All T frames in order.
inline std::vector<Image> render_video(const StillScene& scene, const SceneConfig& cfg, int workers = 1) {
  const Animator animator(scene, cfg);
  const Trajectory traj = animator.simulate();
  std::vector<Image> frames(traj.frames.size());
  animator.render(traj, workers, [&](std::size_t i, Image&& img) { frames[i] = std::move(img); });
  return frames;
}

struct AnimateRequest {
  ScenePaths inputs;
  SceneConfig config;
  std::filesystem::path out_dir;
  int workers = 1;
  std::optional<std::filesystem::path> trajectory_path;
  std::optional<std::filesystem::path> mesh_dir;
};

struct AnimateResult {
  std::vector<std::string> frame_digests;
  nlohmann::ordered_json manifest;
};

inline nlohmann::ordered_json wisp_json(const WispStats& s) {
  nlohmann::ordered_json j;
  j["index"] = s.index;
  j["class"] = to_string(s.wisp_class);
  j["vertices"] = s.vertices;
  j["edges"] = s.edges;
  j["triangles"] = s.triangles;
  j["pinned"] = s.pinned;
  j["anchored"] = s.anchored;
  j["refined"] = s.refined;
  j["animated"] = s.animated;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

// Full run: load, animate, write frames (and optional dumps) plus
// manifest.json into out_dir.
inline AnimateResult run_animate(const AnimateRequest& req) {
  namespace fs = std::filesystem;
  StageTimings timings;
  StageTimer timer(timings);

  const StillScene scene = timer.run("load", [&] { return load_scene(req.inputs); });
  const Animator animator(scene, req.config);
  timings.insert(timings.end(), animator.timings().begin(), animator.timings().end());
  const Trajectory traj = timer.run("simulation", [&] { return animator.simulate(); });

  fs::create_directories(req.out_dir);
  if (req.trajectory_path) write_trajectory(*req.trajectory_path, animator.system(), traj);
  if (req.mesh_dir) {
    fs::create_directories(*req.mesh_dir);
    for (const WispMesh& m : animator.system().wisps())
      write_mesh(*req.mesh_dir / ("wisp_" + std::to_string(m.source_mask_id) + ".obj"), m);
    if (!animator.system().aux().rest.empty()) write_mesh(*req.mesh_dir / "aux.obj", animator.system().aux());
  }

  AnimateResult result;
  result.frame_digests.resize(traj.frames.size());
  timer.run("render", [&] {
    animator.render(traj, req.workers, [&](std::size_t i, Image&& img) {
      result.frame_digests[i] = frame_digest(img);
      write_png(req.out_dir / frame_name(i), img);
    });
  });

  auto& j = result.manifest;
  j["config"] = req.config.to_map();
  nlohmann::ordered_json inputs;
  const std::pair<const char*, const fs::path*> named[] = {
      {"image", &req.inputs.image}, {"matte", &req.inputs.matte}, {"masks", &req.inputs.masks},
      {"contour", &req.inputs.contour}, {"depth", &req.inputs.depth}, {"face", &req.inputs.face}};
  for (auto [name, path] : named) inputs[name] = {{"path", path->string()}, {"sha256", file_digest(*path)}};
  j["inputs"] = inputs;
  j["size"] = {scene.width(), scene.height()};
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& [name, seconds] : timings) stages.push_back({{"stage", name}, {"seconds", seconds}});
  j["timings"] = stages;
  j["inpaint"] = {{"iterations", animator.inpaint_stats().iterations},
                  {"last_change", animator.inpaint_stats().last_change}};
  nlohmann::ordered_json plan = nlohmann::ordered_json::array();
  for (const PlanEntry& e : animator.plan().order)
    plan.push_back(e.kind == LayerKind::Wisp ? "wisp " + std::to_string(e.wisp_index) : to_string(e.kind));
  j["layer_order"] = plan;
  nlohmann::ordered_json wisps = nlohmann::ordered_json::array();
  for (const WispStats& s : animator.wisp_stats()) wisps.push_back(wisp_json(s));
  j["wisps"] = wisps;
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.frame_digests.size(); ++i)
    frames.push_back({{"file", frame_name(i)}, {"sha256", result.frame_digests[i]}});
  j["frames"] = frames;

  std::ofstream out(req.out_dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in '" + req.out_dir.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in '" + req.out_dir.string() + "'");
  return result;
}

}  // namespace hairwisp
