#include <CLI11.hpp>

#include <iostream>

#include "hairwisp/diagnostics.hpp"
#include "hairwisp/extraction.hpp"
#include "hairwisp/pipeline.hpp"

namespace hw = hairwisp;

namespace {

int report(const hw::Error& e) {
  std::cerr << "error [" << e.stage() << "] " << e.kind() << ": " << e.what() << '\n';
  return 1;
}

hw::SceneConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  hw::ConfigMap map;
  if (!path.empty()) map = hw::read_config_file(path);
  for (const auto& o : overrides) hw::apply_override(map, o);
  return hw::validate_config(map);
}

// Strokes in input order, then refinement per wisp. Each label keeps the
// pixels of its refined mask that no earlier label claimed.
void annotate(const std::string& matte_path, const std::vector<std::string>& stroke_paths, bool refine,
              const hw::SceneConfig& cfg, const std::string& out) {
  const hw::ScalarMap matte = hw::to_unit_scalar(hw::read_image(matte_path));
  std::vector<hw::Polyline> strokes;
  for (const auto& p : stroke_paths) strokes.push_back(hw::read_polyline(p));
  if (strokes.size() > 255) throw hw::ExtractionError("at most 255 strokes fit in an 8-bit label raster");
  const hw::Raster<int> filled = hw::sketch_fill_all(strokes, matte);

  hw::Raster<std::uint8_t> labels(matte.width(), matte.height(), 0);
  const hw::RefineParams params{cfg.poly_degree, cfg.tip_fraction, cfg.tip_min_width_ratio};
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    hw::Mask m(matte.width(), matte.height(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = filled.data()[i] == static_cast<int>(s) + 1;
    if (refine) {
      try {
        m = hw::refine_wisp(m, params);
      } catch (const hw::ExtractionError& e) {
        throw hw::ExtractionError("stroke " + std::to_string(s) + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.data()[i] && !labels.data()[i]) labels.data()[i] = static_cast<std::uint8_t>(s + 1);
  }
  hw::write_gray_png(out, labels);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hair-wisp cinemagraphs from a still portrait"};
  app.require_subcommand(1);

  auto* animate = app.add_subcommand("animate", "render the animated frame sequence");
  hw::ScenePaths in;
  std::string config_path, out_dir, trajectory, mesh_dir;
  std::vector<std::string> overrides;
  int workers = 1;
  animate->add_option("--image", in.image, "portrait image")->required();
  animate->add_option("--matte", in.matte, "hair matte")->required();
  animate->add_option("--masks", in.masks, "wisp label raster or directory of masks")->required();
  animate->add_option("--contour", in.contour, "forehead contour text file")->required();
  animate->add_option("--depth", in.depth, "depth map, smaller = nearer")->required();
  animate->add_option("--face", in.face, "face mask")->required();
  animate->add_option("--config", config_path, "key = value config file");
  animate->add_option("--out", out_dir, "output directory")->required();
  animate->add_option("--set", overrides, "config override key=value (repeatable)");
  animate->add_option("--workers", workers, "render threads")->check(CLI::Range(1, 256));
  animate->add_option("--trajectory", trajectory, "write the trajectory dump here");
  animate->add_option("--mesh-dir", mesh_dir, "write per-wisp meshes here");

  auto* ann = app.add_subcommand("annotate", "sketch-filled wisp labels from strokes");
  std::string ann_matte, ann_out, ann_config;
  std::vector<std::string> strokes, ann_overrides;
  bool no_refine = false;
  ann->add_option("--matte", ann_matte, "hair matte")->required();
  ann->add_option("--stroke", strokes, "stroke polyline file (repeatable, in order)")->required();
  ann->add_option("--out", ann_out, "label raster to write")->required();
  ann->add_option("--config", ann_config, "key = value config file");
  ann->add_option("--set", ann_overrides, "config override key=value");
  ann->add_flag("--no-refine", no_refine, "skip shape refinement");

  auto* diag = app.add_subcommand("diagnose", "self-warp consistency of a rendered run");
  std::string frames_dir, diag_traj, diag_out;
  diag->add_option("--frames", frames_dir, "directory with frame_0001.png ...")->required();
  diag->add_option("--trajectory", diag_traj, "trajectory dump of the same run")->required();
  diag->add_option("--out", diag_out, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*animate) {
      hw::AnimateRequest req;
      req.inputs = in;
      req.config = resolve_config(config_path, overrides);
      req.out_dir = out_dir;
      req.workers = workers;
      if (!trajectory.empty()) req.trajectory_path = trajectory;
      if (!mesh_dir.empty()) req.mesh_dir = mesh_dir;
      const auto result = hw::run_animate(req);
      std::cout << result.frame_digests.size() << " frames written to " << out_dir << '\n';
    } else if (*ann) {
      annotate(ann_matte, strokes, !no_refine, resolve_config(ann_config, ann_overrides), ann_out);
      std::cout << strokes.size() << " wisps written to " << ann_out << '\n';
    } else if (*diag) {
      const auto frames = hw::read_frames(frames_dir);
      const auto dump = hw::read_trajectory(diag_traj);
      const auto rep = hw::diagnose(frames, dump);
      const auto j = hw::report_json(rep);
      if (!diag_out.empty()) {
        std::ofstream o(diag_out);
        if (!o) throw hw::IoError("cannot write '" + diag_out + "'");
        o << j.dump(2) << '\n';
      }
      std::cout << "pairs " << rep.short_term.size() << "\n"
                << "short_term_mse mean " << j["short_term_mse"]["mean"].get<double>() << " max "
                << j["short_term_mse"]["max"].get<double>() << "\n"
                << "long_term_mse mean " << j["long_term_mse"]["mean"].get<double>() << " max "
                << j["long_term_mse"]["max"].get<double>() << "\n";
    }
  } catch (const hw::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
