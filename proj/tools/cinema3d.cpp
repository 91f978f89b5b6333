#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cinema3d/assets.hpp"
#include "cinema3d/errors.hpp"
#include "cinema3d/motion.hpp"
#include "cinema3d/pipeline.hpp"
#include "cinema3d/service.hpp"
#include "sample_scene.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cinema3d;

namespace {

struct RenderArgs {
  std::string config;
  std::string image, depth, flow, hints, out, trajectory;
  std::optional<int> frames;
  std::optional<double> amplitude;
  std::optional<int> workers;
  bool dump_layers = false;
};

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
}

int run_render(const RenderArgs& args) {
  json document = json::object();
  fs::path base_dir = fs::current_path();
  if (!args.config.empty()) {
    document = load_json_file(args.config);
    if (!document.is_object()) throw ConfigError("config must be a JSON object");
    base_dir = fs::absolute(args.config).parent_path();
  }
  auto set_path = [&](const char* key, const std::string& value) {
    if (!value.empty()) document[key] = fs::absolute(value).string();
  };
  set_path("image", args.image);
  set_path("depth", args.depth);
  set_path("out", args.out);
  if (!args.flow.empty()) {
    document.erase("hints");
    set_path("flow", args.flow);
  }
  if (!args.hints.empty()) {
    document.erase("flow");
    set_path("hints", args.hints);
  }
  if (!args.trajectory.empty()) document["trajectory"] = args.trajectory;
  if (args.frames) document["frames"] = *args.frames;
  if (args.amplitude) document["amplitude"] = *args.amplitude;
  if (args.workers) document["workers"] = *args.workers;
  if (args.dump_layers) document["dump_layers"] = true;

  const JobConfig config = validate_config(document, base_dir);
  const auto written = render_cinemagraph(config);
  std::cout << "wrote " << written.size() << " frames to " << config.out.string() << '\n';
  return 0;
}

int run_motion(const std::string& image, const std::string& hints_path, const std::string& out) {
  const ColorImage color = load_color(image);
  const HintsDocument document = load_hints_document(hints_path);
  const MaskImage mask = resolve_hint_mask(document, fs::path(hints_path).parent_path(),
                                           color.width(), color.height());
  const MotionEstimate estimate = estimate_motion_from_hints(mask, document.hints);
  save_flow(scale_flow(estimate.flow, document.speed), out);
  std::cout << "solved in " << estimate.iterations << " iterations"
            << (estimate.converged ? "" : " (not converged)") << "; wrote " << out << '\n';
  return 0;
}

int run_serve(int port, const std::string& host, const std::string& assets) {
  ServiceOptions options;
  options.assets_dir = assets;
  Service service(options);
  httplib::Server server;
  service.bind(server);
  std::clog << "[cinema3d] listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) {
    throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D cinemagraph renderer"};
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render a looping cinemagraph to PNG frames");
  render->add_option("--config", render_args.config, "Job JSON");
  render->add_option("--image", render_args.image, "Color PNG");
  render->add_option("--depth", render_args.depth, "Depth PFM or 16-bit PNG");
  auto* flow_opt = render->add_option("--flow", render_args.flow, "Motion field (.flo)");
  auto* hints_opt = render->add_option("--hints", render_args.hints, "Hints JSON");
  flow_opt->excludes(hints_opt);
  render->add_option("--trajectory", render_args.trajectory, "still, zoom, sway or orbit");
  render->add_option("--frames", render_args.frames, "Loop length N");
  render->add_option("--amplitude", render_args.amplitude, "Camera amplitude");
  render->add_option("--out", render_args.out, "Output directory");
  render->add_option("--workers", render_args.workers, "Frame workers (0 = all cores)");
  render->add_flag("--dump-layers", render_args.dump_layers, "Write layered depth images");

  std::string motion_image, motion_hints, motion_out;
  auto* motion = app.add_subcommand("motion", "Solve a dense motion field from hints");
  motion->add_option("--image", motion_image, "Color PNG")->required();
  motion->add_option("--hints", motion_hints, "Hints JSON")->required();
  motion->add_option("--out", motion_out, "Output .flo")->required();

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string assets = ".";
  auto* serve = app.add_subcommand("serve", "Run the authoring HTTP service");
  serve->add_option("--port", port, "Port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--assets", assets, "Asset and job directory");

  std::string sample_out = "samples";
  int sample_width = 256, sample_height = 144;
  auto* sample = app.add_subcommand("sample", "Write the synthetic sample scene");
  sample->add_option("--out", sample_out, "Output directory");
  sample->add_option("--width", sample_width, "Width");
  sample->add_option("--height", sample_height, "Height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (*render) return run_render(render_args);
    if (*motion) return run_motion(motion_image, motion_hints, motion_out);
    if (*serve) return run_serve(port, host, assets);
    if (*sample) {
      tools::write_sample_scene(sample_out, sample_width, sample_height);
      std::cout << "wrote sample scene to " << sample_out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::render);
  }
  return 0;
}
