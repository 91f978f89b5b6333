#include <cstdlib>
#include <fstream>

#include <sys/wait.h>

#include "doctest.h"

#include "cinema3d/assets.hpp"
#include "support.hpp"

using namespace cinema3d;
using namespace testing;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string command = std::string(CINEMA3D_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path prepare(const std::string& name) {
  const fs::path dir = scratch_dir(name);
  Rng rng(2);
  save_frame(random_color(10, 6, rng), dir / "image.png");
  save_pfm(gradient_depth(10, 6, rng, 1.0f, 4.0f), dir / "depth.pfm");
  save_flow(random_flow(10, 6, rng, 0.5), dir / "flow.flo");
  std::ofstream(dir / "hints.json") << R"({"hints": [{"x": 3, "y": 2, "dx": 1, "dy": 0}]})";
  std::ofstream(dir / "job.json")
      << R"({"image": "image.png", "depth": "depth.pfm", "flow": "flow.flo", "out": "out", "frames": 3})";
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("render from a config file and with flag overrides") {
  const fs::path dir = prepare("cli_render");
  CHECK(run("render --config " + (dir / "job.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "frame_00002.png"));
  CHECK_FALSE(fs::exists(dir / "out" / "frame_00003.png"));

  CHECK(run("render --config " + (dir / "job.json").string() + " --hints " + (dir / "hints.json").string() +
            " --frames 2 --trajectory zoom --amplitude 0.1 --out " + (dir / "alt").string()) == 0);
  CHECK(fs::exists(dir / "alt" / "frame_00001.png"));

  CHECK(run("render --image " + (dir / "image.png").string() + " --depth " + (dir / "depth.pfm").string() +
            " --flow " + (dir / "flow.flo").string() + " --frames 2 --out " + (dir / "flags").string()) == 0);
  CHECK(fs::exists(dir / "flags" / "frame_00001.png"));
}

TEST_CASE("exit codes follow the error kind") {
  const fs::path dir = prepare("cli_errors");
  std::ofstream(dir / "unknown.json")
      << R"({"image": "image.png", "depth": "depth.pfm", "flow": "flow.flo", "out": "o", "fps2": 1})";
  CHECK(run("render --config " + (dir / "unknown.json").string()) == 2);
  CHECK(run("render --config " + (dir / "job.json").string() + " --trajectory spiral") == 2);
  CHECK(run("render --config " + (dir / "nowhere.json").string()) == 2);
  CHECK(run("bogus") == 2);

  std::ofstream(dir / "broken.pfm") << "Pf\n10 6\n-1.0\n";
  std::ofstream(dir / "asset.json")
      << R"({"image": "image.png", "depth": "broken.pfm", "flow": "flow.flo", "out": "o"})";
  CHECK(run("render --config " + (dir / "asset.json").string()) == 3);

  std::ofstream(dir / "far.json") << R"({"image": "image.png", "depth": "depth.pfm", "flow": "flow.flo",
                                        "out": "o", "trajectory": "zoom", "amplitude": 40,
                                        "frames": 4, "cull": {"near": 1e9}})";
  CHECK(run("render --config " + (dir / "far.json").string()) == 0);
}

TEST_CASE("motion subcommand writes a dense field") {
  const fs::path dir = prepare("cli_motion");
  CHECK(run("motion --image " + (dir / "image.png").string() + " --hints " + (dir / "hints.json").string() +
            " --out " + (dir / "m.flo").string()) == 0);
  const FlowField m = load_flow(dir / "m.flo");
  CHECK(m.width() == 10);
  CHECK((m.data().col(0) - 1.0f).abs().maxCoeff() < 1e-4f);

  std::ofstream(dir / "bad_hints.json") << R"({"hints": [{"x": 30, "y": 2, "dx": 1, "dy": 0}]})";
  CHECK(run("motion --image " + (dir / "image.png").string() + " --hints " + (dir / "bad_hints.json").string() +
            " --out " + (dir / "n.flo").string()) == 2);
}

}  // TEST_SUITE
