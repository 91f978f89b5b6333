#include "doctest.h"

#include "cinema3d/errors.hpp"
#include "cinema3d/renderer.hpp"
#include "support.hpp"

using namespace cinema3d;
using namespace testing;

namespace {

PointCloud make_cloud(std::vector<Eigen::Vector3d> positions, std::vector<Eigen::Vector3f> colors) {
  PointCloud cloud;
  const auto n = Eigen::Index(positions.size());
  cloud.positions.resize(3, n);
  cloud.colors.resize(3, n);
  cloud.pixels = Eigen::Matrix2Xi::Zero(2, n);
  cloud.layers.assign(positions.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    cloud.positions.col(i) = positions[std::size_t(i)];
    cloud.colors.col(i) = colors[std::size_t(i)];
  }
  return cloud;
}

Camera centered(int size) {
  Camera cam;
  cam.intrinsics = {double(size), double(size), (size - 1) / 2.0, (size - 1) / 2.0};
  return cam;
}

RenderLayers uniform_layers(int w, int h, float color, float depth, float alpha) {
  RenderLayers l{ColorImage(w, h), DepthMap(w, h), AlphaMap(w, h)};
  l.color.data().setConstant(color);
  l.depth.data().setConstant(alpha > 0 ? depth : 0.0f);
  l.alpha.data().setConstant(alpha);
  return l;
}

bool layers_equal(const RenderLayers& a, const RenderLayers& b) {
  return (a.color.data() == b.color.data()).all() && (a.depth.data() == b.depth.data()).all() &&
         (a.alpha.data() == b.alpha.data()).all();
}

}  // namespace

TEST_SUITE("renderer") {

TEST_CASE("nearest splat basics") {
  const Camera cam = centered(5);
  const SplatConfig nearest{SplatMode::nearest};
  const RenderLayers one = splat(make_cloud({{0, 0, 2}}, {{1, 0, 0}}), cam, 5, 5, nearest);
  CHECK(one.alpha.at(2, 2) == 1.0f);
  CHECK(one.depth.at(2, 2) == 2.0f);
  CHECK(one.color.at(2, 2, 0) == 1.0f);
  CHECK(one.alpha.data().sum() == 1.0f);

  const RenderLayers two =
      splat(make_cloud({{0, 0, 2}, {0, 0, 1}}, {{1, 0, 0}, {0, 1, 0}}), cam, 5, 5, nearest);
  CHECK(two.depth.at(2, 2) == 1.0f);
  CHECK(two.color.at(2, 2, 1) == 1.0f);

  const RenderLayers behind = splat(make_cloud({{0, 0, -1}, {0, 0, 5e-4}}, {{1, 1, 1}, {1, 1, 1}}),
                                    cam, 5, 5, nearest);
  CHECK(behind.alpha.data().isZero());

  const RenderLayers empty = splat(PointCloud{}, cam, 5, 5, nearest);
  CHECK(empty.alpha.data().isZero());
  CHECK(empty.depth.data().isZero());
  CHECK(empty.color.data().isZero());
}

TEST_CASE("nearest splat equals brute-force argmin depth") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = uniform_int(rng, 1, 16), h = uniform_int(rng, 1, 16);
    const int n = uniform_int(rng, 0, 256);
    std::vector<Eigen::Vector3d> pos;
    std::vector<Eigen::Vector3f> col;
    for (int i = 0; i < n; ++i) {
      if (i > 0 && uniform(rng, 0, 1) < 0.2) {
        pos.push_back(pos[std::size_t(uniform_int(rng, 0, i - 1))]);
      } else {
        pos.push_back({uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2),
                       double(uniform_int(rng, -1, 6)) * 0.5});
      }
      col.push_back(Eigen::Vector3f::Random().cwiseAbs());
    }
    Camera cam;
    cam.intrinsics = {w * 0.5, h * 0.5, (w - 1) / 2.0, (h - 1) / 2.0};
    const PointCloud cloud = make_cloud(pos, col);
    CHECK(layers_equal(splat(cloud, cam, w, h, {SplatMode::nearest}),
                       brute_force_nearest(cloud, cam, w, h, 1e-3)));
  }
}

TEST_CASE("soft splat footprint and depth window") {
  const Camera cam = centered(5);
  const RenderLayers center = splat(make_cloud({{0, 0, 2}}, {{0, 0, 1}}), cam, 5, 5);
  CHECK(center.alpha.at(2, 2) == 1.0f);
  CHECK(center.alpha.data().sum() == 1.0f);

  // Half a pixel to the right: two pixels at half coverage.
  const RenderLayers half = splat(make_cloud({{0.5 * 2 / 5.0, 0, 2}}, {{0, 0, 1}}), cam, 5, 5);
  CHECK(half.alpha.at(2, 2) == doctest::Approx(0.5));
  CHECK(half.alpha.at(3, 2) == doctest::Approx(0.5));
  CHECK(half.color.at(3, 2, 2) == doctest::Approx(1.0));
  CHECK(half.depth.at(3, 2) == doctest::Approx(2.0));

  const RenderLayers close = splat(
      make_cloud({{0, 0, 1.0}, {0, 0, 1.005}}, {{1, 0, 0}, {0, 1, 0}}), cam, 5, 5);
  CHECK(close.color.at(2, 2, 0) == doctest::Approx(0.5));
  CHECK(close.depth.at(2, 2) == doctest::Approx(1.0025));
  CHECK(close.alpha.at(2, 2) == 1.0f);

  const RenderLayers apart = splat(
      make_cloud({{0, 0, 1.1}, {0, 0, 1.0}}, {{1, 0, 0}, {0, 1, 0}}), cam, 5, 5);
  CHECK(apart.color.at(2, 2, 1) == 1.0f);
  CHECK(apart.depth.at(2, 2) == 1.0f);

  CHECK_THROWS_AS(splat(PointCloud{}, cam, 5, 5, {SplatMode::soft, 0.0}), ConfigError);
}

TEST_CASE("alpha is zero exactly where depth is zero") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = uniform_int(rng, 4, 20), h = uniform_int(rng, 4, 20);
    std::vector<Eigen::Vector3d> pos;
    std::vector<Eigen::Vector3f> col;
    for (int i = uniform_int(rng, 0, 60); i > 0; --i) {
      pos.push_back({uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -0.5, 4)});
      col.push_back(Eigen::Vector3f::Random().cwiseAbs());
    }
    Camera cam;
    cam.intrinsics = {double(w), double(h), w / 2.0, h / 2.0};
    for (const SplatMode mode : {SplatMode::nearest, SplatMode::soft}) {
      SplatConfig config;
      config.mode = mode;
      config.radius_px = uniform(rng, 0.5, 2.5);
      const RenderLayers out = splat(make_cloud(pos, col), cam, w, h, config);
      CHECK(((out.alpha.data() == 0.0f) == (out.depth.data() == 0.0f)).all());
      CHECK(out.alpha.data().maxCoeff() <= 1.0f);
      CHECK(out.alpha.data().minCoeff() >= 0.0f);
      CHECK(out.color.data().allFinite());
    }
  }
}

TEST_CASE("blend weight endpoints and the scalar case") {
  const RenderLayers f = uniform_layers(3, 2, 0.2f, 2.0f, 1.0f);
  const RenderLayers b = uniform_layers(3, 2, 0.6f, 5.0f, 1.0f);
  CHECK(blend_weights(f, b, 0, 8, 10).weight.data().minCoeff() >= 1.0f - 1e-6f);
  CHECK(blend_weights(f, b, 8, 8, 10).weight.data().maxCoeff() <= 1e-6f);

  // D̂_f = 0, D̂_b ≈ 1 after joint normalization; s = 1.
  const WeightMap mid = blend_weights(f, b, 4, 8, 1.0);
  const double want = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(std::abs(mid.weight.at(0, 0) - want) <= 1e-6);
  CHECK(std::abs(want - 0.731059) <= 1e-6);
  CHECK(std::abs(mid.weight.at(0, 0) - reference_weight(4, 8, 1, 1, 0, 3.0 / (3.0 + 1e-8), 1)) <= 1e-6);

  CHECK_THROWS_AS(blend_weights(f, b, 0, 0, 10), ConfigError);
  CHECK_THROWS_AS(blend_weights(f, b, 9, 8, 10), ConfigError);
  CHECK_THROWS_AS(blend_weights(f, b, -1, 8, 10), ConfigError);
}

TEST_CASE("blend weights stay in range and favor nearer depth") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    RenderLayers f = uniform_layers(4, 1, 0.5f, 1.0f, 1.0f);
    RenderLayers b = uniform_layers(4, 1, 0.5f, 1.0f, 1.0f);
    for (int x = 0; x < 4; ++x) {
      const bool cf = uniform(rng, 0, 1) < 0.8, cb = uniform(rng, 0, 1) < 0.8;
      f.alpha.at(x, 0) = cf ? float(uniform(rng, 0.01, 1)) : 0.0f;
      b.alpha.at(x, 0) = cb ? float(uniform(rng, 0.01, 1)) : 0.0f;
      f.depth.at(x, 0) = cf ? float(uniform(rng, 1, 10)) : 0.0f;
      b.depth.at(x, 0) = cb ? float(uniform(rng, 1, 10)) : 0.0f;
    }
    const int n = uniform_int(rng, 1, 20), t = uniform_int(rng, 0, n);
    const double s = uniform(rng, 0, 20);
    const WeightMap w = blend_weights(f, b, t, n, s);
    for (int x = 0; x < 4; ++x) {
      if (w.hole.at(x, 0)) continue;
      CHECK(w.weight.at(x, 0) >= 0.0f);
      CHECK(w.weight.at(x, 0) <= 1.0f);
    }
    // Pushing the forward depth back (within the existing range) never
    // raises the forward share.
    if (f.alpha.at(0, 0) > 0 && !w.hole.at(0, 0)) {
      RenderLayers farther = f;
      farther.depth.at(0, 0) = std::max({f.depth.data().maxCoeff(), b.depth.data().maxCoeff()});
      const WeightMap w2 = blend_weights(farther, b, t, n, s);
      CHECK(w2.weight.at(0, 0) <= w.weight.at(0, 0) + 1e-7f);
    }
  }
}

TEST_CASE("composite endpoints, linear blend and holes") {
  const RenderLayers f = uniform_layers(4, 3, 0.2f, 2.0f, 1.0f);
  const RenderLayers b = uniform_layers(4, 3, 0.6f, 4.0f, 1.0f);
  WeightMap w{Raster<float, 1, WeightTag>(4, 3), MaskImage(4, 3)};
  w.weight.data().setOnes();
  Frame frame = composite(f, b, w);
  CHECK((frame.color.data() == f.color.data()).all());
  CHECK((frame.depth.data() == f.depth.data()).all());

  w.weight.data().setConstant(0.5f);
  frame = composite(f, b, w);
  CHECK(frame.color.at(1, 1, 0) == doctest::Approx(0.4));
  CHECK(frame.depth.at(1, 1) == doctest::Approx(3.0));

  w.hole.data().setOnes();
  frame = composite(f, b, w);
  CHECK(frame.color.data().isZero());
  CHECK(frame.hole_count() == 12);

  w.hole.data().setZero();
  w.hole.at(1, 1) = 1;
  w.weight.data().setOnes();
  frame = composite(f, b, w);
  CHECK(frame.color.at(1, 1, 0) == doctest::Approx(0.2));
  CHECK(frame.depth.at(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("render_view with zero motion and the source camera") {
  Rng rng(7);
  const int w = 24, h = 16;
  const ColorImage color = random_color(w, h, rng);
  const Camera cam = default_camera(w, h, 24);
  const LayeredScene scene = build_scene(color, two_plane_depth(w, h, rng, 2.0f, 7.0f), cam);
  RenderConfig nearest;
  nearest.splat.mode = SplatMode::nearest;
  const FlowField still(w, h);
  const Frame first = render_view(scene, still, 0, 6, cam, nearest);
  for (int t = 1; t <= 6; ++t) {
    CHECK((render_view(scene, still, t, 6, cam, nearest).color.data() == first.color.data()).all());
  }
  CHECK((first.color.data() == color.data()).all());
}

TEST_CASE("render_view closes the loop and rejects bad times") {
  Rng rng(10);
  const int w = 20, h = 20;
  const Camera cam = default_camera(w, h, 20);
  const LayeredScene scene =
      build_scene(random_color(w, h, rng), gradient_depth(w, h, rng, 1.0f, 5.0f), cam);
  const FlowField m = random_flow(w, h, rng, 1.5);
  const Camera moved = shifted_camera(cam, {0.2, -0.1, 0.3});
  const Frame a = render_view(scene, m, 0, 9, moved);
  const Frame b = render_view(scene, m, 9, 9, moved);
  CHECK((a.color.data() - b.color.data()).abs().maxCoeff() <= 1e-6f);
  CHECK_THROWS_AS(render_view(scene, m, 10, 9, cam), ConfigError);
  CHECK_THROWS_AS(render_view(scene, FlowField(w, h + 1), 0, 9, cam), AssetError);
}

TEST_CASE("bidirectional blending only adds coverage") {
  Rng rng(13);
  const int w = 40, h = 24;
  const Camera cam = default_camera(w, h, 40);
  const LayeredScene scene =
      flat_scene(random_color(w, h, rng), constant_depth(w, h, 3.0f), cam);
  const FlowField m = constant_flow(w, h, 1.0f, 0.0f);
  for (int n : {4, 8, 12}) {
    for (int t = 1; t < n; ++t) {
      const ViewRender v = render_view_detailed(scene, m, t, n, cam);
      for (Eigen::Index i = 0; i < v.frame.hole.pixel_count(); ++i) {
        if (!v.frame.hole.data()(i)) continue;
        CHECK(v.forward.alpha.data()(i) == 0.0f);
        CHECK(v.backward.alpha.data()(i) == 0.0f);
      }
    }
  }
}

}  // TEST_SUITE
