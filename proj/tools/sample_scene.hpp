#pragma once

#include <filesystem>

namespace cinema3d::tools {

/// Writes a small synthetic waterfall scene: image.png, depth.pfm, mask.png,
/// hints.json and job.json.
void write_sample_scene(const std::filesystem::path& dir, int width = 256, int height = 144);

}  // namespace cinema3d::tools
