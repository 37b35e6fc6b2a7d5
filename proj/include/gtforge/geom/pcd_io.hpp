#pragma once

#include <filesystem>

#include "gtforge/geom/point_cloud.hpp"

namespace gtforge {

enum class PcdEncoding { Ascii, Binary };

/// Reads PCD v0.7 (ascii or binary, little-endian). Only x, y, z and an
/// optional intensity field are kept; other fields are skipped. Points with
/// non-finite coordinates are dropped. `# stamp <seconds>` and
/// `# frame_id <name>` comment lines fill the cloud header when present.
PointCloud read_pcd(const std::filesystem::path& path);

/// Writes x y z [intensity] as float32.
void write_pcd(const std::filesystem::path& path, const PointCloud& cloud,
               PcdEncoding encoding = PcdEncoding::Binary);

}  // namespace gtforge
