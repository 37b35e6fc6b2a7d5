#pragma once

#include "json.hpp"

#include "gtforge/geom/pose.hpp"

namespace gtforge {

/// {"translation": [x, y, z], "rotation_wxyz": [w, x, y, z]}
nlohmann::json pose_to_json(const Pose& pose);
/// Throws Parse on missing or malformed fields. The quaternion is normalised.
Pose pose_from_json(const nlohmann::json& j);

}  // namespace gtforge
