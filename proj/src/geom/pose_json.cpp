#include "gtforge/geom/pose_json.hpp"

#include <cmath>

#include "gtforge/error.hpp"

namespace gtforge {

nlohmann::json pose_to_json(const Pose& pose) {
  const auto& t = pose.translation();
  const auto& q = pose.rotation();
  return {{"translation", {t.x(), t.y(), t.z()}}, {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}}};
}

Pose pose_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "pose must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "translation" && key != "rotation_wxyz") {
        throw Error(ErrorCode::Parse, "unknown pose key '" + key + "'");
      }
    }
    const auto t = j.at("translation").get<std::vector<double>>();
    const auto q = j.at("rotation_wxyz").get<std::vector<double>>();
    if (t.size() != 3 || q.size() != 4) {
      throw Error(ErrorCode::Parse, "pose needs 3 translation and 4 quaternion values");
    }
    const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    if (!(quat.norm() > 1e-9) || !std::isfinite(quat.norm())) {
      throw Error(ErrorCode::Parse, "pose quaternion must be non-zero and finite");
    }
    return Pose(quat, Eigen::Vector3d(t[0], t[1], t[2]));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed pose: ") + e.what());
  }
}

}  // namespace gtforge
