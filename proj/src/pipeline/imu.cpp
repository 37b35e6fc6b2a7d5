#include "gtforge/pipeline/imu.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge {

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, fmt::format("cannot open IMU file {}", path.string()));
  std::vector<ImuSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (out.empty() && std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // header
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(line);
    ImuSample s;
    if (!(ss >> s.t >> s.accel.x() >> s.accel.y() >> s.accel.z() >> s.gyro.x() >> s.gyro.y() >>
          s.gyro.z())) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected 7 numeric columns", path.string(), line_no));
    }
    if (!std::isfinite(s.t) || !s.accel.allFinite() || !s.gyro.allFinite()) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: non-finite IMU value", path.string(), line_no));
    }
    if (!out.empty() && !(s.t > out.back().t)) {
      throw Error(ErrorCode::UnorderedTimestamps,
                  fmt::format("{}:{}: IMU timestamps must increase", path.string(), line_no));
    }
    out.push_back(s);
  }
  return out;
}

void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << "t,ax,ay,az,gx,gy,gz\n";
  for (const auto& s : samples) {
    out << fmt::format("{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", s.t, s.accel.x(),
                       s.accel.y(), s.accel.z(), s.gyro.x(), s.gyro.y(), s.gyro.z());
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace gtforge
