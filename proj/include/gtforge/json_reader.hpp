#pragma once

#include <algorithm>
#include <string>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "gtforge/error.hpp"

namespace gtforge {

/// Strict reader for one JSON object: every key must be claimed through
/// field() or object() before finish(), and values must have the right type.
/// Failures throw InvalidArgument naming the dotted path.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(fmt::format("'{}' must be an object", path_));
  }

  template <typename T>
  JsonReader& field(const char* key, T& out) {
    known_.emplace_back(key);
    if (!j_.contains(key)) return *this;
    const nlohmann::json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(fmt::format("'{}.{}' must be a boolean", path_, key));
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(fmt::format("'{}.{}' must be an integer", path_, key));
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(fmt::format("'{}.{}' must be a number", path_, key));
    } else {
      if (!v.is_string()) fail(fmt::format("'{}.{}' must be a string", path_, key));
    }
    out = v.get<T>();
    return *this;
  }

  template <typename F>
  JsonReader& object(const char* key, F&& f) {
    known_.emplace_back(key);
    if (j_.contains(key)) f(j_.at(key), path_ + "." + key);
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(known_.begin(), known_.end(), key) == known_.end()) {
        fail(fmt::format("unknown config key '{}.{}'", path_, key));
      }
    }
  }

 private:
  [[noreturn]] static void fail(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

}  // namespace gtforge
