#pragma once

#include <cstdint>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "glassmem/error.hpp"

namespace glassmem::cli {

using nlohmann::json;

/// Typed access to a JSON object that remembers which keys were read, so leftovers can be
/// reported as unknown.
class Params {
 public:
  Params(json object, std::string where) : j_(std::move(object)), where_(std::move(where)) {
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ValidationError(where_ + ": missing '" + key + "'");
    return get<T>(key, T{});
  }

  Params child(const std::string& key) {
    used_.insert(key);
    return Params(j_.contains(key) ? j_.at(key) : json::object(), where_ + "." + key);
  }

  json raw(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key) : json();
  }

  /// Throws if any key was never read.
  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
  }

 private:
  json j_;
  std::string where_;
  std::set<std::string> used_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace glassmem::cli
