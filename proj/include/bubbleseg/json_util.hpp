#pragma once

#include <set>
#include <string>

#include "json.hpp"

#include "bubbleseg/core.hpp"

namespace bubbleseg {

/// Reads optional fields from a JSON object and rejects any key that was
/// never asked for. Type errors surface as ConfigInvalid.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigInvalid, context_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, context_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* child(const std::string& key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return context_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.count(it.key())) throw Error(ErrorCode::ConfigInvalid, context_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> known_;
};

}  // namespace bubbleseg
