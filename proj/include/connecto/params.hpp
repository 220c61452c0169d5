#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "connecto/common.hpp"

namespace connecto {

/// Ordered string key/value parameters for a stage or learner, with typed,
/// validating accessors. Insertion order is preserved so configs round-trip.
class Params {
 public:
  Params() = default;
  Params(std::initializer_list<std::pair<std::string, std::string>> items);

  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value);

  bool has(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }
  bool empty() const { return items_.empty(); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  Index get_int(const std::string& key, Index fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ParameterError naming the first key not in `known`.
  void require_known(std::initializer_list<std::string_view> known, const std::string& where) const;

  bool operator==(const Params& other) const { return items_ == other.items_; }

 private:
  const std::string* find(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace connecto
