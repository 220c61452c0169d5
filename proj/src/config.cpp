#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "connecto/pipeline.hpp"

namespace connecto {

Params::Params(std::initializer_list<std::pair<std::string, std::string>> items) {
  for (const auto& [k, v] : items) set(k, v);
}

void Params::set(const std::string& key, std::string value) {
  for (auto& item : items_) {
    if (item.first == key) {
      item.second = std::move(value);
      return;
    }
  }
  items_.emplace_back(key, std::move(value));
}

void Params::set(const std::string& key, double value) { set(key, format_double(value)); }
void Params::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Params::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

const std::string* Params::find(const std::string& key) const {
  for (const auto& item : items_) {
    if (item.first == key) return &item.second;
  }
  return nullptr;
}

bool Params::has(const std::string& key) const { return find(key) != nullptr; }

std::string Params::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double Params::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto* end = v->data() + v->size();
  const auto res = std::from_chars(v->data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ParameterError("parameter '" + key + "': '" + *v + "' is not a number");
  return out;
}

Index Params::get_int(const std::string& key, Index fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  long long out = 0;
  const auto* end = v->data() + v->size();
  const auto res = std::from_chars(v->data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ParameterError("parameter '" + key + "': '" + *v + "' is not an integer");
  return static_cast<Index>(out);
}

bool Params::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ParameterError("parameter '" + key + "': '" + *v + "' is not a boolean");
}

void Params::require_known(std::initializer_list<std::string_view> known, const std::string& where) const {
  for (const auto& [k, v] : items_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ParameterError(where + ": unknown parameter '" + k + "'");
    }
  }
}

}  // namespace connecto

namespace connecto::pipeline {

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  return name == o.name && preprocess == o.preprocess && dimred == o.dimred && learner == o.learner &&
         ffl == o.ffl && ffl_inputs == o.ffl_inputs && target_components == o.target_components &&
         sigmoid_back == o.sigmoid_back && clip01 == o.clip01 && seed == o.seed;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_dots(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Resolves "learner(.members.<i>|.base)*" to a spec, creating it on demand.
LearnerSpec& learner_at(LearnerSpec& root, const std::vector<std::string>& parts, const std::string& where) {
  LearnerSpec* cur = &root;
  std::size_t i = 1;
  while (i < parts.size()) {
    if (parts[i] == "base") {
      if (cur->base.empty()) cur->base.emplace_back();
      cur = &cur->base.front();
      i += 1;
    } else if (parts[i] == "members" && i + 1 < parts.size()) {
      std::size_t idx = 0;
      const auto& p = parts[i + 1];
      const auto res = std::from_chars(p.data(), p.data() + p.size(), idx);
      if (res.ec != std::errc() || res.ptr != p.data() + p.size()) throw ParameterError(where + ": bad member index '" + p + "'");
      if (idx > cur->members.size()) throw ParameterError(where + ": member " + p + " declared out of order");
      if (idx == cur->members.size()) cur->members.emplace_back();
      cur = &cur->members[idx];
      i += 2;
    } else {
      throw ParameterError(where + ": malformed learner section");
    }
  }
  return *cur;
}

void set_pipeline_key(PipelineConfig& c, const std::string& key, const std::string& value, const std::string& where) {
  Params p;
  p.set(key, value);
  if (key == "name") {
    c.name = value;
  } else if (key == "seed") {
    std::uint64_t s = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), s);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) throw ParameterError(where + ": bad seed");
    c.seed = s;
  } else if (key == "ffl") {
    c.ffl = p.get_bool(key, false);
  } else if (key == "ffl_inputs") {
    if (value == "all") {
      c.ffl_inputs = FflInputs::all;
    } else if (value == "matched") {
      c.ffl_inputs = FflInputs::matched;
    } else {
      throw ParameterError(where + ": ffl_inputs must be all or matched");
    }
  } else if (key == "target_components") {
    c.target_components = p.get_int(key, 0);
  } else if (key == "sigmoid_back") {
    c.sigmoid_back = p.get_bool(key, false);
  } else if (key == "clip01") {
    c.clip01 = p.get_bool(key, false);
  } else {
    throw ParameterError(where + ": unknown pipeline key '" + key + "'");
  }
}

void emit_params(std::ostringstream& os, const Params& p) {
  for (const auto& [k, v] : p.items()) os << k << " = " << v << "\n";
}

void emit_learner(std::ostringstream& os, const LearnerSpec& l, const std::string& path) {
  os << "\n[" << path << "]\n";
  os << "type = " << l.type << "\n";
  emit_params(os, l.params);
  for (std::size_t i = 0; i < l.members.size(); ++i) emit_learner(os, l.members[i], path + ".members." + std::to_string(i));
  for (const auto& b : l.base) emit_learner(os, b, path + ".base");
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& source) {
  PipelineConfig c;
  enum class Kind { none, pipeline, preprocess, dimred, learner } kind = Kind::none;
  Params* target = nullptr;
  LearnerSpec* learner = nullptr;
  bool saw_learner = false;
  std::istringstream in(text);
  std::string raw;
  Index line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParameterError(where + ": unterminated section header");
      const std::string sec = trim(line.substr(1, line.size() - 2));
      const auto parts = split_dots(sec);
      target = nullptr;
      learner = nullptr;
      if (sec == "pipeline") {
        kind = Kind::pipeline;
      } else if (parts[0] == "preprocess" && parts.size() == 2 && !parts[1].empty()) {
        kind = Kind::preprocess;
        c.preprocess.push_back({parts[1], {}});
        target = &c.preprocess.back().params;
      } else if (parts[0] == "dimred" && parts.size() == 2 && !parts[1].empty()) {
        kind = Kind::dimred;
        c.dimred.push_back({parts[1], {}});
        target = &c.dimred.back().params;
      } else if (parts[0] == "learner") {
        kind = Kind::learner;
        saw_learner = true;
        learner = &learner_at(c.learner, parts, where);
        target = &learner->params;
      } else {
        throw ParameterError(where + ": unknown section [" + sec + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParameterError(where + ": empty key");
    switch (kind) {
      case Kind::none:
        throw ParameterError(where + ": key outside any section");
      case Kind::pipeline:
        set_pipeline_key(c, key, value, where);
        break;
      case Kind::learner:
        if (key == "type") {
          learner->type = value;
        } else {
          target->set(key, value);
        }
        break;
      default:
        target->set(key, value);
    }
  }
  if (!saw_learner) throw ParameterError(source + ": config has no [learner] section");
  return c;
}

std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "[pipeline]\n";
  os << "name = " << c.name << "\n";
  os << "seed = " << c.seed << "\n";
  os << "ffl = " << (c.ffl ? "true" : "false") << "\n";
  os << "ffl_inputs = " << (c.ffl_inputs == FflInputs::all ? "all" : "matched") << "\n";
  os << "target_components = " << c.target_components << "\n";
  os << "sigmoid_back = " << (c.sigmoid_back ? "true" : "false") << "\n";
  os << "clip01 = " << (c.clip01 ? "true" : "false") << "\n";
  for (const auto& s : c.preprocess) {
    os << "\n[preprocess." << s.name << "]\n";
    emit_params(os, s.params);
  }
  for (const auto& s : c.dimred) {
    os << "\n[dimred." << s.name << "]\n";
    emit_params(os, s.params);
  }
  emit_learner(os, c.learner, "learner");
  return os.str();
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace connecto::pipeline
