#include "connecto/common.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>

namespace connecto {

namespace {

struct WarningSink {
  std::mutex mutex;
  int captures = 0;
  std::vector<std::string> captured;
  std::atomic<bool> to_stderr{true};
};

WarningSink& sink() {
  static WarningSink s;
  return s;
}

}  // namespace

void warn(std::string_view message) {
  auto& s = sink();
  std::lock_guard lock(s.mutex);
  if (s.captures > 0) {
    s.captured.emplace_back(message);
  }
  if (s.to_stderr.load()) {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningCapture::WarningCapture() {
  auto& s = sink();
  std::lock_guard lock(s.mutex);
  if (s.captures++ == 0) {
    s.captured.clear();
  }
}

WarningCapture::~WarningCapture() {
  auto& s = sink();
  std::lock_guard lock(s.mutex);
  --s.captures;
}

std::vector<std::string> WarningCapture::messages() const {
  auto& s = sink();
  std::lock_guard lock(s.mutex);
  return s.captured;
}

bool WarningCapture::contains(std::string_view needle) const {
  const auto all = messages();
  return std::any_of(all.begin(), all.end(), [&](const std::string& m) {
    return m.find(needle) != std::string::npos;
  });
}

void set_warnings_to_stderr(bool enabled) { sink().to_stderr.store(enabled); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    out.row(i) = m.row(rows[static_cast<std::size_t>(i)]);
  }
  return out;
}

Vector take_rows(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (Index i = 0; i < out.size(); ++i) {
    out(i) = v(rows[static_cast<std::size_t>(i)]);
  }
  return out;
}

Matrix take_cols(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < out.cols(); ++j) {
    out.col(j) = m.col(cols[static_cast<std::size_t>(j)]);
  }
  return out;
}

std::vector<Index> true_indices(const std::vector<bool>& mask) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

}  // namespace connecto
