#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace connecto {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy. Every failure the library reports is one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexDomainError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct IngestionError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct InsufficientDataError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct LookupError : Error {
  using Error::Error;
};

/// Stage-tagged failure raised by the pipeline when a stage throws.
struct StageError : Error {
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_name(std::move(stage)) {}
  std::string stage_name;
};

// Warnings are routed through a process-wide sink. Tests install a capture
// to assert that a warning was raised; the CLI prints them to stderr.
void warn(std::string_view message);

class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages() const;
  bool contains(std::string_view needle) const;
};

/// Silences warnings printed to stderr (captures still see them).
void set_warnings_to_stderr(bool enabled);

// Seeded random streams. A child stream is fully determined by the parent
// seed and the stream index, so members fitted in any order (or on any
// thread) draw the same numbers.
using Rng = std::mt19937_64;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Selects rows of a matrix by index.
Matrix take_rows(const Matrix& m, const std::vector<Index>& rows);
Vector take_rows(const Vector& v, const std::vector<Index>& rows);
Matrix take_cols(const Matrix& m, const std::vector<Index>& cols);

// Indices where mask is true.
std::vector<Index> true_indices(const std::vector<bool>& mask);

}  // namespace connecto
