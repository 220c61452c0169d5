#include "connecto/connectome.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace connecto {

Index rois_for_feature_count(Index d) {
  const auto n = static_cast<Index>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(d))) / 2.0));
  if (d <= 0 || feature_count(n) != d) {
    throw ShapeError("feature count " + std::to_string(d) + " is not n(n-1)/2 for any n");
  }
  return n;
}

Index triu_index(Index i, Index j, Index n) {
  if (i < 0 || i >= j || j >= n) {
    throw IndexDomainError("triu_index requires 0 <= i < j < n, got i=" + std::to_string(i) +
                           " j=" + std::to_string(j) + " n=" + std::to_string(n));
  }
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

ConnectivityMatrix::ConnectivityMatrix(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() < 1) {
    throw ShapeError("connectivity matrix must be square and nonempty");
  }
  const Index n = weights_.rows();
  for (Index i = 0; i < n; ++i) {
    if (weights_(i, i) != 0.0) throw DataError("connectivity matrix diagonal must be zero");
    for (Index j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw DataError("connectivity weights must be finite and nonnegative");
      }
      if (w != weights_(j, i)) throw DataError("connectivity matrix must be symmetric");
    }
  }
}

ConnectivityMatrix ConnectivityMatrix::zeros(Index n_rois) {
  return ConnectivityMatrix(Matrix::Zero(n_rois, n_rois));
}

Vector vectorize(const ConnectivityMatrix& m) {
  const Index n = m.n_rois();
  Vector v(feature_count(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) v(k++) = m(i, j);
  }
  return v;
}

Matrix devectorize_unchecked(const Vector& v, Index n_rois) {
  if (v.size() != feature_count(n_rois)) {
    throw ShapeError("vector of length " + std::to_string(v.size()) + " does not match " +
                     std::to_string(n_rois) + " ROIs");
  }
  Matrix m = Matrix::Zero(n_rois, n_rois);
  Index k = 0;
  for (Index i = 0; i < n_rois; ++i) {
    for (Index j = i + 1; j < n_rois; ++j) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return m;
}

ConnectivityMatrix devectorize(const Vector& v, Index n_rois) {
  return ConnectivityMatrix(devectorize_unchecked(v, n_rois));
}

FeatureTable::FeatureTable(std::vector<std::string> subject_ids, Matrix rows)
    : ids_(std::move(subject_ids)), rows_(std::move(rows)) {
  if (static_cast<Index>(ids_.size()) != rows_.rows()) {
    throw ShapeError("feature table has " + std::to_string(ids_.size()) + " ids but " +
                     std::to_string(rows_.rows()) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw DataError("duplicate subject id '" + id + "'");
  }
}

FeatureTable FeatureTable::select_rows(const std::vector<Index>& rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (Index r : rows) ids.push_back(ids_[static_cast<std::size_t>(r)]);
  return FeatureTable(std::move(ids), take_rows(rows_, rows));
}

LongitudinalDataset::LongitudinalDataset(FeatureTable t0, std::optional<FeatureTable> t1)
    : t0_(std::move(t0)), t1_(std::move(t1)) {
  if (t1_) {
    if (t1_->subject_ids() != t0_.subject_ids()) {
      throw DataError("t0 and t1 tables must list the same subjects in the same order");
    }
    if (t1_->n_features() != t0_.n_features()) {
      throw ShapeError("t0 and t1 tables must have the same feature count");
    }
  }
}

const FeatureTable& LongitudinalDataset::targets() const {
  if (!t1_) throw DataError("dataset has no follow-up (t1) table");
  return *t1_;
}

LongitudinalDataset LongitudinalDataset::select_rows(const std::vector<Index>& rows) const {
  std::optional<FeatureTable> t1;
  if (t1_) t1 = t1_->select_rows(rows);
  return LongitudinalDataset(t0_.select_rows(rows), std::move(t1));
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

FeatureTable parse_csv(const std::string& text, Index expect_d, const std::string& source_name) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    if (rest.size() >= 3 && rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);
    while (!rest.empty()) {
      auto nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  auto fail = [&](std::size_t line_no, const std::string& msg) -> IngestionError {
    return IngestionError(source_name + ":" + std::to_string(line_no) + ": " + msg);
  };
  if (lines.empty()) throw fail(1, "missing header row");

  const auto header = split_fields(lines[0]);
  if (header.empty() || trim(header[0]) != "ID") throw fail(1, "first header column must be 'ID'");
  const Index d = static_cast<Index>(header.size()) - 1;
  for (Index k = 0; k < d; ++k) {
    const std::string expected = "f" + std::to_string(k);
    if (trim(header[static_cast<std::size_t>(k + 1)]) != expected) {
      throw fail(1, "column " + std::to_string(k + 1) + " must be named '" + expected + "'");
    }
  }
  if (expect_d >= 0 && d != expect_d) {
    throw fail(1, "expected " + std::to_string(expect_d) + " feature columns, found " +
                      std::to_string(d));
  }

  const std::size_t n = lines.size() - 1;
  Matrix rows(static_cast<Index>(n), d);
  std::vector<std::string> ids;
  ids.reserve(n);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split_fields(lines[r + 1]);
    if (static_cast<Index>(fields.size()) != d + 1) {
      throw fail(line_no, "expected " + std::to_string(d + 1) + " cells, found " +
                              std::to_string(fields.size()));
    }
    std::string id(trim(fields[0]));
    if (id.empty()) throw fail(line_no, "empty subject ID");
    if (!seen.insert(id).second) throw fail(line_no, "duplicate subject ID '" + id + "'");
    ids.push_back(std::move(id));
    for (Index k = 0; k < d; ++k) {
      const auto cell = trim(fields[static_cast<std::size_t>(k + 1)]);
      double value = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (first != last && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw fail(line_no, "column f" + std::to_string(k) + ": non-numeric or non-finite cell '" +
                                std::string(cell) + "'");
      }
      rows(static_cast<Index>(r), k) = value;
    }
  }
  return FeatureTable(std::move(ids), std::move(rows));
}

FeatureTable load_csv(const std::filesystem::path& path, Index expect_d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), expect_d, path.string());
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("failed to format double");
  return std::string(buf, ptr);
}

std::string format_csv(const FeatureTable& table) {
  std::string out = "ID";
  for (Index k = 0; k < table.n_features(); ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (Index r = 0; r < table.n_subjects(); ++r) {
    out += table.subject_ids()[static_cast<std::size_t>(r)];
    for (Index k = 0; k < table.n_features(); ++k) {
      out += ',';
      out += format_double(table.rows()(r, k));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  out << format_csv(table);
}

LongitudinalDataset generate_synthetic(const SyntheticParams& p) {
  if (p.n_subjects < 1) throw ParameterError("n_subjects must be >= 1");
  if (p.n_rois < 2) throw ParameterError("n_rois must be >= 2");
  if (!(p.drift >= 0.0 && p.drift <= 1.0)) throw ParameterError("drift must lie in [0,1]");
  if (!(p.noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");

  const Index d = feature_count(p.n_rois);
  Matrix t0(p.n_subjects, d);
  Matrix t1(p.n_subjects, d);
  Rng base_rng = make_rng(p.seed, 0);
  Rng noise_rng = make_rng(p.seed, 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index s = 0; s < p.n_subjects; ++s) {
    for (Index k = 0; k < d; ++k) {
      t0(s, k) = uniform(base_rng);
    }
    for (Index k = 0; k < d; ++k) {
      const double eps = p.noise_sigma > 0.0 ? p.noise_sigma * normal(noise_rng) : 0.0;
      t1(s, k) = std::clamp(t0(s, k) * (1.0 - p.drift) + eps, 0.0, 1.0);
    }
  }
  const int width = std::max<int>(4, static_cast<int>(std::to_string(p.n_subjects).size()));
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(p.n_subjects));
  for (Index s = 0; s < p.n_subjects; ++s) {
    std::string num = std::to_string(s);
    ids.push_back(p.id_prefix + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(num.size(), width), '0') + num);
  }
  return LongitudinalDataset(FeatureTable(ids, std::move(t0)), FeatureTable(ids, std::move(t1)));
}

}  // namespace connecto
