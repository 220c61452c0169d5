#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "connecto/connectome.hpp"
#include "oracles.hpp"

using namespace connecto;

TEST_CASE("triu_index endpoints") {
  CHECK(triu_index(0, 1, 35) == 0);
  CHECK(triu_index(33, 34, 35) == 594);
  CHECK(feature_count(35) == 595);
}

TEST_CASE("triu_index is a bijection for n in 2..64") {
  for (Index n = 2; n <= 64; ++n) {
    std::set<Index> seen;
    Index expected = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const Index k = triu_index(i, j, n);
        CHECK(k == expected);
        seen.insert(k);
        ++expected;
      }
    }
    REQUIRE(static_cast<Index>(seen.size()) == feature_count(n));
    CHECK(*seen.rbegin() == feature_count(n) - 1);
  }
}

TEST_CASE("triu_index rejects out-of-domain pairs") {
  CHECK_THROWS_AS(triu_index(1, 1, 5), IndexDomainError);
  CHECK_THROWS_AS(triu_index(2, 1, 5), IndexDomainError);
  CHECK_THROWS_AS(triu_index(0, 5, 5), IndexDomainError);
}

TEST_CASE("vectorize layout and round trip") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = m(1, 0) = 0.1;
  m(0, 2) = m(2, 0) = 0.2;
  m(1, 2) = m(2, 1) = 0.3;
  const Vector v = vectorize(ConnectivityMatrix(m));
  REQUIRE(v.size() == 3);
  CHECK(v(0) == 0.1);
  CHECK(v(1) == 0.2);
  CHECK(v(2) == 0.3);
  CHECK(vectorize(ConnectivityMatrix::zeros(35)) == Vector::Zero(595));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix a = oracle::random_matrix(35, 35, seed, 0.0, 1.0);
    Matrix s = (a + a.transpose()) / 2.0;
    s.diagonal().setZero();
    const ConnectivityMatrix c(s);
    CHECK(devectorize(vectorize(c), 35) == c);
  }
}

TEST_CASE("devectorize shape and invariant errors") {
  CHECK_THROWS_AS(devectorize(Vector::Zero(10), 35), ShapeError);
  Matrix bad = Matrix::Zero(3, 3);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(ConnectivityMatrix{bad}, DataError);
  Matrix diag = Matrix::Zero(3, 3);
  diag(1, 1) = 0.5;
  CHECK_THROWS_AS(ConnectivityMatrix{diag}, DataError);
  CHECK_THROWS_AS(devectorize(-Vector::Ones(3), 3), DataError);
  CHECK(devectorize_unchecked(-Vector::Ones(3), 3)(0, 1) == -1.0);
}

TEST_CASE("csv parsing") {
  const auto t = parse_csv("ID,f0,f1,f2\nA,0.1,0.2,0.3\r\nB,1,2,3\n", 3);
  CHECK(t.n_subjects() == 2);
  CHECK(t.subject_ids()[1] == "B");
  CHECK(t.rows()(1, 2) == 3.0);
  CHECK_THROWS_AS(parse_csv("ID,f0\nA,NaN\n"), IngestionError);
  CHECK_THROWS_AS(parse_csv("ID,f0\nA,abc\n"), IngestionError);
  CHECK_THROWS_AS(parse_csv("ID,f0\nA,1\nA,2\n"), IngestionError);
  CHECK_THROWS_AS(parse_csv("ID,f0,f1\nA,1\n"), IngestionError);
  CHECK_THROWS_AS(parse_csv("ID,f0\nA,1\n", 3), IngestionError);
  CHECK_THROWS_AS(parse_csv("ID,f1\nA,1\n"), IngestionError);
  try {
    parse_csv("ID,f0,f1\nA,1,2\nB,1,x\n", -1, "t.csv");
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("t.csv:3") != std::string::npos);
    CHECK(std::string(e.what()).find("f1") != std::string::npos);
  }
}

TEST_CASE("csv round trip is exact") {
  const auto ds = generate_synthetic({.n_subjects = 7, .n_rois = 6, .seed = 11});
  const std::string text = format_csv(ds.t0());
  const auto back = parse_csv(text);
  CHECK(back == ds.t0());
  CHECK(format_csv(back) == text);
  const auto path = std::filesystem::temp_directory_path() / "connecto_rt.csv";
  write_csv(path, ds.t0());
  CHECK(load_csv(path, 15) == ds.t0());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IngestionError);
}

TEST_CASE("synthetic generator") {
  const auto same = generate_synthetic({.n_subjects = 5, .drift = 0.0, .noise_sigma = 0.0, .seed = 1});
  CHECK(same.t0().rows() == same.targets().rows());
  const auto drift = generate_synthetic({.n_subjects = 5, .drift = 0.1, .noise_sigma = 0.0, .seed = 1});
  CHECK(drift.targets().rows().isApprox(0.9 * drift.t0().rows(), 1e-15));
  const auto a = generate_synthetic({.n_subjects = 5, .seed = 3});
  const auto b = generate_synthetic({.n_subjects = 5, .seed = 3});
  const auto c = generate_synthetic({.n_subjects = 5, .seed = 4});
  CHECK(a.t0() == b.t0());
  CHECK(a.targets() == b.targets());
  CHECK(a.t0().rows() != c.t0().rows());
  CHECK(a.t0().n_features() == 595);
  CHECK(a.t0().rows().minCoeff() >= 0.0);
  CHECK(a.targets().rows().maxCoeff() <= 1.0);
  for (Index s = 0; s < 5; ++s) {
    CHECK_NOTHROW(devectorize(a.t0().rows().row(s).transpose(), 35));
    CHECK_NOTHROW(devectorize(a.targets().rows().row(s).transpose(), 35));
  }
  CHECK_THROWS_AS(generate_synthetic({.n_subjects = 0}), ParameterError);
}

TEST_CASE("longitudinal dataset invariants") {
  const FeatureTable t0({"a", "b"}, Matrix::Zero(2, 3));
  CHECK_THROWS_AS(LongitudinalDataset(t0, FeatureTable({"b", "a"}, Matrix::Zero(2, 3))), DataError);
  CHECK_THROWS_AS(LongitudinalDataset(t0, FeatureTable({"a", "b"}, Matrix::Zero(2, 4))), ShapeError);
  const LongitudinalDataset unlabeled(t0);
  CHECK_FALSE(unlabeled.labeled());
  CHECK_THROWS_AS(unlabeled.targets(), DataError);
  CHECK_THROWS_AS(FeatureTable({"a", "a"}, Matrix::Zero(2, 1)), DataError);
}
