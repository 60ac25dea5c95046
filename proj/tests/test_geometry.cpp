// Copyright 2026 The embalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sstream>

#include "embalign/geometry.hpp"
#include "oracles.hpp"

using namespace embalign;

namespace {

EmbeddingSpace space_of(std::vector<std::string> words, RowMatrix m) {
  return EmbeddingSpace(Vocabulary::from_words(std::move(words)), std::move(m));
}

EmbeddingSpace scaled(const EmbeddingSpace& s, double c) { return EmbeddingSpace(s.vocab(), s.vectors() * c); }

// Mean of <v_i, mu> computed with explicit loops.
double loop_average(const RowMatrix& v) {
  std::vector<double> mu(static_cast<std::size_t>(v.cols()), 0.0);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) mu[static_cast<std::size_t>(j)] += v(i, j) / static_cast<double>(v.rows());
  double total = 0;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) total += v(i, j) * mu[static_cast<std::size_t>(j)];
  return total / static_cast<double>(v.rows());
}

}  // namespace

TEST_CASE("two orthogonal unit rows") {
  RowMatrix m(2, 2);
  m << 1, 0, 0, 1;
  const auto r = geometry_report(space_of({"a", "b"}, m));
  CHECK(r.avg_inner_product_to_mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.mean_vector_norm == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(r.n_words == 2);
}

TEST_CASE("identity with the squared mean norm on random spaces") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = oracle::random_space(200 + seed * 37, 5 + seed, seed);
    // Give it a mean, as real embeddings have.
    RowMatrix shifted = s.vectors().rowwise() + Eigen::RowVectorXd::Constant(s.dim(), 0.3 * static_cast<double>(seed));
    s = EmbeddingSpace(s.vocab(), shifted);
    const auto r = geometry_report(s);
    CHECK(std::abs(r.avg_inner_product_to_mean - r.mean_vector_norm * r.mean_vector_norm) <=
          1e-10 * std::max(1.0, r.avg_inner_product_to_mean));
    CHECK(r.avg_inner_product_to_mean == doctest::Approx(loop_average(s.vectors())).epsilon(1e-12));
    const auto c = geometry_report(center(s));
    CHECK(std::abs(c.avg_inner_product_to_mean) <= 1e-10);
  }
}

TEST_CASE("deciles cover every rank once") {
  const auto s = oracle::random_space(103, 4, 2);
  const auto r = geometry_report(s);
  REQUIRE(r.per_band.size() == 10);
  CHECK(r.per_band.front().label == "d1");
  CHECK(r.per_band.front().first_rank == 0);
  CHECK(r.per_band.back().last_rank == 103);
  double weighted = 0;
  for (std::size_t b = 0; b < r.per_band.size(); ++b) {
    if (b) CHECK(r.per_band[b].first_rank == r.per_band[b - 1].last_rank);
    weighted += r.per_band[b].mean_inner_product * static_cast<double>(r.per_band[b].last_rank - r.per_band[b].first_rank);
  }
  CHECK(weighted / 103.0 == doctest::Approx(r.avg_inner_product_to_mean).epsilon(1e-10));

  const auto tiny = geometry_report(oracle::random_space(3, 2, 1));
  CHECK(tiny.per_band.size() == 3);
  CHECK_THROWS_AS(geometry_report(EmbeddingSpace()), std::invalid_argument);
}

TEST_CASE("audit of a normalized copy stays finite") {
  const auto s = oracle::random_space(300, 10, 4);
  const auto a = geometry_audit(s);
  CHECK(std::isfinite(a.normalized.avg_inner_product_to_mean));
  for (const auto& b : a.normalized.per_band) CHECK(std::isfinite(b.mean_inner_product));
  CHECK(a.raw.avg_inner_product_to_mean != a.normalized.avg_inner_product_to_mean);
}

TEST_CASE("centroid cosine") {
  const auto s = oracle::random_space(50, 6, 3);
  CHECK(centroid_cosine(s, s).value == doctest::Approx(1.0).epsilon(1e-14));

  RowMatrix x(1, 2), y(1, 2);
  x << 1, 0;
  y << 0, 1;
  const auto c = centroid_cosine(space_of({"a"}, x), space_of({"b"}, y));
  CHECK(c.value == 0.0);
  CHECK_FALSE(c.degenerate);

  const auto t = oracle::random_space(80, 6, 8);
  const double st = centroid_cosine(s, t).value;
  CHECK(centroid_cosine(t, s).value == doctest::Approx(st).epsilon(1e-14));
  CHECK(centroid_cosine(scaled(s, 7.5), scaled(t, 0.01)).value == doctest::Approx(st).epsilon(1e-12));

  const auto d = centroid_cosine(center(s), t);
  CHECK(d.degenerate);
  CHECK(d.value == 0.0);
  CHECK_THROWS_AS(centroid_cosine(s, oracle::random_space(5, 3, 1)), std::invalid_argument);
}

TEST_CASE("csv rows are statistic,value pairs") {
  const auto a = geometry_audit(oracle::random_space(40, 3, 5));
  std::ostringstream out;
  write_geometry_csv_rows(out, a, "a.");
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("a.", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 1);
  }
  CHECK(rows == 1 + 2 * (2 + 10));
  std::ostringstream text;
  write_geometry_text(text, a, "space");
  CHECK(text.str().find("unit-normalized") != std::string::npos);
}
