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

#include "embalign/procrustes.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

namespace embalign {

AlignmentMap AlignmentMap::identity(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return {Eigen::MatrixXd::Identity(n, n), true};
}

EmbeddingSpace AlignmentMap::map(const EmbeddingSpace& space) const {
  if (space.dim() != dim()) {
    throw std::invalid_argument("alignment map of dim " + std::to_string(dim()) +
                                " applied to space of dim " + std::to_string(space.dim()));
  }
  return EmbeddingSpace(space.vocab(), map_rows(space.vectors()));
}

double AlignmentMap::orthogonality_error() const {
  const auto d = matrix.rows();
  return (matrix.transpose() * matrix - Eigen::MatrixXd::Identity(d, d)).norm();
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size() && i < 20; ++i) {
    if (i) s += ", ";
    s += tokens[i];
  }
  if (tokens.size() > 20) s += ", ... (" + std::to_string(tokens.size()) + " total)";
  return s;
}

}  // namespace

MissingTokensError::MissingTokensError(const std::string& side, std::vector<std::string> tokens)
    : std::invalid_argument(side + " vocabulary lacks " + std::to_string(tokens.size()) +
                            " dictionary token(s): " + join_tokens(tokens)),
      tokens_(std::move(tokens)) {}

SeedDictionary build_seed_dictionary(const EmbeddingSpace& a, const EmbeddingSpace& b,
                                     std::size_t n,
                                     const std::unordered_set<std::string>& exclude) {
  if (n == 0) throw std::invalid_argument("seed dictionary size must be positive");
  SeedDictionary dict;
  for (const auto& w : shared_vocabulary(a, b)) {
    if (dict.size() == n) break;
    if (exclude.count(w)) continue;
    dict.pairs.emplace_back(w, w);
  }
  if (dict.size() < n) {
    throw std::invalid_argument("only " + std::to_string(dict.size()) +
                                " usable shared words; " + std::to_string(n) + " requested");
  }
  return dict;
}

AlignmentMap procrustes_solve(const RowMatrix& x, const RowMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("procrustes: source and target row blocks differ in shape");
  }
  if (x.rows() == 0) throw std::invalid_argument("procrustes: empty dictionary");
  const Eigen::MatrixXd m = y.transpose() * x;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().size() == 0 || svd.singularValues()(0) < 1e-12) {
    throw std::invalid_argument("procrustes: degenerate cross-covariance (all singular values < 1e-12)");
  }
  AlignmentMap w{svd.matrixU() * svd.matrixV().transpose(), true};
  const double err = w.orthogonality_error();
  if (err > 1e-8 * static_cast<double>(w.dim())) {
    throw std::runtime_error("procrustes: solution not orthogonal (error " + std::to_string(err) + ")");
  }
  return w;
}

AlignmentMap procrustes_solve(const EmbeddingSpace& source, const EmbeddingSpace& target,
                              const SeedDictionary& dict, const ProcrustesOptions& options) {
  if (dict.empty()) throw std::invalid_argument("procrustes: empty seed dictionary");
  if (source.dim() != target.dim()) {
    throw std::invalid_argument("procrustes: dimension mismatch " + std::to_string(source.dim()) +
                                " vs " + std::to_string(target.dim()));
  }
  dict.validate();
  std::vector<std::string> missing_src, missing_tgt;
  std::vector<std::size_t> rows_src, rows_tgt;
  for (const auto& [s, t] : dict.pairs) {
    auto i = source.vocab().find(s);
    auto j = target.vocab().find(t);
    if (!i) missing_src.push_back(s);
    if (!j) missing_tgt.push_back(t);
    if (i && j) {
      rows_src.push_back(*i);
      rows_tgt.push_back(*j);
    }
  }
  if (!missing_src.empty()) throw MissingTokensError("source", std::move(missing_src));
  if (!missing_tgt.empty()) throw MissingTokensError("target", std::move(missing_tgt));

  const auto n = static_cast<Eigen::Index>(rows_src.size());
  RowMatrix x(n, static_cast<Eigen::Index>(source.dim()));
  RowMatrix y(n, static_cast<Eigen::Index>(target.dim()));
  for (Eigen::Index r = 0; r < n; ++r) {
    x.row(r) = source.row(rows_src[static_cast<std::size_t>(r)]);
    y.row(r) = target.row(rows_tgt[static_cast<std::size_t>(r)]);
  }
  if (options.normalize_rows) {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (const double nx = x.row(r).norm(); nx > 0) x.row(r) /= nx;
      if (const double ny = y.row(r).norm(); ny > 0) y.row(r) /= ny;
    }
  }
  return procrustes_solve(x, y);
}

void save_matrix(const AlignmentMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[64];
  for (Eigen::Index r = 0; r < map.matrix.rows(); ++r) {
    std::string line;
    for (Eigen::Index c = 0; c < map.matrix.cols(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof(buf), map.matrix(r, c),
                               std::chars_format::general, 17);
      if (c) line.push_back(' ');
      line.append(buf, res.ptr);
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

AlignmentMap load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    std::string field;
    while (ls >> field) {
      double v = 0;
      const char* first = field.data();
      if (!field.empty() && field[0] == '+') ++first;
      auto [p, ec] = std::from_chars(first, field.data() + field.size(), v);
      if (ec != std::errc() || p != field.data() + field.size() || !std::isfinite(v)) {
        throw std::runtime_error("bad matrix value '" + field + "' on line " +
                                 std::to_string(rows.size() + 1) + " of " + path.string());
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto d = static_cast<Eigen::Index>(rows.size());
  if (d == 0) throw std::runtime_error("empty matrix file " + path.string());
  AlignmentMap m;
  m.matrix.resize(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != d) {
      throw std::runtime_error("matrix file " + path.string() + " is not square (line " +
                               std::to_string(r + 1) + ")");
    }
    for (Eigen::Index c = 0; c < d; ++c) m.matrix(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  m.orthogonal = m.orthogonality_error() <= 1e-8 * static_cast<double>(d);
  return m;
}

SeedDictionary load_seed_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dictionary " + path.string());
  SeedDictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string s, t, extra;
    if (!(ls >> s)) continue;
    if (!(ls >> t) || (ls >> extra)) {
      throw std::runtime_error("dictionary line " + std::to_string(lineno) +
                               " must hold exactly two tokens");
    }
    dict.pairs.emplace_back(std::move(s), std::move(t));
  }
  dict.validate();
  return dict;
}

}  // namespace embalign
