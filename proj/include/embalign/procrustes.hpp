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

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "embalign/embedding_store.hpp"

namespace embalign {

// A d x d linear map W acting on column vectors, x -> W x. A table of source
// rows X maps to X W^T.
struct AlignmentMap {
  Eigen::MatrixXd matrix;
  bool orthogonal = false;

  static AlignmentMap identity(std::size_t d);

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
  RowMatrix map_rows(const RowMatrix& rows) const { return rows * matrix.transpose(); }
  EmbeddingSpace map(const EmbeddingSpace& space) const;

  // ||W^T W - I||_F
  double orthogonality_error() const;
};

// Tokens absent from a vocabulary, all of them listed.
class MissingTokensError : public std::invalid_argument {
 public:
  MissingTokensError(const std::string& side, std::vector<std::string> tokens);
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
};

// The n most frequent shared words, each paired with itself. Words in
// `exclude` are skipped (used to keep evaluation words out of supervision).
SeedDictionary build_seed_dictionary(const EmbeddingSpace& a, const EmbeddingSpace& b,
                                     std::size_t n,
                                     const std::unordered_set<std::string>& exclude = {});

struct ProcrustesOptions {
  bool normalize_rows = false;  // unit-normalize dictionary rows before solving
};

// Orthogonal W maximizing tr(W^T Y^T X) for dictionary rows X (source) and Y
// (target): with Y^T X = U S V^T, W = U V^T. Reflections are allowed.
AlignmentMap procrustes_solve(const EmbeddingSpace& source, const EmbeddingSpace& target,
                              const SeedDictionary& dict, const ProcrustesOptions& options = {});

// Same solve on already-gathered rows (row i of x pairs with row i of y).
AlignmentMap procrustes_solve(const RowMatrix& x, const RowMatrix& y);

// Plain text: d lines of d space-separated values, row-major.
void save_matrix(const AlignmentMap& map, const std::filesystem::path& path);
AlignmentMap load_matrix(const std::filesystem::path& path);

// Two whitespace-separated tokens per line; blank lines ignored. Later lines
// repeating a source token are an error.
SeedDictionary load_seed_dictionary(const std::filesystem::path& path);

}  // namespace embalign
