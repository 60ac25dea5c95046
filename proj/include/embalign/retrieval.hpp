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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "embalign/embedding_store.hpp"
#include "embalign/procrustes.hpp"

namespace embalign {

enum class Scorer { kCosine, kCsls };

Scorer parse_scorer(std::string_view name);
std::string_view to_string(Scorer s);

struct RetrievalOptions {
  Scorer scorer = Scorer::kCosine;
  int csls_k = 10;
  // Exhaustive per-pair scan instead of the blocked matrix-product path. Both
  // produce identical rankings.
  bool brute_force = false;
};

// Nearest neighbors of `queries` among `keys`. Rows must be unit length.
// Score of (q, t) is q.t (cosine) or 2 q.t - query_r(q) - key_r(t) (CSLS) when
// penalties are given. Ranked by score descending, ties to the lower key row.
struct Neighbors {
  std::vector<std::vector<Eigen::Index>> index;  // per query, best first
  std::vector<std::vector<double>> score;
};

Neighbors nearest_neighbors(const RowMatrix& queries, const RowMatrix& keys, std::size_t k,
                            const Eigen::VectorXd* query_penalty = nullptr,
                            const Eigen::VectorXd* key_penalty = nullptr, bool brute_force = false);

// Mean cosine of each query to its k nearest keys (the CSLS hubness penalty).
Eigen::VectorXd mean_neighbor_similarity(const RowMatrix& queries, const RowMatrix& keys,
                                         std::size_t k, bool brute_force = false);

RowMatrix normalized_rows(const RowMatrix& m);

// Precomputed state for retrieving target words for mapped source words.
// Source rows are mapped by omega then unit-normalized; target rows are
// unit-normalized. With CSLS, both penalty vectors are computed against the
// full opposite space.
class RetrievalIndex {
 public:
  RetrievalIndex(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const AlignmentMap& omega,
                 const RetrievalOptions& options = {});

  // Top-k target rows for one source row.
  std::vector<Eigen::Index> top_k(std::size_t source_row, std::size_t k) const;
  // Top-k target rows for many source rows at once.
  std::vector<std::vector<Eigen::Index>> top_k(const std::vector<std::size_t>& source_rows,
                                               std::size_t k) const;

  const RowMatrix& mapped_source() const { return src_; }
  const RowMatrix& target() const { return tgt_; }

 private:
  RetrievalOptions options_;
  RowMatrix src_;
  RowMatrix tgt_;
  Eigen::VectorXd src_penalty_;  // r_T of mapped source rows
  Eigen::VectorXd tgt_penalty_;  // r_S of target rows
};

// Top-k target tokens for query. Throws std::invalid_argument for an unknown
// query token or k == 0.
std::vector<std::string> retrieve(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                  const AlignmentMap& omega, std::string_view query, std::size_t k,
                                  Scorer scorer);

struct EvalLexicon {
  struct Entry {
    std::string source;
    std::vector<std::string> targets;
  };
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
  // Throws if empty or a source repeats.
  void validate() const;
};

// "source target" per line; repeated sources accumulate acceptable targets.
EvalLexicon load_lexicon(const std::filesystem::path& path);
EvalLexicon identity_lexicon(const std::vector<std::string>& words);
void save_lexicon(const EvalLexicon& lexicon, const std::filesystem::path& path);

struct PrecisionResult {
  std::size_t k = 1;
  double precision = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;  // source absent, or no acceptable target in vocabulary
};

// Fraction of lexicon entries whose top-k list contains an acceptable target.
// Throws std::invalid_argument when no entry can be evaluated.
PrecisionResult precision_at_k(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const AlignmentMap& omega, const EvalLexicon& lexicon,
                               std::size_t k, const RetrievalOptions& options = {});
PrecisionResult precision_at_k(const RetrievalIndex& index, const EmbeddingSpace& src,
                               const EmbeddingSpace& tgt, const EvalLexicon& lexicon,
                               std::size_t k);

}  // namespace embalign
