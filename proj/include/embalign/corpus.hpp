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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "embalign/embedding_store.hpp"

namespace embalign {

// ---------------------------------------------------------------------------
// Preprocessing: lowercase, map everything outside [a-z0-9] to a space, spell
// digits out one by one ("2018" -> "two zero one eight"), split on spaces.

std::vector<std::string> preprocess(std::string_view raw);

// Streams tokens of one chunk of text to sink. Equivalent to preprocess() but
// without materializing the token list.
void preprocess(std::string_view raw, const std::function<void(std::string_view)>& sink);

// A tokenized corpus made of documents (windows never cross a document
// boundary). Files are read one document per line.
struct TokenizedCorpus {
  std::vector<std::vector<std::string>> documents;

  std::size_t token_count() const;
  static TokenizedCorpus from_tokens(std::vector<std::string> tokens);
};

TokenizedCorpus preprocess_file(const std::filesystem::path& path);
TokenizedCorpus preprocess_stream(std::istream& in);

struct CorpusStats {
  std::uint64_t token_count = 0;  // all tokens, including those below min_count
  Vocabulary vocab;               // retained words with their true counts
  std::uint64_t min_count = 1;
};

// Counts words; keeps those with count >= min_count, then at most max_vocab of
// the most frequent (0 = no cap).
CorpusStats count_vocabulary(const TokenizedCorpus& corpus, std::uint64_t min_count,
                             std::size_t max_vocab = 0);

// Corpus re-expressed as vocabulary row ids; out-of-vocabulary tokens are
// removed, so windows close up over them.
struct EncodedCorpus {
  std::vector<std::vector<std::int32_t>> documents;
  std::size_t token_count() const;
};

EncodedCorpus encode(const TokenizedCorpus& corpus, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Co-occurrence counting

struct CoocMatrix {
  Vocabulary vocab;
  // counts(w, c): number of times context c appeared within the window of w.
  Eigen::SparseMatrix<double, Eigen::RowMajor> counts;
  int window = 0;

  double total() const { return counts.sum(); }
};

CoocMatrix count_cooccurrences(const std::vector<std::string>& tokens, int window,
                               std::uint64_t min_count);
CoocMatrix count_cooccurrences(const TokenizedCorpus& corpus, int window, std::uint64_t min_count,
                               std::size_t max_vocab = 0);
CoocMatrix count_cooccurrences(const EncodedCorpus& corpus, const Vocabulary& vocab, int window);

// ---------------------------------------------------------------------------
// PPMI + truncated SVD

// Dense positive-PMI matrix; PMI(w,c) = log(#(w,c) N / (#(w) #(c))) with row and
// column sums as marginals, negatives and empty cells set to 0.
Eigen::MatrixXd ppmi_matrix(const CoocMatrix& cooc);

struct PpmiSvdFactors {
  Eigen::MatrixXd u;                 // n x dim, left singular vectors
  Eigen::VectorXd singular_values;   // dim, descending
  Eigen::MatrixXd v;                 // n x dim, right singular vectors
};

// Top-dim singular triples of a dense matrix. Symmetric input goes through a
// self-adjoint eigendecomposition; anything else through the Gram matrix.
PpmiSvdFactors truncated_svd(const Eigen::MatrixXd& m, int dim);

// Word vectors U * S^eig_exponent.
EmbeddingSpace train_ppmi_svd(const CoocMatrix& cooc, int dim, double eig_exponent);

// Largest vocabulary the dense PPMI path accepts.
inline constexpr std::size_t kMaxDensePpmiVocab = 12000;

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling

struct SgnsConfig {
  int dim = 100;
  int window = 2;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 0.025 * 1e-4;  // linear decay floor
  double subsample_threshold = 0.0;         // 0 disables subsampling
  double context_smoothing = 1.0;           // exponent on counts for negatives
  bool dynamic_window = false;
  std::uint64_t min_count = 100;
  std::size_t max_vocab = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SgnsModel {
  Vocabulary vocab;
  RowMatrix word_vectors;
  RowMatrix context_vectors;

  EmbeddingSpace words() const { return EmbeddingSpace(vocab, word_vectors); }
};

// Loss of one (word, context) pair with its negatives:
//   -log s(u.v_pos) - sum_j log s(-u.v_neg_j).
double sgns_pair_loss(const Eigen::VectorXd& u, const Eigen::VectorXd& v_pos,
                      const std::vector<Eigen::VectorXd>& v_neg);

// Gradient of sgns_pair_loss with respect to u.
Eigen::VectorXd sgns_pair_grad_word(const Eigen::VectorXd& u, const Eigen::VectorXd& v_pos,
                                    const std::vector<Eigen::VectorXd>& v_neg);

SgnsModel train_sgns_model(const EncodedCorpus& corpus, const Vocabulary& vocab,
                           const SgnsConfig& config);
SgnsModel train_sgns_model(const TokenizedCorpus& corpus, const SgnsConfig& config);
EmbeddingSpace train_sgns(const std::vector<std::string>& tokens, const SgnsConfig& config);
EmbeddingSpace train_sgns(const TokenizedCorpus& corpus, const SgnsConfig& config);

}  // namespace embalign
