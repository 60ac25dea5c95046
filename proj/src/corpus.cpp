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

#include "embalign/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "embalign/random.hpp"

namespace embalign {

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

constexpr std::array<std::string_view, 10> kDigitWords = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};

}  // namespace

void preprocess(std::string_view raw, const std::function<void(std::string_view)>& sink) {
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      sink(token);
      token.clear();
    }
  };
  for (unsigned char ch : raw) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<unsigned char>(ch - 'A' + 'a');
    if (ch >= 'a' && ch <= 'z') {
      token.push_back(static_cast<char>(ch));
    } else if (ch >= '0' && ch <= '9') {
      flush();
      sink(kDigitWords[ch - '0']);
    } else {
      flush();
    }
  }
  flush();
}

std::vector<std::string> preprocess(std::string_view raw) {
  std::vector<std::string> out;
  preprocess(raw, [&](std::string_view t) { out.emplace_back(t); });
  return out;
}

std::size_t TokenizedCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

TokenizedCorpus TokenizedCorpus::from_tokens(std::vector<std::string> tokens) {
  TokenizedCorpus c;
  c.documents.push_back(std::move(tokens));
  return c;
}

TokenizedCorpus preprocess_stream(std::istream& in) {
  TokenizedCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = preprocess(line);
    if (!tokens.empty()) corpus.documents.push_back(std::move(tokens));
  }
  return corpus;
}

TokenizedCorpus preprocess_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  return preprocess_stream(in);
}

CorpusStats count_vocabulary(const TokenizedCorpus& corpus, std::uint64_t min_count,
                             std::size_t max_vocab) {
  std::unordered_map<std::string, std::uint64_t> counts;
  CorpusStats stats;
  stats.min_count = min_count;
  for (const auto& doc : corpus.documents) {
    for (const auto& t : doc) ++counts[t];
    stats.token_count += doc.size();
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  auto vocab = Vocabulary::from_counts(std::move(kept));
  if (max_vocab > 0 && vocab.size() > max_vocab) vocab = vocab.prefix(max_vocab);
  stats.vocab = std::move(vocab);
  return stats;
}

std::size_t EncodedCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

EncodedCorpus encode(const TokenizedCorpus& corpus, const Vocabulary& vocab) {
  EncodedCorpus out;
  out.documents.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    std::vector<std::int32_t> ids;
    ids.reserve(doc.size());
    for (const auto& t : doc) {
      if (auto i = vocab.find(t)) ids.push_back(static_cast<std::int32_t>(*i));
    }
    if (!ids.empty()) out.documents.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Co-occurrences

CoocMatrix count_cooccurrences(const EncodedCorpus& corpus, const Vocabulary& vocab, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const auto n = static_cast<Eigen::Index>(vocab.size());
  std::unordered_map<std::uint64_t, double> cells;
  for (const auto& doc : corpus.documents) {
    const auto len = static_cast<std::ptrdiff_t>(doc.size());
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      const auto w = static_cast<std::uint64_t>(doc[static_cast<std::size_t>(i)]);
      for (std::ptrdiff_t k = 1; k <= window; ++k) {
        for (std::ptrdiff_t j : {i - k, i + k}) {
          if (j < 0 || j >= len) continue;
          const auto c = static_cast<std::uint64_t>(doc[static_cast<std::size_t>(j)]);
          cells[(w << 32) | c] += 1.0;
        }
      }
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(cells.size());
  for (const auto& [key, v] : cells) {
    triplets.emplace_back(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffULL), v);
  }
  CoocMatrix m;
  m.vocab = vocab;
  m.window = window;
  m.counts.resize(n, n);
  m.counts.setFromTriplets(triplets.begin(), triplets.end());
  m.counts.makeCompressed();
  return m;
}

CoocMatrix count_cooccurrences(const TokenizedCorpus& corpus, int window, std::uint64_t min_count,
                               std::size_t max_vocab) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  auto stats = count_vocabulary(corpus, min_count, max_vocab);
  if (stats.vocab.empty()) {
    throw std::invalid_argument("no token reaches min_count " + std::to_string(min_count));
  }
  return count_cooccurrences(encode(corpus, stats.vocab), stats.vocab, window);
}

CoocMatrix count_cooccurrences(const std::vector<std::string>& tokens, int window,
                               std::uint64_t min_count) {
  return count_cooccurrences(TokenizedCorpus::from_tokens(tokens), window, min_count);
}

// ---------------------------------------------------------------------------
// PPMI-SVD

Eigen::MatrixXd ppmi_matrix(const CoocMatrix& cooc) {
  const auto n = cooc.counts.rows();
  if (static_cast<std::size_t>(n) > kMaxDensePpmiVocab) {
    throw std::invalid_argument("vocabulary of " + std::to_string(n) +
                                " words is too large for the dense PPMI path (max " +
                                std::to_string(kMaxDensePpmiVocab) + "); lower max_vocab");
  }
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(cooc.counts.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < cooc.counts.outerSize(); ++r) {
    for (decltype(cooc.counts)::InnerIterator it(cooc.counts, r); it; ++it) {
      row_sum(it.row()) += it.value();
      col_sum(it.col()) += it.value();
      total += it.value();
    }
  }
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, cooc.counts.cols());
  for (Eigen::Index r = 0; r < cooc.counts.outerSize(); ++r) {
    for (decltype(cooc.counts)::InnerIterator it(cooc.counts, r); it; ++it) {
      if (it.value() <= 0.0) continue;
      const double pmi = std::log(it.value() * total / (row_sum(it.row()) * col_sum(it.col())));
      ppmi(it.row(), it.col()) = pmi > 0.0 ? pmi : 0.0;
    }
  }
  return ppmi;
}

namespace {

bool exactly_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = c + 1; r < m.rows(); ++r) {
      if (m(r, c) != m(c, r)) return false;
    }
  }
  return true;
}

// Flips each singular pair so the largest-magnitude entry of v is positive.
void canonical_signs(PpmiSvdFactors& f) {
  for (Eigen::Index k = 0; k < f.v.cols(); ++k) {
    Eigen::Index arg = 0;
    f.v.col(k).cwiseAbs().maxCoeff(&arg);
    if (f.v(arg, k) < 0.0) {
      f.v.col(k) *= -1.0;
      f.u.col(k) *= -1.0;
    }
  }
}

}  // namespace

PpmiSvdFactors truncated_svd(const Eigen::MatrixXd& m, int dim) {
  const Eigen::Index k = dim;
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (k > std::min(m.rows(), m.cols())) {
    throw std::invalid_argument("dim " + std::to_string(dim) + " exceeds the " +
                                std::to_string(std::min(m.rows(), m.cols())) +
                                " available singular values");
  }
  PpmiSvdFactors f;
  f.u.resize(m.rows(), k);
  f.v.resize(m.cols(), k);
  f.singular_values.resize(k);

  if (exactly_symmetric(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lambda.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(lambda(a)) > std::abs(lambda(b));
    });
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index src = order[static_cast<std::size_t>(j)];
      const double l = lambda(src);
      f.singular_values(j) = std::abs(l);
      f.v.col(j) = eig.eigenvectors().col(src);
      f.u.col(j) = (l < 0.0 ? -1.0 : 1.0) * eig.eigenvectors().col(src);
    }
  } else {
    const Eigen::MatrixXd gram = m.transpose() * m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const Eigen::Index n = gram.rows();
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index src = n - 1 - j;  // ascending order from the solver
      const double s = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
      f.singular_values(j) = s;
      f.v.col(j) = eig.eigenvectors().col(src);
      if (s > 0.0) f.u.col(j) = m * f.v.col(j) / s;
      else f.u.col(j).setZero();
    }
  }
  const double top = f.singular_values(0);
  if (!(top > 0.0)) throw std::invalid_argument("matrix is all zero; nothing to factorize");
  if (f.singular_values(k - 1) <= 1e-12 * top) {
    throw std::invalid_argument("dim " + std::to_string(dim) +
                                " exceeds the numerical rank of the matrix");
  }
  canonical_signs(f);
  return f;
}

EmbeddingSpace train_ppmi_svd(const CoocMatrix& cooc, int dim, double eig_exponent) {
  if (cooc.counts.nonZeros() == 0) {
    throw std::invalid_argument("co-occurrence matrix is empty");
  }
  const Eigen::MatrixXd ppmi = ppmi_matrix(cooc);
  if (ppmi.isZero(0.0)) throw std::invalid_argument("PPMI matrix is all zero");
  const auto f = truncated_svd(ppmi, dim);
  RowMatrix words = f.u;
  for (Eigen::Index j = 0; j < f.singular_values.size(); ++j) {
    words.col(j) *= std::pow(f.singular_values(j), eig_exponent);
  }
  return EmbeddingSpace(cooc.vocab, std::move(words));
}

// ---------------------------------------------------------------------------
// SGNS

void SgnsConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("sgns: dim must be >= 1");
  if (window < 1) throw std::invalid_argument("sgns: window must be >= 1");
  if (negatives < 1) throw std::invalid_argument("sgns: negatives must be >= 1");
  if (epochs < 1) throw std::invalid_argument("sgns: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("sgns: learning_rate must be > 0");
  if (min_learning_rate < 0.0) throw std::invalid_argument("sgns: min_learning_rate must be >= 0");
  if (subsample_threshold < 0.0) throw std::invalid_argument("sgns: subsample must be >= 0");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log s(x), stable for large |x|.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// Walker alias table for O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / sum;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t draw(Rng& rng) const {
    const std::size_t i = rng.below(prob_.size());
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace

double sgns_pair_loss(const Eigen::VectorXd& u, const Eigen::VectorXd& v_pos,
                      const std::vector<Eigen::VectorXd>& v_neg) {
  double loss = -log_sigmoid(u.dot(v_pos));
  for (const auto& v : v_neg) loss -= log_sigmoid(-u.dot(v));
  return loss;
}

Eigen::VectorXd sgns_pair_grad_word(const Eigen::VectorXd& u, const Eigen::VectorXd& v_pos,
                                    const std::vector<Eigen::VectorXd>& v_neg) {
  // d/du of -log s(u.v) is -(1 - s(u.v)) v; of -log s(-u.v) it is s(u.v) v.
  Eigen::VectorXd g = -(1.0 - sigmoid(u.dot(v_pos))) * v_pos;
  for (const auto& v : v_neg) g += sigmoid(u.dot(v)) * v;
  return g;
}

SgnsModel train_sgns_model(const EncodedCorpus& corpus, const Vocabulary& vocab,
                           const SgnsConfig& config) {
  config.validate();
  if (vocab.empty()) throw std::invalid_argument("sgns: empty vocabulary");
  const auto n = static_cast<Eigen::Index>(vocab.size());
  const int d = config.dim;
  Rng rng(config.seed);

  SgnsModel model;
  model.vocab = vocab;
  model.word_vectors.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) model.word_vectors(i, c) = (rng.uniform() - 0.5) / d;
  }
  model.context_vectors = RowMatrix::Zero(n, d);

  // Word frequencies come from the vocabulary when known, otherwise from the
  // encoded corpus itself.
  std::vector<double> freq(static_cast<std::size_t>(n), 0.0);
  if (vocab.has_frequencies()) {
    for (Eigen::Index i = 0; i < n; ++i) freq[static_cast<std::size_t>(i)] = static_cast<double>(vocab.frequency(static_cast<std::size_t>(i)));
  } else {
    for (const auto& doc : corpus.documents)
      for (auto id : doc) freq[static_cast<std::size_t>(id)] += 1.0;
  }
  std::vector<double> weights(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i) weights[i] = std::pow(freq[i], config.context_smoothing);
  const AliasTable noise(weights);

  const double total_freq = std::accumulate(freq.begin(), freq.end(), 0.0);
  std::vector<double> keep_prob(freq.size(), 1.0);
  if (config.subsample_threshold > 0.0) {
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double f = freq[i] / total_freq;
      if (f > 0.0) keep_prob[i] = std::min(1.0, std::sqrt(config.subsample_threshold / f));
    }
  }

  const double planned = static_cast<double>(corpus.token_count()) * config.epochs;
  double processed = 0.0;
  Eigen::VectorXd grad_word(d);
  std::vector<std::int32_t> doc_buf;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& raw_doc : corpus.documents) {
      const std::vector<std::int32_t>* doc = &raw_doc;
      if (config.subsample_threshold > 0.0) {
        doc_buf.clear();
        for (auto id : raw_doc) {
          if (rng.uniform() < keep_prob[static_cast<std::size_t>(id)]) doc_buf.push_back(id);
        }
        doc = &doc_buf;
      }
      const auto len = static_cast<std::ptrdiff_t>(doc->size());
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        const double lr = std::max(config.min_learning_rate,
                                   config.learning_rate * (1.0 - processed / (planned + 1.0)));
        processed += 1.0;
        const auto w = static_cast<Eigen::Index>((*doc)[static_cast<std::size_t>(i)]);
        const int b = config.dynamic_window ? 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(config.window))) : config.window;
        for (std::ptrdiff_t j = i - b; j <= i + b; ++j) {
          if (j == i || j < 0 || j >= len) continue;
          const auto c = static_cast<Eigen::Index>((*doc)[static_cast<std::size_t>(j)]);
          auto u = model.word_vectors.row(w);
          grad_word.setZero();
          for (int s = 0; s <= config.negatives; ++s) {
            Eigen::Index target = c;
            double label = 1.0;
            if (s > 0) {
              target = static_cast<Eigen::Index>(noise.draw(rng));
              if (target == c) continue;
              label = 0.0;
            }
            auto v = model.context_vectors.row(target);
            const double g = lr * (label - sigmoid(u.dot(v)));
            grad_word.noalias() += g * v.transpose();
            v.noalias() += g * u;
          }
          u.noalias() += grad_word.transpose();
        }
      }
    }
  }
  return model;
}

SgnsModel train_sgns_model(const TokenizedCorpus& corpus, const SgnsConfig& config) {
  config.validate();
  auto stats = count_vocabulary(corpus, config.min_count, config.max_vocab);
  if (stats.vocab.empty()) {
    throw std::invalid_argument("sgns: no token reaches min_count " +
                                std::to_string(config.min_count));
  }
  return train_sgns_model(encode(corpus, stats.vocab), stats.vocab, config);
}

EmbeddingSpace train_sgns(const TokenizedCorpus& corpus, const SgnsConfig& config) {
  return train_sgns_model(corpus, config).words();
}

EmbeddingSpace train_sgns(const std::vector<std::string>& tokens, const SgnsConfig& config) {
  return train_sgns(TokenizedCorpus::from_tokens(tokens), config);
}

}  // namespace embalign
