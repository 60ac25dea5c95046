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

#include "embalign/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace embalign {

Scorer parse_scorer(std::string_view name) {
  if (name == "cosine") return Scorer::kCosine;
  if (name == "csls") return Scorer::kCsls;
  throw std::invalid_argument("unknown scorer '" + std::string(name) + "' (cosine|csls)");
}

std::string_view to_string(Scorer s) { return s == Scorer::kCsls ? "csls" : "cosine"; }

namespace {

// Every final score goes through this one sequential dot product, so the
// exhaustive and blocked paths agree to the last bit.
[[gnu::noinline]] double exact_dot(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

double exact_score(const RowMatrix& q, Eigen::Index qi, const RowMatrix& keys, Eigen::Index ki,
                   const Eigen::VectorXd* qp, const Eigen::VectorXd* kp) {
  const double dot = exact_dot(q.row(qi).data(), keys.row(ki).data(), q.cols());
  if (qp == nullptr && kp == nullptr) return dot;
  double s = 2.0 * dot;
  if (qp) s -= (*qp)(qi);
  if (kp) s -= (*kp)(ki);
  return s;
}

struct Ranked {
  double score;
  Eigen::Index index;
};

bool better(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

void keep_top(std::vector<Ranked>& cand, std::size_t k, std::vector<Eigen::Index>& idx,
              std::vector<double>& score) {
  const std::size_t m = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end(), better);
  idx.resize(m);
  score.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    idx[i] = cand[i].index;
    score[i] = cand[i].score;
  }
}

}  // namespace

RowMatrix normalized_rows(const RowMatrix& m) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

Neighbors nearest_neighbors(const RowMatrix& queries, const RowMatrix& keys, std::size_t k,
                            const Eigen::VectorXd* query_penalty,
                            const Eigen::VectorXd* key_penalty, bool brute_force) {
  if (queries.cols() != keys.cols()) throw std::invalid_argument("nearest_neighbors: dim mismatch");
  if (k == 0) throw std::invalid_argument("nearest_neighbors: k must be >= 1");
  const Eigen::Index nq = queries.rows();
  const Eigen::Index nk = keys.rows();
  const bool csls = query_penalty != nullptr || key_penalty != nullptr;
  Neighbors out;
  out.index.resize(static_cast<std::size_t>(nq));
  out.score.resize(static_cast<std::size_t>(nq));
  std::vector<Ranked> cand;

  if (brute_force) {
    cand.resize(static_cast<std::size_t>(nk));
    for (Eigen::Index q = 0; q < nq; ++q) {
      for (Eigen::Index t = 0; t < nk; ++t) {
        cand[static_cast<std::size_t>(t)] = {exact_score(queries, q, keys, t, query_penalty, key_penalty), t};
      }
      keep_top(cand, k, out.index[static_cast<std::size_t>(q)], out.score[static_cast<std::size_t>(q)]);
    }
    return out;
  }

  // Blocked path: a matrix product ranks candidates approximately, everything
  // within a safety margin of the k-th approximate score is rescored exactly.
  constexpr Eigen::Index kBlock = 256;
  const double margin = csls ? 2e-9 : 1e-9;
  Eigen::MatrixXd block_scores;
  std::vector<double> approx(static_cast<std::size_t>(nk));
  std::vector<double> scratch;
  for (Eigen::Index q0 = 0; q0 < nq; q0 += kBlock) {
    const Eigen::Index nb = std::min(kBlock, nq - q0);
    block_scores.noalias() = keys * queries.middleRows(q0, nb).transpose();  // nk x nb
    for (Eigen::Index b = 0; b < nb; ++b) {
      const Eigen::Index q = q0 + b;
      for (Eigen::Index t = 0; t < nk; ++t) {
        double s = block_scores(t, b);
        if (csls) {
          s *= 2.0;
          if (query_penalty) s -= (*query_penalty)(q);
          if (key_penalty) s -= (*key_penalty)(t);
        }
        approx[static_cast<std::size_t>(t)] = s;
      }
      const std::size_t m = std::min<std::size_t>(k, static_cast<std::size_t>(nk));
      scratch = approx;
      std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(m - 1),
                       scratch.end(), std::greater<>());
      const double threshold = scratch[m - 1] - margin;
      cand.clear();
      for (Eigen::Index t = 0; t < nk; ++t) {
        if (approx[static_cast<std::size_t>(t)] >= threshold) {
          cand.push_back({exact_score(queries, q, keys, t, query_penalty, key_penalty), t});
        }
      }
      keep_top(cand, k, out.index[static_cast<std::size_t>(q)], out.score[static_cast<std::size_t>(q)]);
    }
  }
  return out;
}

Eigen::VectorXd mean_neighbor_similarity(const RowMatrix& queries, const RowMatrix& keys,
                                         std::size_t k, bool brute_force) {
  const auto nn = nearest_neighbors(queries, keys, k, nullptr, nullptr, brute_force);
  Eigen::VectorXd r(queries.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const auto& s = nn.score[static_cast<std::size_t>(q)];
    double sum = 0.0;
    for (double v : s) sum += v;
    r(q) = s.empty() ? 0.0 : sum / static_cast<double>(s.size());
  }
  return r;
}

// ---------------------------------------------------------------------------

RetrievalIndex::RetrievalIndex(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const AlignmentMap& omega, const RetrievalOptions& options)
    : options_(options) {
  if (src.dim() != tgt.dim() || omega.dim() != src.dim()) {
    throw std::invalid_argument("retrieval: dimension mismatch between spaces and map");
  }
  src_ = normalized_rows(omega.map_rows(src.vectors()));
  tgt_ = normalized_rows(tgt.vectors());
  if (options_.scorer == Scorer::kCsls) {
    if (options_.csls_k < 1) throw std::invalid_argument("csls_k must be >= 1");
    const auto k = static_cast<std::size_t>(options_.csls_k);
    src_penalty_ = mean_neighbor_similarity(src_, tgt_, k, options_.brute_force);
    tgt_penalty_ = mean_neighbor_similarity(tgt_, src_, k, options_.brute_force);
  }
}

std::vector<std::vector<Eigen::Index>> RetrievalIndex::top_k(
    const std::vector<std::size_t>& source_rows, std::size_t k) const {
  RowMatrix queries(static_cast<Eigen::Index>(source_rows.size()), src_.cols());
  Eigen::VectorXd penalty(queries.rows());
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(source_rows[i]);
    queries.row(static_cast<Eigen::Index>(i)) = src_.row(r);
    if (options_.scorer == Scorer::kCsls) penalty(static_cast<Eigen::Index>(i)) = src_penalty_(r);
  }
  const bool csls = options_.scorer == Scorer::kCsls;
  return nearest_neighbors(queries, tgt_, k, csls ? &penalty : nullptr,
                           csls ? &tgt_penalty_ : nullptr, options_.brute_force)
      .index;
}

std::vector<Eigen::Index> RetrievalIndex::top_k(std::size_t source_row, std::size_t k) const {
  return top_k(std::vector<std::size_t>{source_row}, k).front();
}

std::vector<std::string> retrieve(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                  const AlignmentMap& omega, std::string_view query, std::size_t k,
                                  Scorer scorer) {
  if (k == 0) throw std::invalid_argument("retrieve: k must be >= 1");
  const auto row = src.vocab().find(query);
  if (!row) throw std::invalid_argument("unknown query token '" + std::string(query) + "'");
  RetrievalOptions opts;
  opts.scorer = scorer;
  const RetrievalIndex index(src, tgt, omega, opts);
  std::vector<std::string> out;
  for (auto t : index.top_k(*row, k)) out.push_back(tgt.vocab().word(static_cast<std::size_t>(t)));
  return out;
}

// ---------------------------------------------------------------------------
// Lexicons and precision

void EvalLexicon::validate() const {
  if (entries.empty()) throw std::invalid_argument("evaluation lexicon is empty");
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.source).second) {
      throw std::invalid_argument("evaluation lexicon repeats source '" + e.source + "'");
    }
    if (e.targets.empty()) {
      throw std::invalid_argument("lexicon entry '" + e.source + "' has no targets");
    }
  }
}

EvalLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path.string());
  EvalLexicon lex;
  std::unordered_map<std::string, std::size_t> pos;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string s, t, extra;
    if (!(ls >> s)) continue;
    if (!(ls >> t) || (ls >> extra)) {
      throw std::runtime_error("lexicon line " + std::to_string(lineno) +
                               " must hold exactly two tokens");
    }
    auto [it, fresh] = pos.emplace(s, lex.entries.size());
    if (fresh) lex.entries.push_back({s, {}});
    auto& targets = lex.entries[it->second].targets;
    if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
  }
  lex.validate();
  return lex;
}

EvalLexicon identity_lexicon(const std::vector<std::string>& words) {
  EvalLexicon lex;
  lex.entries.reserve(words.size());
  for (const auto& w : words) lex.entries.push_back({w, {w}});
  return lex;
}

void save_lexicon(const EvalLexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& e : lexicon.entries)
    for (const auto& t : e.targets) out << e.source << ' ' << t << '\n';
}

PrecisionResult precision_at_k(const RetrievalIndex& index, const EmbeddingSpace& src,
                               const EmbeddingSpace& tgt, const EvalLexicon& lexicon,
                               std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision_at_k: k must be >= 1");
  PrecisionResult r;
  r.k = k;
  std::vector<std::size_t> rows;
  std::vector<std::vector<Eigen::Index>> gold;
  for (const auto& e : lexicon.entries) {
    const auto s = src.vocab().find(e.source);
    std::vector<Eigen::Index> acceptable;
    for (const auto& t : e.targets) {
      if (auto j = tgt.vocab().find(t)) acceptable.push_back(static_cast<Eigen::Index>(*j));
    }
    if (!s || acceptable.empty()) {
      ++r.n_skipped;
      continue;
    }
    rows.push_back(*s);
    gold.push_back(std::move(acceptable));
  }
  if (rows.empty()) throw std::invalid_argument("no lexicon entry is present in both vocabularies");
  const auto ranked = index.top_k(rows, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& top = ranked[i];
    const bool hit = std::any_of(top.begin(), top.end(), [&](Eigen::Index t) {
      return std::find(gold[i].begin(), gold[i].end(), t) != gold[i].end();
    });
    if (hit) ++hits;
  }
  r.n_evaluated = rows.size();
  r.precision = static_cast<double>(hits) / static_cast<double>(rows.size());
  return r;
}

PrecisionResult precision_at_k(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const AlignmentMap& omega, const EvalLexicon& lexicon,
                               std::size_t k, const RetrievalOptions& options) {
  const RetrievalIndex index(src, tgt, omega, options);
  return precision_at_k(index, src, tgt, lexicon, k);
}

}  // namespace embalign
