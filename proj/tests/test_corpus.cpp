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

#include <map>
#include <set>
#include <sstream>

#include "embalign/corpus.hpp"
#include "oracles.hpp"

using namespace embalign;

namespace {

using Strings = std::vector<std::string>;

double cell(const CoocMatrix& m, const std::string& a, const std::string& b) {
  return m.counts.coeff(static_cast<Eigen::Index>(*m.vocab.find(a)),
                        static_cast<Eigen::Index>(*m.vocab.find(b)));
}

// Brute-force window events: every ordered (i, j) with 0 < |i - j| <= w.
std::map<std::pair<std::string, std::string>, double> enumerate_pairs(const Strings& t, int w) {
  std::map<std::pair<std::string, std::string>, double> out;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      const auto gap = i > j ? i - j : j - i;
      if (gap >= 1 && gap <= static_cast<std::size_t>(w)) out[{t[i], t[j]}] += 1.0;
    }
  return out;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("preprocess examples") {
  CHECK(preprocess("Hello, World!") == Strings{"hello", "world"});
  CHECK(preprocess("GAN-2018") == Strings{"gan", "two", "zero", "one", "eight"});
  CHECK(preprocess("").empty());
  CHECK(preprocess("  \t ") .empty());
  CHECK(preprocess("x9y") == Strings{"x", "nine", "y"});
  CHECK(preprocess("caf\xc3\xa9 ol\xc3\xa9") == Strings{"caf", "ol"});
}

TEST_CASE("preprocess output alphabet is a-z") {
  std::string raw;
  for (int c = 1; c < 256; ++c) raw += static_cast<char>(c);
  raw += " The 42 Quick-Brown_Fox's 3.14";
  for (const auto& tok : preprocess(raw)) {
    CHECK_FALSE(tok.empty());
    for (char ch : tok) CHECK((ch >= 'a' && ch <= 'z'));
  }
  // Idempotent: a second pass over joined output changes nothing.
  std::string joined;
  for (const auto& t : preprocess(raw)) joined += t + " ";
  CHECK(preprocess(joined) == preprocess(raw));
}

TEST_CASE("documents are lines") {
  std::istringstream in("One two\n\nthree\n");
  const auto c = preprocess_stream(in);
  REQUIRE(c.documents.size() == 2);
  CHECK(c.documents[0] == Strings{"one", "two"});
  CHECK(c.token_count() == 3);
}

TEST_CASE("co-occurrence hand enumeration") {
  const auto m = count_cooccurrences(Strings{"a", "b", "a"}, 1, 1);
  CHECK(cell(m, "a", "b") == 2);
  CHECK(cell(m, "b", "a") == 2);
  CHECK(cell(m, "a", "a") == 0);
  CHECK(m.total() == 4);

  CHECK(count_cooccurrences(Strings{"a"}, 3, 1).total() == 0);

  const auto t = count_cooccurrences(Strings{"a", "b", "c"}, 2, 1);
  for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{
           {"a", "b"}, {"a", "c"}, {"b", "a"}, {"b", "c"}, {"c", "b"}, {"c", "a"}}) {
    CHECK(cell(t, x, y) == 1);
  }
  CHECK(t.total() == 6);
}

TEST_CASE("co-occurrence mass matches brute force on random input") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    Strings toks;
    const std::size_t len = 1 + gen() % 40;
    for (std::size_t i = 0; i < len; ++i) toks.push_back(std::string(1, static_cast<char>('a' + gen() % 5)));
    const int w = 1 + static_cast<int>(gen() % 4);
    const auto m = count_cooccurrences(toks, w, 1);
    const auto want = enumerate_pairs(toks, w);
    double mass = 0;
    for (const auto& [k, v] : want) {
      CHECK(cell(m, k.first, k.second) == v);
      mass += v;
    }
    CHECK(m.total() == mass);
  }
}

TEST_CASE("windows do not cross documents and min_count filters") {
  TokenizedCorpus c;
  c.documents = {{"a", "b"}, {"c", "a"}};
  const auto m = count_cooccurrences(c, 5, 1);
  CHECK(cell(m, "b", "c") == 0);
  CHECK(cell(m, "a", "b") == 1);
  const auto f = count_cooccurrences(c, 5, 2);
  CHECK(f.vocab.words() == Strings{"a"});
  CHECK(f.total() == 0);
  CHECK_THROWS_AS(count_cooccurrences(c, 5, 3), std::invalid_argument);
  CHECK_THROWS_AS(count_cooccurrences(c, 0, 1), std::invalid_argument);
}

TEST_CASE("vocabulary counts") {
  TokenizedCorpus c;
  c.documents = {{"b", "a", "b", "c"}, {"a", "b"}};
  const auto s = count_vocabulary(c, 2);
  CHECK(s.token_count == 6);
  CHECK(s.vocab.words() == Strings{"b", "a"});
  CHECK(s.vocab.frequency(0) == 3);
  CHECK(count_vocabulary(c, 1, 1).vocab.words() == Strings{"b"});
  const auto e = encode(c, s.vocab);
  CHECK(e.documents[0] == std::vector<std::int32_t>{0, 1, 0});
}

TEST_CASE("PPMI of the 2x2 example") {
  CoocMatrix c;
  c.vocab = Vocabulary::from_words({"a", "b"});
  c.counts.resize(2, 2);
  c.counts.insert(0, 1) = 2;
  c.counts.insert(1, 0) = 2;
  const auto p = ppmi_matrix(c);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(1, 1) == 0.0);
  CHECK(p(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("PPMI is non-negative and symmetric on symmetric windows") {
  Strings toks;
  std::mt19937_64 gen(8);
  for (int i = 0; i < 3000; ++i) toks.push_back("w" + std::to_string(gen() % 30));
  const auto c = count_cooccurrences(toks, 2, 1);
  const auto p = ppmi_matrix(c);
  CHECK(p.minCoeff() >= 0.0);
  CHECK((p - p.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("truncated SVD against the Jacobi oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Eigen::MatrixXd g = oracle::gaussian(30, 30, seed);
    const Eigen::MatrixXd sym = (g + g.transpose()).cwiseAbs();  // non-negative, like PPMI
    for (int k : {1, 5, 12}) {
      const auto f = truncated_svd(sym, k);
      const Eigen::MatrixXd approx = f.u * f.singular_values.asDiagonal() * f.v.transpose();
      const double err = (approx - sym).norm();
      const double best = (oracle::best_rank_k(sym, k) - sym).norm();
      CHECK(err <= best + 1e-8);
      for (Eigen::Index j = 1; j < k; ++j) CHECK(f.singular_values(j - 1) >= f.singular_values(j));
    }
  }
  // Non-symmetric input goes through the Gram path.
  const Eigen::MatrixXd a = oracle::gaussian(20, 20, 9).cwiseAbs();
  const auto f = truncated_svd(a, 6);
  const auto [vals, vecs] = oracle::jacobi_eigen(a.transpose() * a);
  std::vector<double> sv;
  for (Eigen::Index i = 0; i < vals.size(); ++i) sv.push_back(std::sqrt(std::max(0.0, vals(i))));
  std::sort(sv.rbegin(), sv.rend());
  for (int j = 0; j < 6; ++j) CHECK(f.singular_values(j) == doctest::Approx(sv[static_cast<std::size_t>(j)]).epsilon(1e-9));
  const Eigen::MatrixXd approx = f.u * f.singular_values.asDiagonal() * f.v.transpose();
  double tail = 0;
  for (std::size_t j = 6; j < sv.size(); ++j) tail += sv[j] * sv[j];
  CHECK((approx - a).norm() <= std::sqrt(tail) + 1e-8);

  CHECK_THROWS_AS(truncated_svd(a, 21), std::invalid_argument);
  CHECK_THROWS_AS(truncated_svd(a, 0), std::invalid_argument);
}

TEST_CASE("rank-1 counts reconstruct within 1e-8") {
  // Outer product counts: PPMI of an independent table is all zero, so use a
  // symmetric rank-1 PPMI directly.
  Eigen::VectorXd x(6);
  x << 1, 2, 3, 0.5, 0.25, 4;
  const Eigen::MatrixXd m = x * x.transpose();
  const auto f = truncated_svd(m, 1);
  CHECK((f.u * f.singular_values.asDiagonal() * f.v.transpose() - m).norm() <= 1e-8);
  CHECK(f.singular_values(0) == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("eig_exponent 0 gives orthonormal columns") {
  Strings toks;
  std::mt19937_64 gen(4);
  for (int i = 0; i < 4000; ++i) toks.push_back("w" + std::to_string(gen() % 25));
  const auto c = count_cooccurrences(toks, 2, 1);
  const auto s = train_ppmi_svd(c, static_cast<int>(c.vocab.size()), 0.0);
  const Eigen::MatrixXd gram = s.vectors().transpose() * s.vectors();
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 0; i < s.vectors().rows(); ++i) CHECK(std::abs(s.vectors().row(i).norm() - 1.0) < 1e-10);

  const auto half = train_ppmi_svd(c, 10, 0.5);
  CHECK(half.dim() == 10);
  CHECK(half.vocab().words() == c.vocab.words());
  CHECK_THROWS_AS(train_ppmi_svd(CoocMatrix{}, 2, 0.5), std::invalid_argument);
}

TEST_CASE("SGNS loss and gradient") {
  const Eigen::VectorXd u = oracle::gaussian(8, 1, 1).col(0) * 0.3;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
  CHECK(sgns_pair_loss(u, zero, {zero, zero, zero, zero, zero}) ==
        doctest::Approx(6 * std::log(2.0)).epsilon(1e-14));

  const Eigen::VectorXd pos = oracle::gaussian(8, 1, 2).col(0) * 0.3;
  std::vector<Eigen::VectorXd> neg = {oracle::gaussian(8, 1, 3).col(0) * 0.3,
                                      oracle::gaussian(8, 1, 4).col(0) * 0.3};
  // Positive-term gradient is -(1 - s(u.v)) v on the loss -log s(u.v).
  const double s = 1.0 / (1.0 + std::exp(-u.dot(pos)));
  const Eigen::VectorXd pos_only = sgns_pair_grad_word(u, pos, {});
  CHECK((pos_only + (1.0 - s) * pos).norm() < 1e-14);

  Eigen::MatrixXd x = u;
  auto f = [&] { return sgns_pair_loss(x.col(0), pos, neg); };
  const Eigen::MatrixXd num = oracle::numeric_gradient(f, x);
  const Eigen::VectorXd ana = sgns_pair_grad_word(u, pos, neg);
  CHECK((num.col(0) - ana).norm() / std::max(ana.norm(), 1e-8) <= 1e-5);
}

TEST_CASE("SGNS learns the a-b pairing") {
  TokenizedCorpus c;
  c.documents.resize(2);
  for (int i = 0; i < 5000; ++i) c.documents[0].push_back(i % 2 ? "b" : "a");
  for (int i = 0; i < 5000; ++i) c.documents[1].push_back(i % 2 ? "d" : "c");
  SgnsConfig cfg;
  cfg.dim = 10;
  cfg.min_count = 1;
  cfg.epochs = 3;
  cfg.seed = 5;
  const auto m = train_sgns_model(c, cfg);
  auto word = [&](const std::string& w) { return Eigen::VectorXd(m.word_vectors.row(static_cast<Eigen::Index>(*m.vocab.find(w)))); };
  auto ctx = [&](const std::string& w) { return Eigen::VectorXd(m.context_vectors.row(static_cast<Eigen::Index>(*m.vocab.find(w)))); };
  CHECK(cosine(word("a"), ctx("b")) > cosine(word("a"), ctx("d")));
  CHECK(cosine(word("c"), ctx("d")) > cosine(word("c"), ctx("b")));
}

TEST_CASE("SGNS is reproducible and seed-sensitive") {
  Strings toks;
  std::mt19937_64 gen(6);
  for (int i = 0; i < 3000; ++i) toks.push_back("w" + std::to_string(gen() % 20));
  SgnsConfig cfg;
  cfg.dim = 8;
  cfg.min_count = 1;
  cfg.epochs = 2;
  cfg.subsample_threshold = 1e-3;
  cfg.dynamic_window = true;
  const auto a = train_sgns(toks, cfg);
  const auto b = train_sgns(toks, cfg);
  CHECK(a.vectors() == b.vectors());
  cfg.seed = 2;
  CHECK(train_sgns(toks, cfg).vectors() != a.vectors());
}

TEST_CASE("SGNS config validation") {
  SgnsConfig cfg;
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.negatives = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  CHECK_NOTHROW(cfg.validate());
}
