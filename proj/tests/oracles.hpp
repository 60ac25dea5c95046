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

// Independent reference implementations for tests. Nothing here calls into
// the library's numerics: the point is to have a second opinion.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "embalign/embedding_store.hpp"

namespace oracle {

inline Eigen::MatrixXd gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(gen);
  return m;
}

// Orthonormalize the columns of a random matrix by modified Gram-Schmidt
// (run twice for good measure).
inline Eigen::MatrixXd random_orthogonal(std::size_t d, std::uint64_t seed) {
  Eigen::MatrixXd q = gaussian(d, d, seed);
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      q.col(j) /= q.col(j).norm();
    }
  }
  return q;
}

// Cyclic Jacobi eigensolver for symmetric matrices. Returns (values, vectors)
// with eigenvectors as columns, unsorted.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return {a.diagonal(), v};
}

// Best rank-k approximation of a square symmetric matrix via Jacobi
// (largest |eigenvalue| first).
inline Eigen::MatrixXd best_rank_k(const Eigen::MatrixXd& m, int k) {
  auto [vals, vecs] = jacobi_eigen(m);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return std::abs(vals(a)) > std::abs(vals(b)); });
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (int j = 0; j < k; ++j) {
    const auto c = order[static_cast<std::size_t>(j)];
    out += vals(c) * vecs.col(c) * vecs.col(c).transpose();
  }
  return out;
}

// Full cosine score table, scores[i][j] = cos(q_i, k_j), plain loops.
inline std::vector<std::vector<double>> cosine_table(const embalign::RowMatrix& q,
                                                     const embalign::RowMatrix& k) {
  std::vector<std::vector<double>> s(static_cast<std::size_t>(q.rows()),
                                     std::vector<double>(static_cast<std::size_t>(k.rows())));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double nq = 0;
    for (Eigen::Index c = 0; c < q.cols(); ++c) nq += q(i, c) * q(i, c);
    for (Eigen::Index j = 0; j < k.rows(); ++j) {
      double nk = 0, dot = 0;
      for (Eigen::Index c = 0; c < q.cols(); ++c) {
        nk += k(j, c) * k(j, c);
        dot += q(i, c) * k(j, c);
      }
      s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = dot / std::sqrt(nq * nk);
    }
  }
  return s;
}

// Index of the best score, lowest index on ties.
inline std::size_t argmax(const std::vector<double>& row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

inline embalign::EmbeddingSpace random_space(std::size_t n, std::size_t d, std::uint64_t seed,
                                             const std::string& prefix = "w") {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(prefix + std::to_string(i));
  embalign::RowMatrix m = gaussian(n, d, seed);
  return embalign::EmbeddingSpace(embalign::Vocabulary::from_words(std::move(words)), std::move(m));
}

// Central difference of f at x along every coordinate; x is any Eigen
// matrix or vector that f reads by reference.
template <class F, class M>
Eigen::MatrixXd numeric_gradient(F&& f, M& x, double h = 1e-6) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + h;
      const double up = f();
      x(i, j) = orig - h;
      const double down = f();
      x(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace oracle
