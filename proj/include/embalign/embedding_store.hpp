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
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace embalign {

// Row-major so that each word vector is a contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised for malformed embedding files; carries the offending line number
// (1-based, 0 when the problem is not tied to a line).
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Ordered list of unique tokens with corpus counts.
//
// Rows of an EmbeddingSpace follow this order. When counts are known the order
// is descending count with lexicographic tiebreak; for external files counts
// are all zero and the file order stands in for frequency order.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Keeps the given order; frequencies are unknown (zero). Throws
  // std::invalid_argument on a duplicate token.
  static Vocabulary from_words(std::vector<std::string> words);

  // Sorts by descending count, ties lexicographic.
  static Vocabulary from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::uint64_t frequency(std::size_t i) const { return freq_.at(i); }
  bool has_frequencies() const { return has_freq_; }

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  // First n entries (all of them when n >= size()).
  Vocabulary prefix(std::size_t n) const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  void build_index();

  std::vector<std::string> words_;
  std::vector<std::uint64_t> freq_;
  bool has_freq_ = false;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

// A vocabulary plus one d-dimensional vector per word. Immutable; the
// transforms below return new spaces.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  // Throws std::invalid_argument if the row count differs from the vocabulary
  // size or any entry is non-finite.
  EmbeddingSpace(Vocabulary vocab, RowMatrix vectors);

  const Vocabulary& vocab() const { return vocab_; }
  const RowMatrix& vectors() const { return vectors_; }
  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  bool empty() const { return vocab_.empty(); }

  auto row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }

  // First n rows.
  EmbeddingSpace prefix(std::size_t n) const;

 private:
  Vocabulary vocab_;
  RowMatrix vectors_;
};

// Ordered (source, target) token pairs.
struct SeedDictionary {
  std::vector<std::pair<std::string, std::string>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  // Throws std::invalid_argument on a repeated source token.
  void validate() const;
};

// word2vec text format: header "count dim", then "token v1 ... vdim" per line.
EmbeddingSpace read_embeddings(std::istream& in, std::optional<std::size_t> limit = std::nullopt);
EmbeddingSpace load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> limit = std::nullopt);

// Values are written with 17 significant digits, so a reload is bit-identical.
void write_embeddings(const EmbeddingSpace& space, std::ostream& out);
void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path);

EmbeddingSpace unit_normalize(const EmbeddingSpace& space);
EmbeddingSpace center(const EmbeddingSpace& space);

// Column-wise mean of the vectors.
Eigen::VectorXd centroid(const EmbeddingSpace& space);

// Tokens present in both spaces, in a's order (its frequency order).
std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a, const EmbeddingSpace& b);

// Preprocessing applied to a space before alignment.
enum class Normalization { kNone, kUnit, kCenter, kCenterUnit };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization n);
EmbeddingSpace apply_normalization(const EmbeddingSpace& space, Normalization n);

}  // namespace embalign
