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

#include "embalign/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace embalign {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary v;
  v.words_ = std::move(words);
  v.freq_.assign(v.words_.size(), 0);
  v.has_freq_ = false;
  v.build_index();
  return v;
}

Vocabulary Vocabulary::from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts) {
  std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.words_.reserve(counts.size());
  v.freq_.reserve(counts.size());
  for (auto& [w, c] : counts) {
    v.words_.push_back(std::move(w));
    v.freq_.push_back(c);
  }
  v.has_freq_ = true;
  v.build_index();
  return v;
}

void Vocabulary::build_index() {
  index_.clear();
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw std::invalid_argument("duplicate token '" + words_[i] + "' at position " +
                                  std::to_string(i));
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary Vocabulary::prefix(std::size_t n) const {
  n = std::min(n, words_.size());
  Vocabulary v;
  v.words_.assign(words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(n));
  v.freq_.assign(freq_.begin(), freq_.begin() + static_cast<std::ptrdiff_t>(n));
  v.has_freq_ = has_freq_;
  v.build_index();
  return v;
}

// ---------------------------------------------------------------------------
// EmbeddingSpace

EmbeddingSpace::EmbeddingSpace(Vocabulary vocab, RowMatrix vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (static_cast<std::size_t>(vectors_.rows()) != vocab_.size()) {
    throw std::invalid_argument("embedding space has " + std::to_string(vectors_.rows()) +
                                " rows for " + std::to_string(vocab_.size()) + " words");
  }
  if (!vectors_.allFinite()) {
    for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
      if (!vectors_.row(i).allFinite()) {
        throw std::invalid_argument("non-finite value in vector of '" +
                                    vocab_.word(static_cast<std::size_t>(i)) + "'");
      }
    }
  }
}

EmbeddingSpace EmbeddingSpace::prefix(std::size_t n) const {
  n = std::min(n, size());
  return EmbeddingSpace(vocab_.prefix(n), vectors_.topRows(static_cast<Eigen::Index>(n)));
}

void SeedDictionary::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& [s, t] : pairs) {
    if (!seen.insert(s).second) {
      throw std::invalid_argument("seed dictionary repeats source token '" + s + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// word2vec text format

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+'; accept it like strtod does.
    if (first != last && *first == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

EmbeddingSpace read_embeddings(std::istream& in, std::optional<std::size_t> limit) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header line", 1);
  const auto header = split_fields(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      dim == 0) {
    throw FormatError("malformed header '" + line + "' (expected \"vocab_size dim\")", 1);
  }
  const std::size_t rows = limit ? std::min(*limit, count) : count;

  std::vector<std::string> words;
  words.reserve(rows);
  RowMatrix vectors(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::unordered_map<std::string, std::size_t> first_seen;
  first_seen.reserve(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t lineno = r + 2;
    if (!std::getline(in, line)) {
      throw FormatError("file ends after " + std::to_string(r) + " rows; header promised " +
                            std::to_string(count),
                        lineno);
    }
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw FormatError("line " + std::to_string(lineno) + " has " +
                            std::to_string(fields.empty() ? 0 : fields.size() - 1) +
                            " values, expected " + std::to_string(dim),
                        lineno);
    }
    std::string token(fields[0]);
    if (auto [it, fresh] = first_seen.emplace(token, lineno); !fresh) {
      throw FormatError("duplicate token '" + token + "' on line " + std::to_string(lineno) +
                            " (first seen on line " + std::to_string(it->second) + ")",
                        lineno);
    }
    for (std::size_t c = 0; c < dim; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c + 1], v) || !std::isfinite(v)) {
        throw FormatError("bad value '" + std::string(fields[c + 1]) + "' for token '" + token +
                              "' on line " + std::to_string(lineno),
                          lineno);
      }
      vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    words.push_back(std::move(token));
  }
  if (!limit || *limit >= count) {
    // Anything but blank lines past the promised rows is an error.
    while (std::getline(in, line)) {
      if (!split_fields(line).empty()) {
        throw FormatError("more rows than the header's " + std::to_string(count),
                          count + 2);
      }
    }
  }
  return EmbeddingSpace(Vocabulary::from_words(std::move(words)), std::move(vectors));
}

EmbeddingSpace load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
  return read_embeddings(in, limit);
}

void write_embeddings(const EmbeddingSpace& space, std::ostream& out) {
  if (space.empty()) throw std::invalid_argument("refusing to write an empty embedding space");
  out << space.size() << ' ' << space.dim() << '\n';
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < space.size(); ++i) {
    line = space.vocab().word(i);
    for (std::size_t c = 0; c < space.dim(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof(buf),
                               space.vectors()(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(c)),
                               std::chars_format::general, 17);
      line.push_back(' ');
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path) {
  if (space.empty()) throw std::invalid_argument("refusing to write an empty embedding space");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_embeddings(space, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Transforms

EmbeddingSpace unit_normalize(const EmbeddingSpace& space) {
  RowMatrix v = space.vectors();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double n = v.row(i).norm();
    if (n == 0.0) {
      throw std::invalid_argument("cannot normalize zero vector of '" +
                                  space.vocab().word(static_cast<std::size_t>(i)) + "'");
    }
    v.row(i) /= n;
  }
  return EmbeddingSpace(space.vocab(), std::move(v));
}

Eigen::VectorXd centroid(const EmbeddingSpace& space) {
  if (space.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dim()));
  return space.vectors().colwise().mean().transpose();
}

EmbeddingSpace center(const EmbeddingSpace& space) {
  if (space.empty()) throw std::invalid_argument("cannot center an empty embedding space");
  RowMatrix v = space.vectors();
  const Eigen::RowVectorXd mean = v.colwise().mean();
  v.rowwise() -= mean;
  return EmbeddingSpace(space.vocab(), std::move(v));
}

std::vector<std::string> shared_vocabulary(const EmbeddingSpace& a, const EmbeddingSpace& b) {
  std::vector<std::string> out;
  for (const auto& w : a.vocab().words()) {
    if (b.vocab().contains(w)) out.push_back(w);
  }
  return out;
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::kNone;
  if (name == "unit") return Normalization::kUnit;
  if (name == "center") return Normalization::kCenter;
  if (name == "center+unit" || name == "center_unit") return Normalization::kCenterUnit;
  throw std::invalid_argument("unknown normalization '" + std::string(name) +
                              "' (none|unit|center|center+unit)");
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::kNone: return "none";
    case Normalization::kUnit: return "unit";
    case Normalization::kCenter: return "center";
    case Normalization::kCenterUnit: return "center+unit";
  }
  return "none";
}

EmbeddingSpace apply_normalization(const EmbeddingSpace& space, Normalization n) {
  switch (n) {
    case Normalization::kNone: return space;
    case Normalization::kUnit: return unit_normalize(space);
    case Normalization::kCenter: return center(space);
    case Normalization::kCenterUnit: return unit_normalize(center(space));
  }
  return space;
}

}  // namespace embalign
