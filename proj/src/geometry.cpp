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

#include "embalign/geometry.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace embalign {

GeometryReport geometry_report(const EmbeddingSpace& space) {
  if (space.empty()) throw std::invalid_argument("geometry report needs at least one word");
  const RowMatrix& v = space.vectors();
  const Eigen::VectorXd mu = centroid(space);
  const Eigen::VectorXd dots = v * mu;

  GeometryReport r;
  r.n_words = space.size();
  r.avg_inner_product_to_mean = dots.mean();
  r.mean_vector_norm = mu.norm();

  const double identity = mu.squaredNorm();
  const double tol = 1e-10 * std::max(1.0, std::abs(identity));
  if (std::abs(identity - r.avg_inner_product_to_mean) > tol) {
    throw std::logic_error("average inner product " + std::to_string(r.avg_inner_product_to_mean) +
                           " disagrees with squared mean norm " + std::to_string(identity));
  }

  const std::size_t n = space.size();
  for (std::size_t b = 0; b < 10; ++b) {
    const std::size_t lo = b * n / 10;
    const std::size_t hi = (b + 1) * n / 10;
    if (hi <= lo) continue;
    const double mean = dots.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)).mean();
    r.per_band.push_back({"d" + std::to_string(b + 1), lo, hi, mean});
  }
  return r;
}

GeometryAudit geometry_audit(const EmbeddingSpace& space) {
  GeometryAudit a;
  a.raw = geometry_report(space);
  a.normalized = geometry_report(unit_normalize(space));
  return a;
}

CentroidCosine centroid_cosine(const EmbeddingSpace& a, const EmbeddingSpace& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("centroid cosine of an empty space");
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  }
  const Eigen::VectorXd ca = centroid(a);
  const Eigen::VectorXd cb = centroid(b);
  const double na = ca.norm();
  const double nb = cb.norm();
  if (na < 1e-12 || nb < 1e-12) return {0.0, true};
  return {ca.dot(cb) / (na * nb), false};
}

namespace {

void text_block(std::ostream& out, const GeometryReport& r, const char* title) {
  out << "  " << title << ":\n"
      << "    average inner product to mean  " << r.avg_inner_product_to_mean << '\n'
      << "    mean vector norm               " << r.mean_vector_norm << '\n'
      << "    by frequency decile (rank range: mean inner product)\n";
  for (const auto& b : r.per_band) {
    out << "      " << std::setw(3) << b.label << " [" << b.first_rank << ", " << b.last_rank
        << "): " << b.mean_inner_product << '\n';
  }
}

void csv_block(std::ostream& out, const GeometryReport& r, const std::string& prefix) {
  out << prefix << "avg_inner_product_to_mean," << r.avg_inner_product_to_mean << '\n'
      << prefix << "mean_vector_norm," << r.mean_vector_norm << '\n';
  for (const auto& b : r.per_band) {
    out << prefix << "band_" << b.label << "_inner_product," << b.mean_inner_product << '\n';
  }
}

}  // namespace

void write_geometry_text(std::ostream& out, const GeometryAudit& audit, const std::string& name) {
  const auto old = out.precision(6);
  out << name << " (" << audit.raw.n_words << " words)\n";
  text_block(out, audit.raw, "raw vectors");
  text_block(out, audit.normalized, "unit-normalized vectors");
  out.precision(old);
}

void write_geometry_csv_rows(std::ostream& out, const GeometryAudit& audit, const std::string& prefix) {
  const auto old = out.precision(17);
  out << prefix << "n_words," << audit.raw.n_words << '\n';
  csv_block(out, audit.raw, prefix);
  csv_block(out, audit.normalized, prefix + "normalized_");
  out.precision(old);
}

}  // namespace embalign
