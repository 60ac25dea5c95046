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

#include <iosfwd>
#include <string>
#include <vector>

#include "embalign/embedding_store.hpp"

namespace embalign {

struct FrequencyBand {
  std::string label;       // "d1".."d10", most frequent first
  std::size_t first_rank;  // inclusive
  std::size_t last_rank;   // exclusive
  double mean_inner_product;
};

// Dispersion statistics: how strongly the vectors point along their mean.
struct GeometryReport {
  double avg_inner_product_to_mean = 0.0;  // (1/n) sum_i <v_i, mu>
  double mean_vector_norm = 0.0;           // ||mu||
  std::vector<FrequencyBand> per_band;     // rank deciles, empty bands omitted
  std::size_t n_words = 0;
};

// Throws std::logic_error if the average inner product disagrees with ||mu||^2
// by more than 1e-10 (relative for large values).
GeometryReport geometry_report(const EmbeddingSpace& space);

// Raw statistics plus the same statistics on a unit-normalized copy.
struct GeometryAudit {
  GeometryReport raw;
  GeometryReport normalized;
};

GeometryAudit geometry_audit(const EmbeddingSpace& space);

struct CentroidCosine {
  double value = 0.0;
  bool degenerate = false;  // a centroid had norm < 1e-12; value forced to 0
};

// Cosine between the two centroids. Throws std::invalid_argument on a
// dimension mismatch or an empty space.
CentroidCosine centroid_cosine(const EmbeddingSpace& a, const EmbeddingSpace& b);

void write_geometry_text(std::ostream& out, const GeometryAudit& audit, const std::string& name);
// "statistic,value" rows; prefix distinguishes several spaces in one file.
void write_geometry_csv_rows(std::ostream& out, const GeometryAudit& audit, const std::string& prefix);

}  // namespace embalign
