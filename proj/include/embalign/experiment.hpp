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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embalign/config.hpp"
#include "embalign/corpus.hpp"
#include "embalign/embedding_store.hpp"
#include "embalign/gan.hpp"
#include "embalign/retrieval.hpp"

namespace embalign {

std::string toolkit_version();

// Where a side's embeddings come from: trained in-process from the plan's
// corpus, or read from word2vec text files (one per split).
struct AlgorithmSpec {
  std::string name;  // "sgns", "ppmi-svd", or any label for external files
  bool external = false;
  std::filesystem::path split_a;  // external only
  std::filesystem::path split_b;  // external only, optional
};

enum class SplitStrategy {
  kHalves,       // contiguous disjoint halves of the document list
  kRandomHalves, // documents shuffled with the plan seed, then halved
  kSame,         // both sides see the whole corpus
};

enum class AlignMethod { kGan, kGanRefine, kSupervised };

SplitStrategy parse_split(std::string_view s);
std::string_view to_string(SplitStrategy s);
AlignMethod parse_method(std::string_view s);
std::string_view to_string(AlignMethod m);

struct PpmiSvdConfig {
  int dim = 100;
  int window = 2;
  double eig_exponent = 0.5;
  std::uint64_t min_count = 100;
  std::size_t max_vocab = 5000;
};

struct ExperimentPlan {
  std::filesystem::path corpus;  // raw text, one document per line
  std::vector<AlgorithmSpec> algorithms;
  SplitStrategy split = SplitStrategy::kHalves;
  std::vector<double> sample_fractions;  // learning curve only
  Normalization source_norm = Normalization::kNone;
  Normalization target_norm = Normalization::kNone;
  AlignMethod method = AlignMethod::kGanRefine;
  // With an unsupervised method, also run supervised Procrustes on every
  // cross-algorithm pair (the lower block of the results table).
  bool supervised_control = true;

  std::filesystem::path lexicon;  // optional; default identity lexicon
  std::size_t eval_words = 1500;  // identity lexicon size (most frequent shared)
  std::vector<std::size_t> eval_k = {1, 10};
  Scorer eval_scorer = Scorer::kCsls;
  std::size_t seed_dictionary_size = 5000;
  // min_count for a learning-curve sample is max(min_count_floor, min_count * fraction).
  bool scale_min_count = true;
  std::uint64_t min_count_floor = 5;

  SgnsConfig sgns;
  PpmiSvdConfig ppmi;
  GanConfig gan;
  RefineConfig refine;

  std::filesystem::path output_dir;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on an inconsistent plan.
  void validate() const;
  // key=value lines that reproduce the plan.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Reads a plan from config (keys as in echo(), optional "plan." prefix).
ExperimentPlan plan_from_config(const Config& config, ExperimentPlan defaults = {});

struct RunRecord {
  std::string cell;  // directory name
  std::string block; // "unsupervised" or "supervised"
  std::string source_algorithm, target_algorithm;
  std::string source_split, target_split;
  std::string method;
  std::vector<std::pair<std::string, std::string>> plan_echo;
  std::map<std::string, double> timings_seconds;
  std::map<std::size_t, double> precision;  // k -> P@k
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;
  std::size_t dictionary_size = 0;  // seed or induced dictionary
  bool refine_failed = false;
  std::string status = "ok";  // or the error message of a failed cell
  std::map<std::string, std::filesystem::path> paths;
  std::string version;
  std::optional<TrainingLog> log;
};

void write_run_record(const RunRecord& record, const std::filesystem::path& path);
// Parses the key=value file written by write_run_record back into a Config.
Config read_run_record(const std::filesystem::path& path);

// Trains one side's embeddings on corpus, or loads split_a / split_b (split
// 0 or 1) for an external algorithm. Training seed: derive_seed(plan.seed,
// "train/<name>/<split label>").
EmbeddingSpace build_embeddings(const AlgorithmSpec& algo, const TokenizedCorpus& corpus,
                                int split, const std::string& split_label,
                                const ExperimentPlan& plan, std::uint64_t min_count);

// Splits documents according to the strategy; kSame returns the corpus twice.
std::pair<TokenizedCorpus, TokenizedCorpus> split_corpus(const TokenizedCorpus& corpus,
                                                         SplitStrategy strategy, std::uint64_t seed);

// Aligns src to tgt with one method and scores it. Used by the grid and the
// learning curve; exposed for direct use.
RunRecord run_cell(const std::string& cell, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                   AlignMethod method, const ExperimentPlan& plan, const EvalLexicon& lexicon,
                   const std::filesystem::path& cell_dir);

// Same-algorithm cells (split a vs split b), cross-algorithm cells (split a
// vs split a) and, with supervised_control, supervised cross-algorithm
// cells. Writes <output>/results.csv, results_table.txt, and one directory
// per cell. Cell failures are recorded and the grid continues.
std::vector<RunRecord> run_grid(const ExperimentPlan& plan);

struct CurvePoint {
  double fraction = 0.0;
  std::uint64_t tokens = 0;  // tokens in the source-side sample
  std::optional<double> p_at_1;
  std::size_t n_evaluated = 0;
};

// One same-algorithm alignment per sample fraction, all scored on the words
// present in every sample's vocabulary. Writes <output>/learning_curve.csv.
std::vector<CurvePoint> run_learning_curve(const ExperimentPlan& plan);

// One CSV per log plus loss_curves.csv in long format
// (run_id,iteration,dis_loss,gen_loss,val_metric).
void export_loss_curves(const std::vector<std::pair<std::string, TrainingLog>>& logs,
                        const std::filesystem::path& dir);

// Parses a training log CSV written by save_training_log_csv.
TrainingLog load_training_log_csv(const std::filesystem::path& path);

// Default output root: $EMBALIGN_OUTPUT_ROOT or ./embalign-out.
std::filesystem::path default_output_root();

}  // namespace embalign
