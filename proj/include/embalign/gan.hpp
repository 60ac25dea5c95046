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
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "embalign/embedding_store.hpp"
#include "embalign/procrustes.hpp"
#include "embalign/random.hpp"
#include "embalign/retrieval.hpp"

namespace embalign {

// Weights of the two-hidden-layer discriminator
//   D(x) = s(w3 . f(W2 f(W1 x + b1) + b2) + b3),  f = leaky ReLU.
struct DiscriminatorParams {
  Eigen::MatrixXd w1;     // h x d
  Eigen::VectorXd b1;     // h
  Eigen::MatrixXd w2;     // h x h
  Eigen::VectorXd b2;     // h
  Eigen::RowVectorXd w3;  // 1 x h
  double b3 = 0.0;

  static DiscriminatorParams zeros(std::size_t d, std::size_t h);
  // Each layer uniform in +-1/sqrt(fan_in).
  static DiscriminatorParams random(std::size_t d, std::size_t h, Rng& rng);

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  // Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;
};

struct DiscriminatorSettings {
  double leaky_slope = 0.2;
  double input_dropout = 0.1;  // only applied in train mode
};

double leaky_relu(double x, double slope);

// Activations of one forward pass over a batch of column vectors.
struct DiscriminatorPass {
  Eigen::MatrixXd input;       // d x B, after dropout
  Eigen::MatrixXd dropout;     // d x B multiplier (empty when no dropout was applied)
  Eigen::MatrixXd pre1, act1;  // h x B
  Eigen::MatrixXd pre2, act2;  // h x B
  Eigen::RowVectorXd logits;   // 1 x B
  Eigen::RowVectorXd probs;    // 1 x B
};

// Gradients with the same layout as DiscriminatorParams plus the input batch.
struct DiscriminatorGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;
  double b3 = 0.0;
  Eigen::MatrixXd input;  // d x B, gradient w.r.t. the pre-dropout input
};

DiscriminatorPass discriminator_forward_batch(const DiscriminatorParams& params, const Eigen::MatrixXd& x,
                                        const DiscriminatorSettings& settings, bool train_mode,
                                        Rng& rng);

// Probability that x is a target-space vector.
double discriminator_forward(const DiscriminatorParams& params, const Eigen::VectorXd& x,
                             const DiscriminatorSettings& settings, bool train_mode, Rng& rng);

// Backpropagates d(loss)/d(logit) for every batch column.
DiscriminatorGrad discriminator_backward(const DiscriminatorParams& params,
                                         const DiscriminatorPass& pass,
                                         const Eigen::RowVectorXd& dlogits,
                                         const DiscriminatorSettings& settings);

// Mean binary cross-entropy; probabilities clamped to [1e-12, 1 - 1e-12].
double binary_cross_entropy(const Eigen::RowVectorXd& probs, const Eigen::RowVectorXd& labels);

// Deterministic (dropout-free) losses, the functions the gradient checks
// differentiate.
double discriminator_loss(const DiscriminatorParams& params, const Eigen::MatrixXd& target_batch,
                          const Eigen::MatrixXd& mapped_batch, double label_smoothing,
                          const DiscriminatorSettings& settings);
double generator_loss(const DiscriminatorParams& params, const Eigen::MatrixXd& omega,
                      const Eigen::MatrixXd& source_batch, double label_smoothing,
                      const DiscriminatorSettings& settings);

// Analytic gradients of the two losses above.
DiscriminatorGrad discriminator_loss_grad(const DiscriminatorParams& params,
                                          const Eigen::MatrixXd& target_batch,
                                          const Eigen::MatrixXd& mapped_batch,
                                          double label_smoothing,
                                          const DiscriminatorSettings& settings);
Eigen::MatrixXd generator_loss_grad(const DiscriminatorParams& params, const Eigen::MatrixXd& omega,
                                    const Eigen::MatrixXd& source_batch, double label_smoothing,
                                    const DiscriminatorSettings& settings);

// One SGD step on the discriminator for fixed batches (columns). Target
// columns get label 1 - s, mapped source columns label s. Returns the batch
// loss before the update.
double discriminator_update(DiscriminatorParams& params, const Eigen::MatrixXd& target_batch,
                            const Eigen::MatrixXd& mapped_batch, double label_smoothing,
                            double learning_rate, const DiscriminatorSettings& settings,
                            bool train_mode, Rng& rng);

// One SGD step on omega making D call omega*z a target vector (label 1 - s).
// The discriminator is not modified. Returns the loss before the update.
double generator_update(const DiscriminatorParams& params, Eigen::MatrixXd& omega,
                        const Eigen::MatrixXd& source_batch, double label_smoothing,
                        double learning_rate, const DiscriminatorSettings& settings,
                        bool train_mode, Rng& rng);

// omega <- (1 + beta) omega - beta (omega omega^T) omega
void orthogonalize_step(Eigen::MatrixXd& omega, double beta);

struct GanConfig {
  int epochs = 5;
  std::size_t iterations_per_epoch = 10000;
  int dis_steps = 5;
  std::size_t batch_size = 32;
  std::size_t sample_pool = 75000;
  std::size_t hidden = 2048;
  double dis_learning_rate = 0.1;
  double gen_learning_rate = 0.1;
  double lr_decay = 0.95;
  double label_smoothing = 0.2;
  double input_dropout = 0.1;
  double leaky_slope = 0.2;
  double ortho_beta = 0.01;
  std::size_t eval_interval = 500;
  std::size_t val_words = 10000;  // most frequent source words scored by the metric
  Scorer val_scorer = Scorer::kCsls;
  int csls_k = 10;
  std::uint64_t seed = 1;

  DiscriminatorSettings settings() const { return {leaky_slope, input_dropout}; }
  void validate() const;
};

struct TrainingRecord {
  std::size_t iteration = 0;
  double dis_loss = 0.0;  // mean over the iterations since the previous record
  double gen_loss = 0.0;
  double val_metric = 0.0;
  double ortho_error = 0.0;  // ||omega omega^T - I||_F
};

struct TrainingLog {
  std::vector<TrainingRecord> records;
  std::size_t best_iteration = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
};

void write_training_log_csv(std::ostream& out, const TrainingLog& log);
void save_training_log_csv(const TrainingLog& log, const std::filesystem::path& path);

// Adversarial trainer state: the game between omega and the discriminator.
class GanTrainer {
 public:
  GanTrainer(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const GanConfig& config);

  double discriminator_step();
  double generator_step();

  const Eigen::MatrixXd& omega() const { return omega_; }
  const DiscriminatorParams& discriminator() const { return params_; }
  void set_learning_rates(double dis, double gen) { dis_lr_ = dis; gen_lr_ = gen; }

 private:
  Eigen::MatrixXd sample(const EmbeddingSpace& space, std::size_t pool);

  const EmbeddingSpace& src_;
  const EmbeddingSpace& tgt_;
  GanConfig config_;
  Rng rng_;
  DiscriminatorParams params_;
  Eigen::MatrixXd omega_;
  double dis_lr_;
  double gen_lr_;
  std::size_t src_pool_;
  std::size_t tgt_pool_;
};

struct GanResult {
  AlignmentMap best;   // snapshot with the highest validation metric
  AlignmentMap final;  // omega after the last iteration
  TrainingLog log;
};

// Omega starts at the identity. Each iteration runs dis_steps discriminator
// steps then one generator step; every eval_interval iterations the
// validation metric is logged and the best omega kept.
GanResult train_gan(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const GanConfig& config);

// Mean similarity between each of the n_words most frequent mapped source
// words and its nearest target word. With CSLS the neighbor is chosen by CSLS
// and its cosine averaged. Targets are limited to the first max_targets rows
// (0 = all).
double validation_metric(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                         const AlignmentMap& omega, std::size_t n_words,
                         Scorer scorer = Scorer::kCosine, int csls_k = 10,
                         std::size_t max_targets = 0);

struct RefineConfig {
  int rounds = 5;
  std::size_t pool = 15000;  // most frequent words considered on each side
  Scorer scorer = Scorer::kCsls;
  int csls_k = 10;
};

struct RefineResult {
  AlignmentMap map;
  bool failed = false;  // no mutual nearest neighbors; map is the input
  std::size_t dictionary_size = 0;
  int rounds_run = 0;
  bool converged = false;  // the induced dictionary stopped changing
};

// Mutual-nearest-neighbor dictionary between mapped source and target pools.
SeedDictionary induce_dictionary(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                 const AlignmentMap& omega, const RefineConfig& config);

// Alternates dictionary induction and Procrustes.
RefineResult refine(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const AlignmentMap& omega,
                    const RefineConfig& config);

}  // namespace embalign
