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

#include "embalign/gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace embalign {

// ---------------------------------------------------------------------------
// Discriminator

DiscriminatorParams DiscriminatorParams::zeros(std::size_t d, std::size_t h) {
  const auto dd = static_cast<Eigen::Index>(d);
  const auto hh = static_cast<Eigen::Index>(h);
  DiscriminatorParams p;
  p.w1 = Eigen::MatrixXd::Zero(hh, dd);
  p.b1 = Eigen::VectorXd::Zero(hh);
  p.w2 = Eigen::MatrixXd::Zero(hh, hh);
  p.b2 = Eigen::VectorXd::Zero(hh);
  p.w3 = Eigen::RowVectorXd::Zero(hh);
  p.b3 = 0.0;
  return p;
}

DiscriminatorParams DiscriminatorParams::random(std::size_t d, std::size_t h, Rng& rng) {
  auto p = zeros(d, h);
  auto fill = [&rng](auto& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
  };
  fill(p.w1, static_cast<double>(d));
  fill(p.b1, static_cast<double>(d));
  fill(p.w2, static_cast<double>(h));
  fill(p.b2, static_cast<double>(h));
  fill(p.w3, static_cast<double>(h));
  p.b3 = rng.uniform(-1.0, 1.0) / std::sqrt(static_cast<double>(h));
  return p;
}

void DiscriminatorParams::validate() const {
  const auto h = w1.rows();
  if (h == 0 || w1.cols() == 0) throw std::invalid_argument("discriminator: empty first layer");
  if (b1.size() != h || w2.rows() != h || w2.cols() != h || b2.size() != h || w3.size() != h) {
    throw std::invalid_argument("discriminator: inconsistent layer shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite() ||
      !w3.allFinite() || !std::isfinite(b3)) {
    throw std::invalid_argument("discriminator: non-finite parameter");
  }
}

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

namespace {

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
}

Eigen::MatrixXd leaky_derivative(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

DiscriminatorPass discriminator_forward_batch(const DiscriminatorParams& params, const Eigen::MatrixXd& x,
                                        const DiscriminatorSettings& settings, bool train_mode,
                                        Rng& rng) {
  if (static_cast<std::size_t>(x.rows()) != params.input_dim()) {
    throw std::invalid_argument("discriminator: input has dim " + std::to_string(x.rows()) +
                                ", expected " + std::to_string(params.input_dim()));
  }
  DiscriminatorPass pass;
  if (train_mode && settings.input_dropout > 0.0) {
    const double keep = 1.0 - settings.input_dropout;
    pass.dropout.resize(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        pass.dropout(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
    pass.input = x.cwiseProduct(pass.dropout);
  } else {
    pass.input = x;
  }
  pass.pre1 = params.w1 * pass.input;
  pass.pre1.colwise() += params.b1;
  pass.act1 = leaky(pass.pre1, settings.leaky_slope);
  pass.pre2 = params.w2 * pass.act1;
  pass.pre2.colwise() += params.b2;
  pass.act2 = leaky(pass.pre2, settings.leaky_slope);
  pass.logits = params.w3 * pass.act2;
  pass.logits.array() += params.b3;
  pass.probs = pass.logits.unaryExpr([](double v) { return sigmoid(v); });
  return pass;
}

double discriminator_forward(const DiscriminatorParams& params, const Eigen::VectorXd& x,
                             const DiscriminatorSettings& settings, bool train_mode, Rng& rng) {
  return discriminator_forward_batch(params, Eigen::MatrixXd(x), settings, train_mode, rng).probs(0);
}

DiscriminatorGrad discriminator_backward(const DiscriminatorParams& params,
                                         const DiscriminatorPass& pass,
                                         const Eigen::RowVectorXd& dlogits,
                                         const DiscriminatorSettings& settings) {
  DiscriminatorGrad g;
  g.w3 = dlogits * pass.act2.transpose();
  g.b3 = dlogits.sum();
  const Eigen::MatrixXd d_pre2 =
      (params.w3.transpose() * dlogits).cwiseProduct(leaky_derivative(pass.pre2, settings.leaky_slope));
  g.w2 = d_pre2 * pass.act1.transpose();
  g.b2 = d_pre2.rowwise().sum();
  const Eigen::MatrixXd d_pre1 =
      (params.w2.transpose() * d_pre2).cwiseProduct(leaky_derivative(pass.pre1, settings.leaky_slope));
  g.w1 = d_pre1 * pass.input.transpose();
  g.b1 = d_pre1.rowwise().sum();
  g.input = params.w1.transpose() * d_pre1;
  if (pass.dropout.size() > 0) g.input = g.input.cwiseProduct(pass.dropout);
  return g;
}

double binary_cross_entropy(const Eigen::RowVectorXd& probs, const Eigen::RowVectorXd& labels) {
  constexpr double kEps = 1e-12;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs(i), kEps, 1.0 - kEps);
    loss -= labels(i) * std::log(p) + (1.0 - labels(i)) * std::log(1.0 - p);
  }
  return loss / static_cast<double>(probs.size());
}

namespace {

struct LabeledBatch {
  Eigen::MatrixXd x;
  Eigen::RowVectorXd labels;
};

LabeledBatch discriminator_batch(const Eigen::MatrixXd& target_batch,
                                 const Eigen::MatrixXd& mapped_batch, double smoothing) {
  if (target_batch.rows() != mapped_batch.rows()) {
    throw std::invalid_argument("discriminator: target and mapped batches differ in dim");
  }
  LabeledBatch b;
  b.x.resize(target_batch.rows(), target_batch.cols() + mapped_batch.cols());
  b.x << target_batch, mapped_batch;
  b.labels.resize(b.x.cols());
  b.labels.head(target_batch.cols()).setConstant(1.0 - smoothing);
  b.labels.tail(mapped_batch.cols()).setConstant(smoothing);
  return b;
}

Rng& unused_rng() {
  static thread_local Rng rng(0);
  return rng;
}

}  // namespace

double discriminator_loss(const DiscriminatorParams& params, const Eigen::MatrixXd& target_batch,
                          const Eigen::MatrixXd& mapped_batch, double label_smoothing,
                          const DiscriminatorSettings& settings) {
  const auto b = discriminator_batch(target_batch, mapped_batch, label_smoothing);
  const auto pass = discriminator_forward_batch(params, b.x, settings, false, unused_rng());
  return binary_cross_entropy(pass.probs, b.labels);
}

DiscriminatorGrad discriminator_loss_grad(const DiscriminatorParams& params,
                                          const Eigen::MatrixXd& target_batch,
                                          const Eigen::MatrixXd& mapped_batch,
                                          double label_smoothing,
                                          const DiscriminatorSettings& settings) {
  const auto b = discriminator_batch(target_batch, mapped_batch, label_smoothing);
  const auto pass = discriminator_forward_batch(params, b.x, settings, false, unused_rng());
  const Eigen::RowVectorXd dlogits = (pass.probs - b.labels) / static_cast<double>(b.x.cols());
  return discriminator_backward(params, pass, dlogits, settings);
}

double generator_loss(const DiscriminatorParams& params, const Eigen::MatrixXd& omega,
                      const Eigen::MatrixXd& source_batch, double label_smoothing,
                      const DiscriminatorSettings& settings) {
  const auto pass = discriminator_forward_batch(params, omega * source_batch, settings, false, unused_rng());
  const Eigen::RowVectorXd labels = Eigen::RowVectorXd::Constant(source_batch.cols(), 1.0 - label_smoothing);
  return binary_cross_entropy(pass.probs, labels);
}

Eigen::MatrixXd generator_loss_grad(const DiscriminatorParams& params, const Eigen::MatrixXd& omega,
                                    const Eigen::MatrixXd& source_batch, double label_smoothing,
                                    const DiscriminatorSettings& settings) {
  const auto pass = discriminator_forward_batch(params, omega * source_batch, settings, false, unused_rng());
  const Eigen::RowVectorXd dlogits =
      (pass.probs.array() - (1.0 - label_smoothing)).matrix() / static_cast<double>(source_batch.cols());
  const auto g = discriminator_backward(params, pass, dlogits, settings);
  return g.input * source_batch.transpose();
}

double discriminator_update(DiscriminatorParams& params, const Eigen::MatrixXd& target_batch,
                            const Eigen::MatrixXd& mapped_batch, double label_smoothing,
                            double learning_rate, const DiscriminatorSettings& settings,
                            bool train_mode, Rng& rng) {
  const auto b = discriminator_batch(target_batch, mapped_batch, label_smoothing);
  const auto pass = discriminator_forward_batch(params, b.x, settings, train_mode, rng);
  const double loss = binary_cross_entropy(pass.probs, b.labels);
  const Eigen::RowVectorXd dlogits = (pass.probs - b.labels) / static_cast<double>(b.x.cols());
  const auto g = discriminator_backward(params, pass, dlogits, settings);
  params.w1.noalias() -= learning_rate * g.w1;
  params.b1.noalias() -= learning_rate * g.b1;
  params.w2.noalias() -= learning_rate * g.w2;
  params.b2.noalias() -= learning_rate * g.b2;
  params.w3.noalias() -= learning_rate * g.w3;
  params.b3 -= learning_rate * g.b3;
  return loss;
}

double generator_update(const DiscriminatorParams& params, Eigen::MatrixXd& omega,
                        const Eigen::MatrixXd& source_batch, double label_smoothing,
                        double learning_rate, const DiscriminatorSettings& settings,
                        bool train_mode, Rng& rng) {
  const Eigen::MatrixXd mapped = omega * source_batch;
  const auto pass = discriminator_forward_batch(params, mapped, settings, train_mode, rng);
  const Eigen::RowVectorXd labels = Eigen::RowVectorXd::Constant(source_batch.cols(), 1.0 - label_smoothing);
  const double loss = binary_cross_entropy(pass.probs, labels);
  const Eigen::RowVectorXd dlogits = (pass.probs - labels) / static_cast<double>(source_batch.cols());
  const auto g = discriminator_backward(params, pass, dlogits, settings);
  omega.noalias() -= learning_rate * (g.input * source_batch.transpose());
  return loss;
}

void orthogonalize_step(Eigen::MatrixXd& omega, double beta) {
  if (beta <= 0.0) return;
  const Eigen::MatrixXd gram_omega = (omega * omega.transpose()) * omega;
  omega = (1.0 + beta) * omega - beta * gram_omega;
}

// ---------------------------------------------------------------------------
// Training

void GanConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("gan: epochs must be >= 1");
  if (iterations_per_epoch < 1) throw std::invalid_argument("gan: iterations_per_epoch must be >= 1");
  if (dis_steps < 0) throw std::invalid_argument("gan: dis_steps must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("gan: batch_size must be >= 1");
  if (sample_pool < 1) throw std::invalid_argument("gan: sample_pool must be >= 1");
  if (hidden < 1) throw std::invalid_argument("gan: hidden must be >= 1");
  if (!(dis_learning_rate > 0.0) || !(gen_learning_rate > 0.0)) {
    throw std::invalid_argument("gan: learning rates must be positive");
  }
  if (!(lr_decay > 0.0)) throw std::invalid_argument("gan: lr_decay must be positive");
  if (label_smoothing < 0.0 || label_smoothing >= 0.5) {
    throw std::invalid_argument("gan: label_smoothing must be in [0, 0.5)");
  }
  if (input_dropout < 0.0 || input_dropout >= 1.0) {
    throw std::invalid_argument("gan: input_dropout must be in [0, 1)");
  }
  if (ortho_beta < 0.0) throw std::invalid_argument("gan: ortho_beta must be >= 0");
  if (eval_interval < 1) throw std::invalid_argument("gan: eval_interval must be >= 1");
  if (val_words < 1) throw std::invalid_argument("gan: val_words must be >= 1");
  if (csls_k < 1) throw std::invalid_argument("gan: csls_k must be >= 1");
}

namespace {

void reject_degenerate(const EmbeddingSpace& space, std::size_t pool, const char* side) {
  if (space.empty()) throw std::invalid_argument(std::string(side) + " space is empty");
  const auto n = static_cast<Eigen::Index>(std::min(pool, space.size()));
  const auto rows = space.vectors().topRows(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rows.row(i).squaredNorm() == 0.0) {
      throw std::invalid_argument(std::string(side) + " vector of '" +
                                  space.vocab().word(static_cast<std::size_t>(i)) + "' is zero");
    }
  }
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  if ((rows.rowwise() - mean).squaredNorm() == 0.0) {
    throw std::invalid_argument(std::string(side) + " space has zero variance");
  }
}

}  // namespace

GanTrainer::GanTrainer(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const GanConfig& config)
    : src_(src),
      tgt_(tgt),
      config_(config),
      rng_(derive_seed(config.seed, "gan")),
      dis_lr_(config.dis_learning_rate),
      gen_lr_(config.gen_learning_rate) {
  config_.validate();
  if (src.dim() != tgt.dim()) {
    throw std::invalid_argument("gan: dimension mismatch " + std::to_string(src.dim()) + " vs " +
                                std::to_string(tgt.dim()));
  }
  reject_degenerate(src, config.sample_pool, "source");
  reject_degenerate(tgt, config.sample_pool, "target");
  src_pool_ = std::min(config.sample_pool, src.size());
  tgt_pool_ = std::min(config.sample_pool, tgt.size());
  Rng init(derive_seed(config.seed, "discriminator-init"));
  params_ = DiscriminatorParams::random(src.dim(), config.hidden, init);
  const auto d = static_cast<Eigen::Index>(src.dim());
  omega_ = Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd GanTrainer::sample(const EmbeddingSpace& space, std::size_t pool) {
  Eigen::MatrixXd batch(static_cast<Eigen::Index>(space.dim()),
                        static_cast<Eigen::Index>(config_.batch_size));
  for (Eigen::Index c = 0; c < batch.cols(); ++c) {
    batch.col(c) = space.row(rng_.below(pool)).transpose();
  }
  return batch;
}

double GanTrainer::discriminator_step() {
  const Eigen::MatrixXd target = sample(tgt_, tgt_pool_);
  const Eigen::MatrixXd mapped = omega_ * sample(src_, src_pool_);
  return discriminator_update(params_, target, mapped, config_.label_smoothing, dis_lr_,
                              config_.settings(), true, rng_);
}

double GanTrainer::generator_step() {
  const Eigen::MatrixXd source = sample(src_, src_pool_);
  const double loss = generator_update(params_, omega_, source, config_.label_smoothing, gen_lr_,
                                       config_.settings(), true, rng_);
  orthogonalize_step(omega_, config_.ortho_beta);
  return loss;
}

double validation_metric(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                         const AlignmentMap& omega, std::size_t n_words, Scorer scorer, int csls_k,
                         std::size_t max_targets) {
  if (src.dim() != tgt.dim() || omega.dim() != src.dim()) {
    throw std::invalid_argument("validation_metric: dimension mismatch");
  }
  const auto nq = static_cast<Eigen::Index>(std::min(n_words, src.size()));
  const auto nt = static_cast<Eigen::Index>(max_targets == 0 ? tgt.size()
                                                             : std::min(max_targets, tgt.size()));
  if (nq == 0 || nt == 0) throw std::invalid_argument("validation_metric: empty space");
  const RowMatrix queries = normalized_rows(omega.map_rows(src.vectors().topRows(nq)));
  const RowMatrix keys = normalized_rows(tgt.vectors().topRows(nt));
  Neighbors nn;
  if (scorer == Scorer::kCsls) {
    const auto k = static_cast<std::size_t>(csls_k);
    const Eigen::VectorXd rq = mean_neighbor_similarity(queries, keys, k);
    const Eigen::VectorXd rk = mean_neighbor_similarity(keys, queries, k);
    nn = nearest_neighbors(queries, keys, 1, &rq, &rk);
  } else {
    nn = nearest_neighbors(queries, keys, 1);
  }
  double sum = 0.0;
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Eigen::Index t = nn.index[static_cast<std::size_t>(q)][0];
    sum += queries.row(q).dot(keys.row(t));
  }
  return sum / static_cast<double>(nq);
}

GanResult train_gan(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const GanConfig& config) {
  GanTrainer trainer(src, tgt, config);
  const auto d = src.dim();
  auto metric = [&](const Eigen::MatrixXd& omega) {
    return validation_metric(src, tgt, AlignmentMap{omega, false}, config.val_words,
                             config.val_scorer, config.csls_k, config.val_words);
  };

  GanResult result;
  result.best = AlignmentMap::identity(d);
  result.log.best_iteration = 0;
  result.log.best_metric = metric(trainer.omega());

  double dis_lr = config.dis_learning_rate;
  double gen_lr = config.gen_learning_rate;
  std::size_t iteration = 0;
  double dis_sum = 0.0, gen_sum = 0.0;
  std::size_t dis_n = 0, gen_n = 0;
  const std::size_t total = config.iterations_per_epoch * static_cast<std::size_t>(config.epochs);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    trainer.set_learning_rates(dis_lr, gen_lr);
    for (std::size_t it = 0; it < config.iterations_per_epoch; ++it) {
      for (int k = 0; k < config.dis_steps; ++k) {
        dis_sum += trainer.discriminator_step();
        ++dis_n;
      }
      gen_sum += trainer.generator_step();
      ++gen_n;
      ++iteration;
      if (iteration % config.eval_interval == 0 || iteration == total) {
        TrainingRecord rec;
        rec.iteration = iteration;
        rec.dis_loss = dis_n ? dis_sum / static_cast<double>(dis_n) : 0.0;
        rec.gen_loss = gen_sum / static_cast<double>(gen_n);
        rec.val_metric = metric(trainer.omega());
        const auto dd = static_cast<Eigen::Index>(d);
        rec.ortho_error = (trainer.omega() * trainer.omega().transpose() -
                           Eigen::MatrixXd::Identity(dd, dd)).norm();
        if (rec.val_metric > result.log.best_metric) {
          result.log.best_metric = rec.val_metric;
          result.log.best_iteration = iteration;
          result.best = AlignmentMap{trainer.omega(), false};
        }
        result.log.records.push_back(rec);
        dis_sum = gen_sum = 0.0;
        dis_n = gen_n = 0;
      }
    }
    dis_lr *= config.lr_decay;
    gen_lr *= config.lr_decay;
  }
  result.final = AlignmentMap{trainer.omega(), false};
  result.best.orthogonal = result.best.orthogonality_error() <= 1e-8 * static_cast<double>(d);
  result.final.orthogonal = result.final.orthogonality_error() <= 1e-8 * static_cast<double>(d);
  return result;
}

void write_training_log_csv(std::ostream& out, const TrainingLog& log) {
  const auto old = out.precision(17);
  out << "iteration,dis_loss,gen_loss,val_metric\n";
  for (const auto& r : log.records) {
    out << r.iteration << ',' << r.dis_loss << ',' << r.gen_loss << ',' << r.val_metric << '\n';
  }
  out.precision(old);
}

void save_training_log_csv(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_training_log_csv(out, log);
}

// ---------------------------------------------------------------------------
// Refinement

SeedDictionary induce_dictionary(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                 const AlignmentMap& omega, const RefineConfig& config) {
  const auto ns = static_cast<Eigen::Index>(std::min(config.pool, src.size()));
  const auto nt = static_cast<Eigen::Index>(std::min(config.pool, tgt.size()));
  const RowMatrix s = normalized_rows(omega.map_rows(src.vectors().topRows(ns)));
  const RowMatrix t = normalized_rows(tgt.vectors().topRows(nt));
  Neighbors fwd, bwd;
  if (config.scorer == Scorer::kCsls) {
    const auto k = static_cast<std::size_t>(config.csls_k);
    const Eigen::VectorXd rs = mean_neighbor_similarity(s, t, k);
    const Eigen::VectorXd rt = mean_neighbor_similarity(t, s, k);
    fwd = nearest_neighbors(s, t, 1, &rs, &rt);
    bwd = nearest_neighbors(t, s, 1, &rt, &rs);
  } else {
    fwd = nearest_neighbors(s, t, 1);
    bwd = nearest_neighbors(t, s, 1);
  }
  SeedDictionary dict;
  for (Eigen::Index i = 0; i < ns; ++i) {
    const Eigen::Index j = fwd.index[static_cast<std::size_t>(i)][0];
    if (bwd.index[static_cast<std::size_t>(j)][0] == i) {
      dict.pairs.emplace_back(src.vocab().word(static_cast<std::size_t>(i)),
                              tgt.vocab().word(static_cast<std::size_t>(j)));
    }
  }
  return dict;
}

RefineResult refine(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const AlignmentMap& omega,
                    const RefineConfig& config) {
  if (config.rounds < 0) throw std::invalid_argument("refine: rounds must be >= 0");
  RefineResult r;
  r.map = omega;
  SeedDictionary previous;
  for (int round = 0; round < config.rounds; ++round) {
    SeedDictionary dict = induce_dictionary(src, tgt, r.map, config);
    if (dict.empty()) {
      r.failed = true;
      r.dictionary_size = 0;
      return r;
    }
    if (round > 0 && dict.pairs == previous.pairs) {
      r.converged = true;
      break;
    }
    try {
      r.map = procrustes_solve(src, tgt, dict);
    } catch (const std::invalid_argument&) {
      r.failed = true;
      return r;
    }
    r.dictionary_size = dict.size();
    r.rounds_run = round + 1;
    previous = std::move(dict);
  }
  return r;
}

}  // namespace embalign
