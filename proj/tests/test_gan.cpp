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

#include <sstream>

#include "embalign/gan.hpp"
#include "oracles.hpp"

using namespace embalign;

namespace {

// Tensor-wise relative error ||a - n|| / max(||a||, ||n||, floor). The floor
// only matters for (near-)zero blocks, where central differences are pure
// rounding noise.
double rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-7});
  return (analytic - numeric).norm() / denom;
}

Eigen::MatrixXd as_matrix(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

struct Setup {
  DiscriminatorParams params;
  Eigen::MatrixXd target, source, omega;
  double smoothing;
  DiscriminatorSettings settings;
};

Setup random_setup(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = 3 + rng.below(5);
  const std::size_t h = 2 + rng.below(7);
  const std::size_t b = 1 + rng.below(6);
  Setup s;
  s.params = DiscriminatorParams::random(d, h, rng);
  // Non-trivial biases so every leaky-ReLU branch is exercised.
  for (Eigen::Index i = 0; i < s.params.b1.size(); ++i) s.params.b1(i) = rng.uniform(-0.5, 0.5);
  for (Eigen::Index i = 0; i < s.params.b2.size(); ++i) s.params.b2(i) = rng.uniform(-0.5, 0.5);
  s.params.b3 = rng.uniform(-0.5, 0.5);
  s.target = oracle::gaussian(d, b, seed * 3 + 1);
  s.source = oracle::gaussian(d, b, seed * 3 + 2);
  s.omega = oracle::random_orthogonal(d, seed * 3 + 3) + 0.1 * oracle::gaussian(d, d, seed * 7);
  s.smoothing = rng.uniform(0.0, 0.3);
  s.settings = {rng.uniform(0.05, 0.4), 0.0};
  return s;
}

EmbeddingSpace rows_space(const RowMatrix& m) {
  std::vector<std::string> words;
  for (Eigen::Index i = 0; i < m.rows(); ++i) words.push_back("w" + std::to_string(i));
  return EmbeddingSpace(Vocabulary::from_words(words), m);
}

EmbeddingSpace sphere_space(std::size_t n, std::size_t d, std::uint64_t seed) {
  return unit_normalize(rows_space(oracle::gaussian(n, d, seed)));
}

GanConfig small_config() {
  GanConfig c;
  c.epochs = 2;
  c.iterations_per_epoch = 150;
  c.hidden = 32;
  c.eval_interval = 50;
  c.val_words = 500;
  c.sample_pool = 1000;
  return c;
}

}  // namespace

TEST_CASE("zero discriminator outputs one half") {
  const auto p = DiscriminatorParams::zeros(4, 3);
  Rng rng(1);
  const Eigen::VectorXd x = oracle::gaussian(4, 1, 2).col(0);
  CHECK(discriminator_forward(p, x, {}, false, rng) == 0.5);
  CHECK(discriminator_forward(p, x, {}, true, rng) == 0.5);
  CHECK_THROWS_AS(discriminator_forward(p, Eigen::VectorXd::Zero(5), {}, false, rng), std::invalid_argument);
}

TEST_CASE("leaky relu") {
  CHECK(leaky_relu(-1.0, 0.2) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(leaky_relu(2.0, 0.2) == 2.0);
  CHECK(leaky_relu(0.0, 0.2) == 0.0);
}

TEST_CASE("cross-entropy limits") {
  Eigen::RowVectorXd half = Eigen::RowVectorXd::Constant(4, 0.5);
  Eigen::RowVectorXd labels(4);
  labels << 1, 1, 0, 0;
  CHECK(binary_cross_entropy(half, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Eigen::RowVectorXd perfect(4);
  perfect << 1 - 1e-15, 1 - 1e-15, 1e-15, 1e-15;
  CHECK(binary_cross_entropy(perfect, labels) < 1e-11);
  Eigen::RowVectorXd wrong(4);
  wrong << 0, 0, 1, 1;
  const double saturated = binary_cross_entropy(wrong, labels);
  CHECK(std::isfinite(saturated));
  // clamped at 1e-12 on one side and 1 - 1e-12 on the other
  const double expected = -0.5 * (std::log(1e-12) + std::log(1.0 - (1.0 - 1e-12)));
  CHECK(saturated == doctest::Approx(expected).epsilon(1e-12));

  const auto z = DiscriminatorParams::zeros(3, 2);
  const Eigen::MatrixXd t = oracle::gaussian(3, 5, 1), m = oracle::gaussian(3, 5, 2);
  CHECK(discriminator_loss(z, t, m, 0.0, {}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(discriminator_loss(z, t, m, 0.2, {}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("discriminator output gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = random_setup(seed);
    Rng rng(0);
    const Eigen::MatrixXd x = s.target.col(0);
    auto output = [&] { return discriminator_forward(s.params, Eigen::VectorXd(x.col(0)), s.settings, false, rng); };
    const auto pass = discriminator_forward_batch(s.params, x, s.settings, false, rng);
    const double p = pass.probs(0);
    const auto g = discriminator_backward(s.params, pass, Eigen::RowVectorXd::Constant(1, p * (1 - p)), s.settings);
    CHECK(rel_error(g.w1, oracle::numeric_gradient(output, s.params.w1)) <= 1e-5);
    CHECK(rel_error(g.b1, oracle::numeric_gradient(output, s.params.b1)) <= 1e-5);
    CHECK(rel_error(g.w2, oracle::numeric_gradient(output, s.params.w2)) <= 1e-5);
    CHECK(rel_error(g.b2, oracle::numeric_gradient(output, s.params.b2)) <= 1e-5);
    CHECK(rel_error(g.w3, oracle::numeric_gradient(output, s.params.w3)) <= 1e-5);
    Eigen::VectorXd b3(1);
    b3(0) = s.params.b3;
    auto output_b3 = [&] { s.params.b3 = b3(0); return output(); };
    CHECK(rel_error(as_matrix(g.b3), oracle::numeric_gradient(output_b3, b3)) <= 1e-5);
  }
}

TEST_CASE("discriminator loss gradient matches finite differences") {
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    auto s = random_setup(seed);
    Eigen::MatrixXd mapped = s.omega * s.source;
    auto loss = [&] { return discriminator_loss(s.params, s.target, mapped, s.smoothing, s.settings); };
    const auto g = discriminator_loss_grad(s.params, s.target, mapped, s.smoothing, s.settings);
    CHECK(rel_error(g.w1, oracle::numeric_gradient(loss, s.params.w1)) <= 1e-5);
    CHECK(rel_error(g.b1, oracle::numeric_gradient(loss, s.params.b1)) <= 1e-5);
    CHECK(rel_error(g.w2, oracle::numeric_gradient(loss, s.params.w2)) <= 1e-5);
    CHECK(rel_error(g.b2, oracle::numeric_gradient(loss, s.params.b2)) <= 1e-5);
    CHECK(rel_error(g.w3, oracle::numeric_gradient(loss, s.params.w3)) <= 1e-5);
    Eigen::VectorXd b3(1);
    b3(0) = s.params.b3;
    auto loss_b3 = [&] { s.params.b3 = b3(0); return loss(); };
    CHECK(rel_error(as_matrix(g.b3), oracle::numeric_gradient(loss_b3, b3)) <= 1e-5);
    // Input gradient: the mapped half of the batch.
    const Eigen::MatrixXd num_in = oracle::numeric_gradient(loss, mapped);
    const auto b = s.target.cols();
    CHECK(rel_error(g.input.rightCols(b), num_in) <= 1e-5);
  }
}

TEST_CASE("generator gradient matches finite differences") {
  for (std::uint64_t seed = 21; seed <= 30; ++seed) {
    auto s = random_setup(seed);
    auto loss = [&] { return generator_loss(s.params, s.omega, s.source, s.smoothing, s.settings); };
    const Eigen::MatrixXd g = generator_loss_grad(s.params, s.omega, s.source, s.smoothing, s.settings);
    CHECK(rel_error(g, oracle::numeric_gradient(loss, s.omega)) <= 1e-5);
  }
}

TEST_CASE("update steps descend on a fixed batch") {
  for (std::uint64_t seed = 31; seed <= 35; ++seed) {
    auto s = random_setup(seed);
    Rng rng(1);
    const Eigen::MatrixXd mapped = s.omega * s.source;
    const double before = discriminator_loss(s.params, s.target, mapped, s.smoothing, s.settings);
    const double reported = discriminator_update(s.params, s.target, mapped, s.smoothing, 1e-3, s.settings, false, rng);
    CHECK(reported == doctest::Approx(before).epsilon(1e-14));
    CHECK(discriminator_loss(s.params, s.target, mapped, s.smoothing, s.settings) < before);

    const double g_before = generator_loss(s.params, s.omega, s.source, s.smoothing, s.settings);
    const Eigen::MatrixXd params_w1 = s.params.w1;
    generator_update(s.params, s.omega, s.source, s.smoothing, 1e-3, s.settings, false, rng);
    CHECK(generator_loss(s.params, s.omega, s.source, s.smoothing, s.settings) < g_before);
    CHECK(s.params.w1 == params_w1);
  }
}

TEST_CASE("dropout only in train mode, inverted scaling") {
  Rng init(3);
  const auto p = DiscriminatorParams::random(50, 8, init);
  const Eigen::MatrixXd x = oracle::gaussian(50, 400, 4);
  Rng rng(5);
  const auto eval = discriminator_forward_batch(p, x, {0.2, 0.5}, false, rng);
  CHECK(eval.input == x);
  const auto train = discriminator_forward_batch(p, x, {0.2, 0.5}, true, rng);
  const double kept = (train.dropout.array() != 0.0).cast<double>().mean();
  CHECK(kept == doctest::Approx(0.5).epsilon(0.05));
  CHECK(train.dropout.maxCoeff() == doctest::Approx(2.0));
}

TEST_CASE("orthogonality update") {
  Eigen::MatrixXd q = oracle::random_orthogonal(10, 1);
  const Eigen::MatrixXd q0 = q;
  orthogonalize_step(q, 0.01);
  CHECK((q - q0).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd w = q0 + 1e-7 * oracle::gaussian(10, 10, 2);
  const auto err = [&] { return (w * w.transpose() - Eigen::MatrixXd::Identity(10, 10)).norm(); };
  double prev = err();
  for (int i = 0; i < 100; ++i) {
    orthogonalize_step(w, 0.01);
    CHECK(err() <= prev);
    prev = err();
  }
  CHECK(prev < 1e-6);

  Eigen::MatrixXd off = q0 + 0.05 * oracle::gaussian(10, 10, 3);
  const Eigen::MatrixXd keep = off;
  orthogonalize_step(off, 0.0);
  CHECK(off == keep);
}

TEST_CASE("config validation") {
  GanConfig c;
  CHECK_NOTHROW(c.validate());
  c.label_smoothing = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.input_dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.gen_learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.ortho_beta = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("trainer rejects degenerate input") {
  const auto good = sphere_space(50, 4, 1);
  RowMatrix zero_row = good.vectors();
  zero_row.row(3).setZero();
  CHECK_THROWS_AS(GanTrainer(rows_space(zero_row), good, small_config()), std::invalid_argument);
  RowMatrix constant = RowMatrix::Ones(50, 4);
  CHECK_THROWS_AS(GanTrainer(rows_space(constant), good, small_config()), std::invalid_argument);
  CHECK_THROWS_AS(train_gan(good, sphere_space(50, 5, 2), small_config()), std::invalid_argument);
}

TEST_CASE("self alignment survives training and the log is sane") {
  const auto s = sphere_space(2000, 20, 7);
  const auto result = train_gan(s, s, small_config());
  const auto lex = identity_lexicon(s.vocab().words());
  CHECK(precision_at_k(s, s, result.best, lex, 1).precision >= 0.99);
  CHECK(precision_at_k(s, s, result.final, lex, 1).precision >= 0.95);
  REQUIRE(result.log.records.size() == 6);
  for (std::size_t i = 0; i < result.log.records.size(); ++i) {
    const auto& r = result.log.records[i];
    if (i) CHECK(r.iteration > result.log.records[i - 1].iteration);
    CHECK(std::isfinite(r.dis_loss));
    CHECK(std::isfinite(r.gen_loss));
    CHECK(r.ortho_error <= 0.1);
  }
  std::ostringstream csv;
  write_training_log_csv(csv, result.log);
  const std::string text = csv.str();
  CHECK(text.rfind("iteration,dis_loss,gen_loss,val_metric\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}

TEST_CASE("training is bit-reproducible") {
  const auto a = sphere_space(800, 10, 8);
  const auto b = sphere_space(800, 10, 9);
  auto cfg = small_config();
  cfg.iterations_per_epoch = 60;
  cfg.eval_interval = 20;
  const auto r1 = train_gan(a, b, cfg);
  const auto r2 = train_gan(a, b, cfg);
  CHECK(r1.final.matrix == r2.final.matrix);
  REQUIRE(r1.log.records.size() == r2.log.records.size());
  for (std::size_t i = 0; i < r1.log.records.size(); ++i) {
    CHECK(r1.log.records[i].dis_loss == r2.log.records[i].dis_loss);
    CHECK(r1.log.records[i].val_metric == r2.log.records[i].val_metric);
  }
  cfg.seed = 2;
  CHECK(train_gan(a, b, cfg).final.matrix != r1.final.matrix);
}

TEST_CASE("validation metric") {
  const auto s = sphere_space(300, 12, 10);
  CHECK(std::abs(validation_metric(s, s, AlignmentMap::identity(12), 300, Scorer::kCosine) - 1.0) <= 1e-10);

  // Orthonormal targets, randomly mapped queries: the best cosine of a random
  // direction against an orthonormal basis shrinks like sqrt(2 ln d / d).
  const std::size_t d = 2500;
  const RowMatrix basis = RowMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const auto tgt = rows_space(basis);
  const auto src = rows_space(basis.topRows(20));
  const AlignmentMap random{oracle::gaussian(d, d, 11), false};
  CHECK(std::abs(validation_metric(src, tgt, random, 20, Scorer::kCosine)) <= 0.1);

  const auto raw = rows_space(oracle::gaussian(300, 12, 12));
  const auto src2 = rows_space(oracle::gaussian(300, 12, 13));
  const AlignmentMap q{oracle::random_orthogonal(12, 14), true};
  CHECK(validation_metric(src2, raw, q, 100, Scorer::kCosine) ==
        doctest::Approx(validation_metric(src2, unit_normalize(raw), q, 100, Scorer::kCosine)).epsilon(1e-12));
}

TEST_CASE("refinement from the exact map is a fixed point") {
  const auto src = sphere_space(3000, 20, 15);
  const Eigen::MatrixXd q = oracle::random_orthogonal(20, 16);
  const auto tgt = rows_space(RowMatrix(src.vectors() * q.transpose()));
  const auto recovered = procrustes_solve(src.vectors(), tgt.vectors());
  RefineConfig rc;
  rc.rounds = 3;
  rc.pool = 3000;
  const auto dict = induce_dictionary(src, tgt, recovered, rc);
  CHECK(dict.size() == 3000);
  for (const auto& [a, b] : dict.pairs) CHECK(a == b);
  const auto r = refine(src, tgt, recovered, rc);
  CHECK_FALSE(r.failed);
  CHECK(r.converged);
  CHECK((r.map.matrix - recovered.matrix).norm() <= 1e-6);
  CHECK((r.map.matrix - q).norm() <= 1e-6);

  rc.rounds = 0;
  const auto none = refine(src, tgt, recovered, rc);
  CHECK(none.rounds_run == 0);
  CHECK(none.map.matrix == recovered.matrix);
}

TEST_CASE("refinement from a random map finds little") {
  const auto src = sphere_space(2000, 30, 17);
  const auto tgt = sphere_space(2000, 30, 18);
  RefineConfig rc;
  rc.pool = 2000;
  const auto r = refine(src, tgt, AlignmentMap::identity(30), rc);
  const auto lex = identity_lexicon(src.vocab().words());
  CHECK(precision_at_k(src, tgt, r.map, lex, 1).precision < 0.05);
}
