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

#include "embalign/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "embalign/procrustes.hpp"
#include "embalign/random.hpp"

#ifndef EMBALIGN_VERSION
#define EMBALIGN_VERSION "unknown"
#endif

namespace embalign {

namespace fs = std::filesystem;

std::string toolkit_version() { return std::string("embalign ") + EMBALIGN_VERSION; }

namespace {

// Shortest round-trip text, so CSVs are stable and lossless.
std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

std::string_view bool_text(bool b) { return b ? "true" : "false"; }

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Binding {
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

template <class T>
Binding bind_uint(std::string key, T& field) {
  return {key, [&field] { return std::to_string(field); },
          [&field, key](std::string_view v) { field = static_cast<T>(parse_uint(v, key)); }};
}

template <class T>
Binding bind_int(std::string key, T& field) {
  return {key, [&field] { return std::to_string(field); },
          [&field, key](std::string_view v) { field = static_cast<T>(parse_int(v, key)); }};
}

Binding bind_double(std::string key, double& field) {
  return {key, [&field] { return fmt(field); },
          [&field, key](std::string_view v) { field = parse_double(v, key); }};
}

Binding bind_bool(std::string key, bool& field) {
  return {key, [&field] { return std::string(bool_text(field)); },
          [&field, key](std::string_view v) { field = parse_bool(v, key); }};
}

Binding bind_scorer(std::string key, Scorer& field) {
  return {key, [&field] { return std::string(to_string(field)); },
          [&field](std::string_view v) { field = parse_scorer(v); }};
}

Binding bind_norm(std::string key, Normalization& field) {
  return {key, [&field] { return std::string(to_string(field)); },
          [&field](std::string_view v) { field = parse_normalization(v); }};
}

Binding bind_path(std::string key, fs::path& field) {
  return {key, [&field] { return field.string(); },
          [&field](std::string_view v) { field = fs::path(std::string(v)); }};
}

std::vector<Binding> bindings(ExperimentPlan& p) {
  std::vector<Binding> b;
  b.push_back(bind_path("corpus", p.corpus));
  b.push_back({"algorithms",
               [&p] {
                 std::string out;
                 for (std::size_t i = 0; i < p.algorithms.size(); ++i) {
                   if (i) out += ',';
                   out += p.algorithms[i].name;
                 }
                 return out;
               },
               [&p](std::string_view v) {
                 p.algorithms.clear();
                 for (auto& name : split_list(v)) p.algorithms.push_back({name, false, {}, {}});
               }});
  b.push_back({"split", [&p] { return std::string(to_string(p.split)); },
               [&p](std::string_view v) { p.split = parse_split(v); }});
  b.push_back({"sample_fractions", [&p] { return join(p.sample_fractions); },
               [&p](std::string_view v) {
                 p.sample_fractions.clear();
                 for (auto& x : split_list(v)) p.sample_fractions.push_back(parse_double(x, "sample_fractions"));
               }});
  b.push_back(bind_norm("source_norm", p.source_norm));
  b.push_back(bind_norm("target_norm", p.target_norm));
  b.push_back({"method", [&p] { return std::string(to_string(p.method)); },
               [&p](std::string_view v) { p.method = parse_method(v); }});
  b.push_back(bind_bool("supervised_control", p.supervised_control));
  b.push_back(bind_path("lexicon", p.lexicon));
  b.push_back(bind_uint("eval_words", p.eval_words));
  b.push_back({"eval_k", [&p] { return join(p.eval_k); },
               [&p](std::string_view v) {
                 p.eval_k.clear();
                 for (auto& x : split_list(v)) p.eval_k.push_back(parse_uint(x, "eval_k"));
               }});
  b.push_back(bind_scorer("eval_scorer", p.eval_scorer));
  b.push_back(bind_uint("seed_dictionary_size", p.seed_dictionary_size));
  b.push_back(bind_bool("scale_min_count", p.scale_min_count));
  b.push_back(bind_uint("min_count_floor", p.min_count_floor));
  b.push_back(bind_path("output_dir", p.output_dir));
  b.push_back(bind_uint("seed", p.seed));

  auto& s = p.sgns;
  b.push_back(bind_int("sgns.dim", s.dim));
  b.push_back(bind_int("sgns.window", s.window));
  b.push_back(bind_int("sgns.negatives", s.negatives));
  b.push_back(bind_int("sgns.epochs", s.epochs));
  b.push_back(bind_double("sgns.learning_rate", s.learning_rate));
  b.push_back(bind_double("sgns.min_learning_rate", s.min_learning_rate));
  b.push_back(bind_double("sgns.subsample", s.subsample_threshold));
  b.push_back(bind_double("sgns.context_smoothing", s.context_smoothing));
  b.push_back(bind_bool("sgns.dynamic_window", s.dynamic_window));
  b.push_back(bind_uint("sgns.min_count", s.min_count));
  b.push_back(bind_uint("sgns.max_vocab", s.max_vocab));

  auto& q = p.ppmi;
  b.push_back(bind_int("ppmi.dim", q.dim));
  b.push_back(bind_int("ppmi.window", q.window));
  b.push_back(bind_double("ppmi.eig_exponent", q.eig_exponent));
  b.push_back(bind_uint("ppmi.min_count", q.min_count));
  b.push_back(bind_uint("ppmi.max_vocab", q.max_vocab));

  auto& g = p.gan;
  b.push_back(bind_int("gan.epochs", g.epochs));
  b.push_back(bind_uint("gan.iterations_per_epoch", g.iterations_per_epoch));
  b.push_back(bind_int("gan.dis_steps", g.dis_steps));
  b.push_back(bind_uint("gan.batch_size", g.batch_size));
  b.push_back(bind_uint("gan.sample_pool", g.sample_pool));
  b.push_back(bind_uint("gan.hidden", g.hidden));
  b.push_back(bind_double("gan.dis_learning_rate", g.dis_learning_rate));
  b.push_back(bind_double("gan.gen_learning_rate", g.gen_learning_rate));
  b.push_back(bind_double("gan.lr_decay", g.lr_decay));
  b.push_back(bind_double("gan.label_smoothing", g.label_smoothing));
  b.push_back(bind_double("gan.input_dropout", g.input_dropout));
  b.push_back(bind_double("gan.leaky_slope", g.leaky_slope));
  b.push_back(bind_double("gan.ortho_beta", g.ortho_beta));
  b.push_back(bind_uint("gan.eval_interval", g.eval_interval));
  b.push_back(bind_uint("gan.val_words", g.val_words));
  b.push_back(bind_scorer("gan.val_scorer", g.val_scorer));
  b.push_back(bind_int("gan.csls_k", g.csls_k));

  auto& r = p.refine;
  b.push_back(bind_int("refine.rounds", r.rounds));
  b.push_back(bind_uint("refine.pool", r.pool));
  b.push_back(bind_scorer("refine.scorer", r.scorer));
  b.push_back(bind_int("refine.csls_k", r.csls_k));
  return b;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

void link_or_copy(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::remove(to, ec);
  fs::create_hard_link(from, to, ec);
  if (ec) fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

const std::string& split_name(int split) {
  static const std::string names[2] = {"a", "b"};
  return names[split];
}

struct SideKey {
  std::string algorithm;
  int split;
  bool operator<(const SideKey& o) const {
    return std::tie(algorithm, split) < std::tie(o.algorithm, o.split);
  }
};

// Trains (or loads) and saves every side a grid needs, once.
struct SideCache {
  std::map<SideKey, EmbeddingSpace> spaces;
  std::map<SideKey, fs::path> files;
  std::map<SideKey, double> seconds;
  std::map<SideKey, std::string> errors;
};

EvalLexicon default_lexicon(const ExperimentPlan& plan, const EmbeddingSpace& src,
                            const EmbeddingSpace& tgt) {
  if (!plan.lexicon.empty()) return load_lexicon(plan.lexicon);
  auto shared = shared_vocabulary(src, tgt);
  if (shared.size() > plan.eval_words) shared.resize(plan.eval_words);
  if (shared.empty()) throw std::invalid_argument("source and target share no words");
  return identity_lexicon(shared);
}

std::string cell_name(const std::string& block, const std::string& a, const std::string& b) {
  return sanitize(block + "-" + a + "-" + b);
}

}  // namespace

SplitStrategy parse_split(std::string_view s) {
  if (s == "halves") return SplitStrategy::kHalves;
  if (s == "random-halves") return SplitStrategy::kRandomHalves;
  if (s == "same") return SplitStrategy::kSame;
  throw std::invalid_argument("unknown split strategy '" + std::string(s) +
                              "' (halves, random-halves, same)");
}

std::string_view to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::kHalves: return "halves";
    case SplitStrategy::kRandomHalves: return "random-halves";
    case SplitStrategy::kSame: return "same";
  }
  return "?";
}

AlignMethod parse_method(std::string_view s) {
  if (s == "gan") return AlignMethod::kGan;
  if (s == "gan+refine") return AlignMethod::kGanRefine;
  if (s == "supervised") return AlignMethod::kSupervised;
  throw std::invalid_argument("unknown alignment method '" + std::string(s) +
                              "' (gan, gan+refine, supervised)");
}

std::string_view to_string(AlignMethod m) {
  switch (m) {
    case AlignMethod::kGan: return "gan";
    case AlignMethod::kGanRefine: return "gan+refine";
    case AlignMethod::kSupervised: return "supervised";
  }
  return "?";
}

void ExperimentPlan::validate() const {
  if (algorithms.empty()) throw std::invalid_argument("plan names no algorithms");
  std::unordered_set<std::string> names;
  bool needs_corpus = false;
  for (const auto& a : algorithms) {
    if (a.name.empty()) throw std::invalid_argument("algorithm with empty name");
    if (!names.insert(a.name).second) throw std::invalid_argument("algorithm '" + a.name + "' listed twice");
    if (a.external) {
      if (a.split_a.empty()) throw std::invalid_argument("external algorithm '" + a.name + "' has no file");
    } else if (a.name == "sgns" || a.name == "ppmi-svd") {
      needs_corpus = true;
    } else {
      throw std::invalid_argument("unknown algorithm '" + a.name +
                                  "' (sgns, ppmi-svd, or an external embedding pair)");
    }
  }
  if (needs_corpus && corpus.empty()) throw std::invalid_argument("plan trains embeddings but has no corpus");
  for (double f : sample_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("sample fractions must lie in (0, 1]");
  }
  if (eval_k.empty()) throw std::invalid_argument("eval_k is empty");
  for (auto k : eval_k) {
    if (k == 0) throw std::invalid_argument("eval_k values must be positive");
  }
  if (eval_words == 0 && lexicon.empty()) throw std::invalid_argument("eval_words must be positive");
  if (seed_dictionary_size == 0) throw std::invalid_argument("seed_dictionary_size must be positive");
  if (output_dir.empty()) throw std::invalid_argument("plan has no output directory");
  sgns.validate();
  gan.validate();
  if (ppmi.dim <= 0 || ppmi.window <= 0) throw std::invalid_argument("ppmi dim and window must be positive");
  if (refine.rounds < 0) throw std::invalid_argument("refine rounds must be non-negative");
}

std::vector<std::pair<std::string, std::string>> ExperimentPlan::echo() const {
  ExperimentPlan copy = *this;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& b : bindings(copy)) out.emplace_back(b.key, b.get());
  for (const auto& a : algorithms) {
    if (!a.external) continue;
    std::string files = a.split_a.string();
    if (!a.split_b.empty()) files += "," + a.split_b.string();
    out.emplace_back("external." + a.name, files);
  }
  return out;
}

ExperimentPlan plan_from_config(const Config& config, ExperimentPlan plan) {
  std::unordered_set<std::string> known;
  for (auto& b : bindings(plan)) {
    known.insert(b.key);
    if (auto v = config.lookup("plan", b.key)) b.set(*v);
  }
  for (const auto& [key, value] : config.values()) {
    std::string k = key.rfind("plan.", 0) == 0 ? key.substr(5) : key;
    if (k.rfind("external.", 0) == 0) {
      const std::string name = k.substr(9);
      const auto files = split_list(value);
      if (files.empty() || files.size() > 2) {
        throw std::invalid_argument(key + ": expected one or two embedding files");
      }
      auto it = std::find_if(plan.algorithms.begin(), plan.algorithms.end(),
                             [&](const AlgorithmSpec& a) { return a.name == name; });
      if (it == plan.algorithms.end()) {
        plan.algorithms.push_back({name, true, {}, {}});
        it = plan.algorithms.end() - 1;
      }
      it->external = true;
      it->split_a = files[0];
      it->split_b = files.size() > 1 ? fs::path(files[1]) : fs::path();
      continue;
    }
    if (!known.count(k)) throw std::invalid_argument("unknown plan key '" + key + "'");
  }
  return plan;
}

void write_run_record(const RunRecord& r, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "version = " << r.version << '\n';
  out << "cell = " << r.cell << '\n';
  out << "block = " << r.block << '\n';
  out << "source_algorithm = " << r.source_algorithm << '\n';
  out << "target_algorithm = " << r.target_algorithm << '\n';
  out << "source_split = " << r.source_split << '\n';
  out << "target_split = " << r.target_split << '\n';
  out << "method = " << r.method << '\n';
  out << "status = " << r.status << '\n';
  for (const auto& [k, p] : r.precision) out << "result.p_at_" << k << " = " << fmt(p) << '\n';
  out << "result.n_evaluated = " << r.n_evaluated << '\n';
  out << "result.n_skipped = " << r.n_skipped << '\n';
  out << "result.dictionary_size = " << r.dictionary_size << '\n';
  out << "result.refine_failed = " << bool_text(r.refine_failed) << '\n';
  for (const auto& [k, s] : r.timings_seconds) out << "time." << k << " = " << fmt(s) << '\n';
  for (const auto& [k, p] : r.paths) out << "path." << k << " = " << p.string() << '\n';
  for (const auto& [k, v] : r.plan_echo) out << "plan." << k << " = " << v << '\n';
}

Config read_run_record(const fs::path& path) { return Config::load(path); }

std::pair<TokenizedCorpus, TokenizedCorpus> split_corpus(const TokenizedCorpus& corpus,
                                                         SplitStrategy strategy, std::uint64_t seed) {
  if (strategy == SplitStrategy::kSame) return {corpus, corpus};
  const std::size_t n = corpus.documents.size();
  if (n < 2) throw std::invalid_argument("cannot split a corpus with fewer than two documents");
  std::vector<std::size_t> order(n);
  if (strategy == SplitStrategy::kRandomHalves) {
    order = shuffled_indices(n, derive_seed(seed, "split"));
  } else {
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::pair<TokenizedCorpus, TokenizedCorpus> out;
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < half ? out.first : out.second;
    dst.documents.push_back(corpus.documents[order[i]]);
  }
  return out;
}

EmbeddingSpace build_embeddings(const AlgorithmSpec& algo, const TokenizedCorpus& corpus, int split,
                                const std::string& split_label, const ExperimentPlan& plan,
                                std::uint64_t min_count) {
  if (algo.external) {
    const fs::path& file = (split == 1 && !algo.split_b.empty()) ? algo.split_b : algo.split_a;
    return load_embeddings(file);
  }
  const std::uint64_t seed = derive_seed(plan.seed, "train/" + algo.name + "/" + split_label);
  if (algo.name == "sgns") {
    SgnsConfig cfg = plan.sgns;
    cfg.min_count = min_count;
    cfg.seed = seed;
    return train_sgns(corpus, cfg);
  }
  if (algo.name == "ppmi-svd") {
    const auto cooc = count_cooccurrences(corpus, plan.ppmi.window, min_count, plan.ppmi.max_vocab);
    return train_ppmi_svd(cooc, plan.ppmi.dim, plan.ppmi.eig_exponent);
  }
  throw std::invalid_argument("unknown algorithm '" + algo.name + "'");
}

RunRecord run_cell(const std::string& cell, const EmbeddingSpace& src_raw, const EmbeddingSpace& tgt_raw,
                   AlignMethod method, const ExperimentPlan& plan, const EvalLexicon& lexicon,
                   const fs::path& cell_dir) {
  RunRecord rec;
  rec.cell = cell;
  rec.method = std::string(to_string(method));
  rec.plan_echo = plan.echo();
  rec.version = toolkit_version();
  fs::create_directories(cell_dir);

  Stopwatch clock;
  const EmbeddingSpace src = apply_normalization(src_raw, plan.source_norm);
  const EmbeddingSpace tgt = apply_normalization(tgt_raw, plan.target_norm);
  rec.timings_seconds["normalize"] = clock.lap();

  AlignmentMap map;
  if (method == AlignMethod::kSupervised) {
    std::unordered_set<std::string> exclude;
    for (const auto& e : lexicon.entries) exclude.insert(e.source);
    std::size_t available = 0;
    for (const auto& w : shared_vocabulary(src, tgt)) available += exclude.count(w) ? 0 : 1;
    const std::size_t n = std::min(plan.seed_dictionary_size, available);
    if (n == 0) throw std::invalid_argument("no shared words left for a seed dictionary");
    const auto dict = build_seed_dictionary(src, tgt, n, exclude);
    rec.dictionary_size = dict.size();
    map = procrustes_solve(src, tgt, dict);
    rec.timings_seconds["align"] = clock.lap();
  } else {
    GanConfig gc = plan.gan;
    gc.seed = derive_seed(plan.seed, "gan/" + cell);
    auto gan = train_gan(src, tgt, gc);
    rec.timings_seconds["align"] = clock.lap();
    save_matrix(gan.best, cell_dir / "gan_matrix.txt");
    save_matrix(gan.final, cell_dir / "final_matrix.txt");
    save_training_log_csv(gan.log, cell_dir / "training_log.csv");
    rec.paths["gan_matrix"] = cell_dir / "gan_matrix.txt";
    rec.paths["final_matrix"] = cell_dir / "final_matrix.txt";
    rec.paths["training_log"] = cell_dir / "training_log.csv";
    map = gan.best;
    if (method == AlignMethod::kGanRefine) {
      const auto ref = refine(src, tgt, gan.best, plan.refine);
      rec.timings_seconds["refine"] = clock.lap();
      rec.refine_failed = ref.failed;
      rec.dictionary_size = ref.dictionary_size;
      map = ref.map;
    }
    rec.log = std::move(gan.log);
  }
  save_matrix(map, cell_dir / "matrix.txt");
  rec.paths["matrix"] = cell_dir / "matrix.txt";

  const RetrievalIndex index(src, tgt, map, {plan.eval_scorer, plan.gan.csls_k, false});
  for (auto k : plan.eval_k) {
    const auto pr = precision_at_k(index, src, tgt, lexicon, k);
    rec.precision[k] = pr.precision;
    rec.n_evaluated = pr.n_evaluated;
    rec.n_skipped = pr.n_skipped;
  }
  rec.timings_seconds["evaluate"] = clock.lap();
  save_lexicon(lexicon, cell_dir / "lexicon.txt");
  rec.paths["lexicon"] = cell_dir / "lexicon.txt";
  return rec;
}

namespace {

void write_results(const std::vector<RunRecord>& records, const ExperimentPlan& plan,
                   const fs::path& dir) {
  std::ofstream csv(dir / "results.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
  csv << "block,source_algorithm,target_algorithm,source_split,target_split,method";
  for (auto k : plan.eval_k) csv << ",p_at_" << k;
  csv << ",n_evaluated,n_skipped,dictionary_size,status\n";
  for (const auto& r : records) {
    csv << r.block << ',' << r.source_algorithm << ',' << r.target_algorithm << ','
        << r.source_split << ',' << r.target_split << ',' << r.method;
    for (auto k : plan.eval_k) {
      auto it = r.precision.find(k);
      csv << ',' << (it == r.precision.end() ? std::string() : fmt(it->second));
    }
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    csv << ',' << r.n_evaluated << ',' << r.n_skipped << ',' << r.dictionary_size << ',' << status
        << '\n';
  }

  // Square table: unsupervised results on and above the diagonal, the
  // supervised block below it, P@1 only.
  std::ofstream table(dir / "results_table.txt");
  const auto& algos = plan.algorithms;
  std::size_t width = 12;
  for (const auto& a : algos) width = std::max(width, a.name.size() + 2);
  auto lookup = [&](const std::string& block, const std::string& a, const std::string& b) -> std::string {
    for (const auto& r : records) {
      if (r.block == block && r.source_algorithm == a && r.target_algorithm == b) {
        auto it = r.precision.find(1);
        if (r.status != "ok" || it == r.precision.end()) return "failed";
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << it->second;
        return s.str();
      }
    }
    return "";
  };
  table << std::left << std::setw(static_cast<int>(width)) << "P@1";
  for (const auto& a : algos) table << std::setw(static_cast<int>(width)) << a.name;
  table << '\n';
  for (std::size_t i = 0; i < algos.size(); ++i) {
    table << std::setw(static_cast<int>(width)) << algos[i].name;
    for (std::size_t j = 0; j < algos.size(); ++j) {
      std::string v;
      if (j >= i) {
        v = lookup(plan.method == AlignMethod::kSupervised ? "supervised" : "unsupervised",
                   algos[i].name, algos[j].name);
      } else {
        v = lookup("supervised", algos[j].name, algos[i].name);
      }
      table << std::setw(static_cast<int>(width)) << (v.empty() ? "-" : v);
    }
    table << '\n';
  }
  table << "upper triangle and diagonal: " << to_string(plan.method)
        << "; lower triangle: supervised\n";
}

}  // namespace

std::vector<RunRecord> run_grid(const ExperimentPlan& plan) {
  plan.validate();
  const fs::path out = plan.output_dir;
  fs::create_directories(out / "embeddings");

  TokenizedCorpus corpus;
  std::pair<TokenizedCorpus, TokenizedCorpus> halves;
  const bool trains = std::any_of(plan.algorithms.begin(), plan.algorithms.end(),
                                  [](const AlgorithmSpec& a) { return !a.external; });
  double split_seconds = 0.0;
  if (trains) {
    Stopwatch clock;
    corpus = preprocess_file(plan.corpus);
    halves = split_corpus(corpus, plan.split, plan.seed);
    split_seconds = clock.lap();
  }

  SideCache cache;
  auto side = [&](const AlgorithmSpec& algo, int split) -> const EmbeddingSpace* {
    const SideKey key{algo.name, split};
    if (cache.spaces.count(key)) return &cache.spaces[key];
    if (cache.errors.count(key)) return nullptr;
    Stopwatch clock;
    try {
      const auto& part = split == 0 ? halves.first : halves.second;
      const std::uint64_t mc = algo.name == "ppmi-svd" ? plan.ppmi.min_count : plan.sgns.min_count;
      auto space = build_embeddings(algo, part, split, split_name(split), plan, mc);
      const fs::path file = out / "embeddings" / (sanitize(algo.name) + "_" + split_name(split) + ".txt");
      save_embeddings(space, file);
      cache.files[key] = file;
      cache.seconds[key] = clock.lap();
      return &(cache.spaces[key] = std::move(space));
    } catch (const std::exception& e) {
      cache.errors[key] = e.what();
      return nullptr;
    }
  };

  struct CellPlan {
    std::string block;
    std::size_t a, b;
    int split_a, split_b;
    AlignMethod method;
  };
  std::vector<CellPlan> cells;
  const bool unsup = plan.method != AlignMethod::kSupervised;
  const std::string main_block = unsup ? "unsupervised" : "supervised";
  for (std::size_t i = 0; i < plan.algorithms.size(); ++i) {
    cells.push_back({main_block, i, i, 0, 1, plan.method});
  }
  for (std::size_t i = 0; i < plan.algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < plan.algorithms.size(); ++j) {
      cells.push_back({main_block, i, j, 0, 0, plan.method});
    }
  }
  if (unsup && plan.supervised_control) {
    for (std::size_t i = 0; i < plan.algorithms.size(); ++i) {
      for (std::size_t j = i + 1; j < plan.algorithms.size(); ++j) {
        cells.push_back({"supervised", i, j, 0, 0, AlignMethod::kSupervised});
      }
    }
  }

  std::vector<RunRecord> records;
  for (const auto& c : cells) {
    const auto& A = plan.algorithms[c.a];
    const auto& B = plan.algorithms[c.b];
    const std::string name = cell_name(c.block == "supervised" ? "sup" : "unsup", A.name, B.name);
    const fs::path dir = out / name;
    RunRecord rec;
    try {
      const EmbeddingSpace* src = side(A, c.split_a);
      if (!src) throw std::runtime_error(A.name + " embeddings: " + cache.errors[{A.name, c.split_a}]);
      const EmbeddingSpace* tgt = side(B, c.split_b);
      if (!tgt) throw std::runtime_error(B.name + " embeddings: " + cache.errors[{B.name, c.split_b}]);
      const EvalLexicon lexicon = default_lexicon(plan, *src, *tgt);
      rec = run_cell(name, *src, *tgt, c.method, plan, lexicon, dir);
      const fs::path sf = dir / "source_embeddings.txt";
      const fs::path tf = dir / "target_embeddings.txt";
      link_or_copy(cache.files[{A.name, c.split_a}], sf);
      link_or_copy(cache.files[{B.name, c.split_b}], tf);
      rec.paths["source_embeddings"] = sf;
      rec.paths["target_embeddings"] = tf;
      rec.timings_seconds["train_source"] = cache.seconds[{A.name, c.split_a}];
      rec.timings_seconds["train_target"] = cache.seconds[{B.name, c.split_b}];
      if (trains) rec.timings_seconds["preprocess"] = split_seconds;
    } catch (const std::exception& e) {
      rec = RunRecord{};
      rec.cell = name;
      rec.method = std::string(to_string(c.method));
      rec.plan_echo = plan.echo();
      rec.version = toolkit_version();
      rec.status = std::string("error: ") + e.what();
      fs::create_directories(dir);
    }
    rec.block = c.block;
    rec.source_algorithm = A.name;
    rec.target_algorithm = B.name;
    rec.source_split = split_name(c.split_a);
    rec.target_split = split_name(c.split_b);
    write_run_record(rec, dir / "record.txt");
    rec.paths["record"] = dir / "record.txt";
    records.push_back(std::move(rec));
  }
  write_results(records, plan, out);
  return records;
}

std::vector<CurvePoint> run_learning_curve(const ExperimentPlan& plan) {
  plan.validate();
  if (plan.sample_fractions.empty()) throw std::invalid_argument("learning curve needs sample fractions");
  const AlgorithmSpec& algo = plan.algorithms.front();
  if (algo.external) throw std::invalid_argument("learning curve trains its own embeddings");
  const fs::path out = plan.output_dir;
  fs::create_directories(out);

  const TokenizedCorpus corpus = preprocess_file(plan.corpus);
  const auto order = shuffled_indices(corpus.documents.size(), derive_seed(plan.seed, "sample"));
  const std::uint64_t base_min_count = algo.name == "ppmi-svd" ? plan.ppmi.min_count : plan.sgns.min_count;

  struct Sample {
    CurvePoint point;
    std::string label;
    std::optional<EmbeddingSpace> src, tgt;
    std::string error;
  };
  std::vector<Sample> samples;
  for (double f : plan.sample_fractions) {
    Sample s;
    s.point.fraction = f;
    s.label = "lc-" + sanitize(fmt(f));
    const auto n_docs = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(f * static_cast<double>(order.size()))));
    TokenizedCorpus sample;
    for (std::size_t i = 0; i < std::min(n_docs, order.size()); ++i) {
      sample.documents.push_back(corpus.documents[order[i]]);
    }
    std::uint64_t mc = base_min_count;
    if (plan.scale_min_count) {
      mc = std::max<std::uint64_t>(plan.min_count_floor,
                                   static_cast<std::uint64_t>(std::llround(f * static_cast<double>(mc))));
    }
    try {
      auto halves = split_corpus(sample, plan.split, plan.seed);
      s.point.tokens = halves.first.token_count();
      s.src = build_embeddings(algo, halves.first, 0, s.label + "/a", plan, mc);
      s.tgt = build_embeddings(algo, halves.second, 1, s.label + "/b", plan, mc);
    } catch (const std::exception& e) {
      s.error = e.what();
      s.src.reset();
      s.tgt.reset();
    }
    samples.push_back(std::move(s));
  }

  // Evaluation words: the candidate list (lexicon sources, or the most
  // frequent shared words of the largest sample) restricted to words every
  // trained sample covers on both sides.
  std::vector<std::string> candidates;
  const Sample* largest = nullptr;
  for (const auto& s : samples) {
    if (s.src && (!largest || s.point.fraction > largest->point.fraction)) largest = &s;
  }
  EvalLexicon full;
  if (!plan.lexicon.empty()) {
    full = load_lexicon(plan.lexicon);
  } else if (largest) {
    full = default_lexicon(plan, *largest->src, *largest->tgt);
  }
  EvalLexicon common;
  for (const auto& e : full.entries) {
    bool covered = true;
    for (const auto& s : samples) {
      if (!s.src) continue;
      if (!s.src->vocab().contains(e.source)) { covered = false; break; }
      bool any = false;
      for (const auto& t : e.targets) any = any || s.tgt->vocab().contains(t);
      if (!any) { covered = false; break; }
    }
    if (covered) common.entries.push_back(e);
  }

  std::vector<CurvePoint> points;
  std::ofstream csv(out / "learning_curve.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out / "learning_curve.csv").string());
  csv << "tokens,p_at_1\n";
  for (auto& s : samples) {
    const fs::path dir = out / s.label;
    RunRecord rec;
    if (s.src && !common.entries.empty()) {
      try {
        ExperimentPlan p = plan;
        p.eval_k = {1};
        rec = run_cell(s.label, *s.src, *s.tgt, plan.method, p, common, dir);
        s.point.p_at_1 = rec.precision.at(1);
        s.point.n_evaluated = rec.n_evaluated;
      } catch (const std::exception& e) {
        rec.status = std::string("error: ") + e.what();
      }
    } else {
      rec.status = s.src ? "error: no evaluation words shared by all samples" : "error: " + s.error;
    }
    rec.cell = s.label;
    rec.block = "learning-curve";
    rec.source_algorithm = rec.target_algorithm = algo.name;
    rec.source_split = "a";
    rec.target_split = "b";
    rec.version = toolkit_version();
    if (rec.plan_echo.empty()) rec.plan_echo = plan.echo();
    fs::create_directories(dir);
    write_run_record(rec, dir / "record.txt");
    csv << s.point.tokens << ',' << (s.point.p_at_1 ? fmt(*s.point.p_at_1) : std::string()) << '\n';
    points.push_back(s.point);
  }
  return points;
}

void export_loss_curves(const std::vector<std::pair<std::string, TrainingLog>>& logs, const fs::path& dir) {
  if (logs.empty()) throw std::invalid_argument("no training logs to export");
  fs::create_directories(dir);
  std::ofstream merged(dir / "loss_curves.csv");
  if (!merged) throw std::runtime_error("cannot write " + (dir / "loss_curves.csv").string());
  merged << "run_id,iteration,dis_loss,gen_loss,val_metric\n";
  for (const auto& [id, log] : logs) {
    save_training_log_csv(log, dir / (sanitize(id) + ".csv"));
    for (const auto& r : log.records) {
      merged << id << ',' << r.iteration << ',' << fmt(r.dis_loss) << ',' << fmt(r.gen_loss) << ','
             << fmt(r.val_metric) << '\n';
    }
  }
}

TrainingLog load_training_log_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("iteration,dis_loss,gen_loss,val_metric", 0) != 0) {
    throw FormatError(path.string() + ": not a training log (bad header)", 1);
  }
  TrainingLog log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_list(line);
    if (f.size() < 4) throw FormatError(path.string() + ": expected 4 fields", lineno);
    TrainingRecord r;
    r.iteration = parse_uint(f[0], "iteration");
    r.dis_loss = parse_double(f[1], "dis_loss");
    r.gen_loss = parse_double(f[2], "gen_loss");
    r.val_metric = parse_double(f[3], "val_metric");
    if (r.val_metric > log.best_metric) {
      log.best_metric = r.val_metric;
      log.best_iteration = r.iteration;
    }
    log.records.push_back(r);
  }
  return log;
}

fs::path default_output_root() {
  if (const char* env = std::getenv("EMBALIGN_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return fs::path("embalign-out");
}

}  // namespace embalign
