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

// embalign command-line driver. Every subcommand accepts --config FILE; keys
// are the long flag names with '-' replaced by '_', optionally under a
// [subcommand] section. Flags given on the command line win over the file.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "embalign/config.hpp"
#include "embalign/corpus.hpp"
#include "embalign/embedding_store.hpp"
#include "embalign/experiment.hpp"
#include "embalign/gan.hpp"
#include "embalign/geometry.hpp"
#include "embalign/procrustes.hpp"
#include "embalign/random.hpp"
#include "embalign/retrieval.hpp"

namespace fs = std::filesystem;
using namespace embalign;

namespace {

std::string config_key(std::string flag) {
  std::replace(flag.begin(), flag.end(), '-', '_');
  return flag;
}

template <class T>
T from_text(const std::string& text, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    return parse_bool(text, key);
  } else if constexpr (std::is_floating_point_v<T>) {
    return parse_double(text, key);
  } else if constexpr (std::is_integral_v<T> && std::is_signed_v<T>) {
    return static_cast<T>(parse_int(text, key));
  } else if constexpr (std::is_integral_v<T>) {
    return static_cast<T>(parse_uint(text, key));
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    T out;
    for (auto& s : split_list(text)) out.push_back(parse_uint(s, key));
    return out;
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    return split_list(text);
  } else {
    return T(text);
  }
}

// Options of one subcommand that may also come from the config file.
class Flags {
 public:
  Flags(CLI::App* app, std::vector<std::string> sections) : app_(app), sections_(std::move(sections)) {
    app_->add_option("--config", config_path_, "key = value file; command-line flags override it");
  }

  template <class T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    auto* opt = app_->add_option("--" + name, var, help)->capture_default_str();
    remember(opt, name, var);
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    auto* opt = app_->add_flag("--" + name, var, help);
    remember(opt, name, var);
    return opt;
  }

  CLI::App* app() { return app_; }

  // Fills options left unset on the command line from the config file.
  std::optional<Config> apply_config() {
    if (config_path_.empty()) return std::nullopt;
    Config cfg = Config::load(config_path_);
    for (auto& [opt, key, set] : bound_) {
      if (opt->count() > 0) continue;
      for (const auto& section : sections_) {
        if (auto v = cfg.lookup(section, key)) {
          set(*v);
          break;
        }
      }
    }
    return cfg;
  }

 private:
  template <class T>
  void remember(CLI::Option* opt, const std::string& name, T& var) {
    const std::string key = config_key(name);
    bound_.emplace_back(opt, key, [&var, key](const std::string& v) { var = from_text<T>(v, key); });
  }

  CLI::App* app_;
  std::vector<std::string> sections_;
  std::string config_path_;
  std::vector<std::tuple<CLI::Option*, std::string, std::function<void(const std::string&)>>> bound_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  return file;
}

EmbeddingSpace load_side(const std::string& path, std::size_t limit, const std::string& norm) {
  auto space = limit ? load_embeddings(path, limit) : load_embeddings(path);
  return apply_normalization(space, parse_normalization(norm));
}

void ensure_parent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string input, output;
};

void cmd_preprocess(const PreprocessArgs& a) {
  const auto corpus = preprocess_file(a.input);
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.output, file);
  for (const auto& doc : corpus.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) out << ' ';
      out << doc[i];
    }
    out << '\n';
  }
  std::cerr << corpus.documents.size() << " documents, " << corpus.token_count() << " tokens\n";
}

// --half a|b trains on one half of the documents, split the way grid does it
// (same strategy and seed give the same halves).
struct HalfArgs {
  std::string half = "all";
  std::string split = "halves";
  std::uint64_t split_seed = 1;

  void bind(Flags& f) {
    f.option("half", half, "all, a or b");
    f.option("split", split, "halves or random-halves, used with --half");
    f.option("split-seed", split_seed, "seed for random-halves (the grid's plan seed)");
  }

  TokenizedCorpus select(TokenizedCorpus corpus) const {
    if (half == "all") return corpus;
    if (half != "a" && half != "b") throw std::invalid_argument("--half must be all, a or b");
    auto halves = split_corpus(corpus, parse_split(split), split_seed);
    return half == "a" ? std::move(halves.first) : std::move(halves.second);
  }
};

struct SgnsArgs {
  std::string corpus, output;
  HalfArgs half;
  SgnsConfig cfg;
};

void cmd_train_sgns(const SgnsArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = a.half.select(preprocess_file(a.corpus));
  const auto space = train_sgns(corpus, a.cfg);
  ensure_parent(a.output);
  save_embeddings(space, a.output);
  std::cerr << "sgns: " << space.size() << " words, dim " << space.dim() << ", "
            << corpus.token_count() << " tokens, " << seconds_since(t0) << " s\n";
}

struct PpmiArgs {
  std::string corpus, output;
  HalfArgs half;
  PpmiSvdConfig cfg;
};

void cmd_train_ppmi(const PpmiArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = a.half.select(preprocess_file(a.corpus));
  const auto cooc = count_cooccurrences(corpus, a.cfg.window, a.cfg.min_count, a.cfg.max_vocab);
  const auto space = train_ppmi_svd(cooc, a.cfg.dim, a.cfg.eig_exponent);
  ensure_parent(a.output);
  save_embeddings(space, a.output);
  std::cerr << "ppmi-svd: " << space.size() << " words, dim " << space.dim() << ", "
            << seconds_since(t0) << " s\n";
}

struct GeometryArgs {
  std::vector<std::string> files;
  std::string csv;
  std::size_t limit = 0;
};

void cmd_geometry(const GeometryArgs& a) {
  std::vector<EmbeddingSpace> spaces;
  for (const auto& f : a.files) spaces.push_back(a.limit ? load_embeddings(f, a.limit) : load_embeddings(f));
  std::vector<GeometryAudit> audits;
  for (const auto& s : spaces) audits.push_back(geometry_audit(s));
  const bool csv_to_stdout = a.csv == "-";
  if (!csv_to_stdout) {
    for (std::size_t i = 0; i < spaces.size(); ++i) write_geometry_text(std::cout, audits[i], a.files[i]);
  }
  std::optional<CentroidCosine> cc;
  if (spaces.size() == 2) {
    if (spaces[0].dim() != spaces[1].dim()) throw std::invalid_argument("geometry: spaces differ in dimension");
    cc = centroid_cosine(spaces[0], spaces[1]);
    if (!csv_to_stdout) {
      std::cout << "centroid cosine: " << cc->value << (cc->degenerate ? " (degenerate centroid)" : "") << '\n';
    }
  }
  if (a.csv.empty()) return;
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.csv, file);
  out << "statistic,value\n";
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    write_geometry_csv_rows(out, audits[i], spaces.size() == 1 ? "" : (i == 0 ? "a." : "b."));
  }
  if (cc) {
    out << std::setprecision(17) << "centroid_cosine," << cc->value << '\n'
        << "centroid_cosine_degenerate," << (cc->degenerate ? 1 : 0) << '\n';
  }
}

struct SupervisedArgs {
  std::string source, target, dictionary, output, source_norm = "none", target_norm = "none";
  std::string exclude_lexicon;
  std::size_t seed_size = 5000, limit = 0;
  bool normalize_rows = false;
};

void cmd_align_supervised(const SupervisedArgs& a) {
  const auto src = load_side(a.source, a.limit, a.source_norm);
  const auto tgt = load_side(a.target, a.limit, a.target_norm);
  SeedDictionary dict;
  if (!a.dictionary.empty()) {
    dict = load_seed_dictionary(a.dictionary);
  } else {
    std::unordered_set<std::string> exclude;
    if (!a.exclude_lexicon.empty()) {
      for (const auto& e : load_lexicon(a.exclude_lexicon).entries) exclude.insert(e.source);
    }
    dict = build_seed_dictionary(src, tgt, a.seed_size, exclude);
  }
  const auto map = procrustes_solve(src, tgt, dict, {a.normalize_rows});
  ensure_parent(a.output);
  save_matrix(map, a.output);
  std::cerr << "procrustes: " << dict.size() << " pairs, orthogonality error "
            << map.orthogonality_error() << '\n';
}

struct GanArgs {
  std::string source, target, output, final_output, log, summary, lexicon;
  std::string source_norm = "none", target_norm = "none", val_scorer = "csls";
  std::string refine_scorer = "csls", eval_scorer = "csls";
  std::size_t limit = 0, eval_words = 1500;
  int refine_rounds = 0;
  std::size_t refine_pool = 15000;
  GanConfig cfg;
};

void cmd_align_gan(GanArgs a) {
  a.cfg.val_scorer = parse_scorer(a.val_scorer);
  const auto src = load_side(a.source, a.limit, a.source_norm);
  const auto tgt = load_side(a.target, a.limit, a.target_norm);
  auto t0 = std::chrono::steady_clock::now();
  const auto result = train_gan(src, tgt, a.cfg);
  const double gan_seconds = seconds_since(t0);
  AlignmentMap map = result.best;
  std::optional<RefineResult> ref;
  if (a.refine_rounds > 0) {
    t0 = std::chrono::steady_clock::now();
    RefineConfig rc;
    rc.rounds = a.refine_rounds;
    rc.pool = a.refine_pool;
    rc.scorer = parse_scorer(a.refine_scorer);
    rc.csls_k = a.cfg.csls_k;
    ref = refine(src, tgt, result.best, rc);
    map = ref->map;
  }
  ensure_parent(a.output);
  save_matrix(map, a.output);
  if (!a.final_output.empty()) save_matrix(result.final, a.final_output);
  if (!a.log.empty()) {
    ensure_parent(a.log);
    save_training_log_csv(result.log, a.log);
  }

  std::ostringstream summary;
  summary << std::setprecision(17);
  summary << "version = " << toolkit_version() << '\n'
          << "source = " << a.source << '\n'
          << "target = " << a.target << '\n'
          << "seed = " << a.cfg.seed << '\n'
          << "best_iteration = " << result.log.best_iteration << '\n'
          << "best_val_metric = " << result.log.best_metric << '\n'
          << "final_orthogonality_error = " << result.final.orthogonality_error() << '\n'
          << "gan_seconds = " << gan_seconds << '\n';
  if (ref) {
    summary << "refine_failed = " << (ref->failed ? "true" : "false") << '\n'
            << "refine_rounds = " << ref->rounds_run << '\n'
            << "refine_dictionary_size = " << ref->dictionary_size << '\n';
  }
  if (!a.lexicon.empty() || a.eval_words > 0) {
    EvalLexicon lex;
    if (!a.lexicon.empty()) {
      lex = load_lexicon(a.lexicon);
    } else {
      auto shared = shared_vocabulary(src, tgt);
      if (shared.size() > a.eval_words) shared.resize(a.eval_words);
      lex = identity_lexicon(shared);
    }
    if (!lex.entries.empty()) {
      const auto pr = precision_at_k(src, tgt, map, lex, 1, {parse_scorer(a.eval_scorer), a.cfg.csls_k, false});
      summary << "p_at_1 = " << pr.precision << '\n'
              << "n_evaluated = " << pr.n_evaluated << '\n'
              << "n_skipped = " << pr.n_skipped << '\n';
    }
  }
  if (a.summary.empty()) {
    std::cerr << summary.str();
  } else {
    ensure_parent(a.summary);
    std::ofstream(a.summary) << summary.str();
  }
}

struct EvaluateArgs {
  std::string source, target, matrix, lexicon, output, source_norm = "none", target_norm = "none";
  std::vector<std::size_t> k = {1, 10};
  std::vector<std::string> scorers = {"csls"};
  std::size_t eval_words = 1500, limit = 0;
  int csls_k = 10;
  bool brute_force = false;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto src = load_side(a.source, a.limit, a.source_norm);
  const auto tgt = load_side(a.target, a.limit, a.target_norm);
  const auto map = a.matrix.empty() ? AlignmentMap::identity(src.dim()) : load_matrix(a.matrix);
  EvalLexicon lex;
  if (!a.lexicon.empty()) {
    lex = load_lexicon(a.lexicon);
  } else {
    auto shared = shared_vocabulary(src, tgt);
    if (shared.size() > a.eval_words) shared.resize(a.eval_words);
    lex = identity_lexicon(shared);
  }
  std::ofstream file;
  std::ostream& out = open_or_stdout(a.output, file);
  out << "k,scorer,precision,n_evaluated,n_skipped\n" << std::setprecision(17);
  for (const auto& name : a.scorers) {
    const Scorer scorer = parse_scorer(name);
    const RetrievalIndex index(src, tgt, map, {scorer, a.csls_k, a.brute_force});
    for (auto k : a.k) {
      const auto pr = precision_at_k(index, src, tgt, lex, k);
      out << k << ',' << to_string(scorer) << ',' << pr.precision << ',' << pr.n_evaluated << ','
          << pr.n_skipped << '\n';
    }
  }
}

struct PlanArgs {
  std::string corpus, output, method, split, algorithms, fractions;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

ExperimentPlan plan_from_args(const PlanArgs& a, const std::optional<Config>& cfg) {
  Config merged = cfg.value_or(Config{});
  if (!a.corpus.empty()) merged.set("corpus", a.corpus);
  if (!a.output.empty()) merged.set("output_dir", a.output);
  if (!a.method.empty()) merged.set("method", a.method);
  if (!a.split.empty()) merged.set("split", a.split);
  if (!a.algorithms.empty()) merged.set("algorithms", a.algorithms);
  if (!a.fractions.empty()) merged.set("sample_fractions", a.fractions);
  if (a.seed_given) merged.set("seed", std::to_string(a.seed));
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    merged.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // "plan."-prefixed keys from a [plan] section would shadow the overrides.
  Config flat;
  for (const auto& [k, v] : merged.values()) {
    const std::string key = k.rfind("plan.", 0) == 0 ? k.substr(5) : k;
    if (!flat.has(key) || k.rfind("plan.", 0) != 0) flat.set(key, v);
  }
  ExperimentPlan defaults;
  defaults.algorithms = {{"sgns", false, {}, {}}, {"ppmi-svd", false, {}, {}}};
  defaults.output_dir = default_output_root() / "grid";
  return plan_from_config(flat, defaults);
}

void add_plan_flags(CLI::App* app, PlanArgs& a, std::string& config_path) {
  app->add_option("--config", config_path, "experiment plan file (key = value, [section] prefixes)");
  app->add_option("--corpus", a.corpus, "raw text corpus, one document per line");
  app->add_option("--output", a.output, "output directory");
  app->add_option("--method", a.method, "gan, gan+refine or supervised");
  app->add_option("--split", a.split, "halves, random-halves or same");
  app->add_option("--algorithms", a.algorithms, "comma-separated list (sgns, ppmi-svd, external names)");
  app->add_option("--fractions", a.fractions, "comma-separated sample fractions in (0, 1]");
  app->add_option("--seed", a.seed, "plan seed")->each([&a](const std::string&) { a.seed_given = true; });
  app->add_option("--set", a.overrides, "override any plan key, e.g. --set gan.hidden=512");
}

void print_records(const std::vector<RunRecord>& records) {
  for (const auto& r : records) {
    std::cerr << std::left << std::setw(28) << r.cell << ' ' << r.block << ' ';
    if (r.status == "ok") {
      for (const auto& [k, p] : r.precision) std::cerr << "P@" << k << '=' << std::fixed << std::setprecision(3) << p << ' ';
      std::cerr << '\n';
    } else {
      std::cerr << r.status << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embalign: align word-embedding spaces adversarially or with Procrustes"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);

  // preprocess
  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "normalize raw text to lowercase a-z0-9 tokens, one document per line");
  Flags pre_flags(pre_cmd, {"preprocess", ""});
  pre_flags.option("input", pre.input, "raw text file");
  pre_flags.option("output", pre.output, "output file ('-' for stdout)");

  // train-sgns
  SgnsArgs sg;
  auto* sg_cmd = app.add_subcommand("train-sgns", "train skip-gram with negative sampling vectors");
  Flags sg_flags(sg_cmd, {"train-sgns", "sgns", ""});
  sg_flags.option("corpus", sg.corpus, "raw or preprocessed text");
  sg_flags.option("output", sg.output, "word2vec text output");
  sg.half.bind(sg_flags);
  sg_flags.option("dim", sg.cfg.dim, "vector dimension");
  sg_flags.option("window", sg.cfg.window, "context window radius");
  sg_flags.option("negatives", sg.cfg.negatives, "negative samples per pair");
  sg_flags.option("epochs", sg.cfg.epochs, "passes over the corpus");
  sg_flags.option("learning-rate", sg.cfg.learning_rate, "initial learning rate");
  sg_flags.option("min-learning-rate", sg.cfg.min_learning_rate, "learning-rate floor");
  sg_flags.option("subsample", sg.cfg.subsample_threshold, "frequent-word subsampling threshold (0 = off)");
  sg_flags.option("context-smoothing", sg.cfg.context_smoothing, "exponent on counts for the noise distribution");
  sg_flags.flag("dynamic-window", sg.cfg.dynamic_window, "sample the window radius per position");
  sg_flags.option("min-count", sg.cfg.min_count, "drop words rarer than this");
  sg_flags.option("max-vocab", sg.cfg.max_vocab, "keep at most this many words (0 = all)");
  sg_flags.option("seed", sg.cfg.seed, "random seed");

  // train-ppmi-svd
  PpmiArgs pp;
  auto* pp_cmd = app.add_subcommand("train-ppmi-svd", "train PPMI + truncated SVD vectors");
  Flags pp_flags(pp_cmd, {"train-ppmi-svd", "ppmi", ""});
  pp_flags.option("corpus", pp.corpus, "raw or preprocessed text");
  pp_flags.option("output", pp.output, "word2vec text output");
  pp.half.bind(pp_flags);
  pp_flags.option("dim", pp.cfg.dim, "vector dimension");
  pp_flags.option("window", pp.cfg.window, "context window radius");
  pp_flags.option("eig-exponent", pp.cfg.eig_exponent, "exponent p in U * S^p");
  pp_flags.option("min-count", pp.cfg.min_count, "drop words rarer than this");
  pp_flags.option("max-vocab", pp.cfg.max_vocab, "keep at most this many words (0 = all)");

  // geometry
  GeometryArgs geo;
  auto* geo_cmd = app.add_subcommand("geometry", "mean-vector geometry of one space, plus centroid cosine for two");
  Flags geo_flags(geo_cmd, {"geometry", ""});
  geo_cmd->add_option("files", geo.files, "one or two word2vec files")->required()->expected(1, 2);
  geo_flags.option("csv", geo.csv, "write statistic,value rows here ('-' for stdout only)");
  geo_flags.option("limit", geo.limit, "read only the first N words (0 = all)");

  // align-supervised
  SupervisedArgs sup;
  auto* sup_cmd = app.add_subcommand("align-supervised", "orthogonal Procrustes on a seed dictionary");
  Flags sup_flags(sup_cmd, {"align-supervised", ""});
  sup_flags.option("source", sup.source, "source word2vec file")->required();
  sup_flags.option("target", sup.target, "target word2vec file")->required();
  sup_flags.option("dictionary", sup.dictionary, "seed pairs, two tokens per line (default: identity pairs)");
  sup_flags.option("seed-size", sup.seed_size, "identity pairs over the N most frequent shared words");
  sup_flags.option("exclude-lexicon", sup.exclude_lexicon, "keep these lexicon sources out of the seed pairs");
  sup_flags.flag("normalize-rows", sup.normalize_rows, "unit-normalize dictionary rows before solving");
  sup_flags.option("source-norm", sup.source_norm, "none, unit, center or center+unit");
  sup_flags.option("target-norm", sup.target_norm, "none, unit, center or center+unit");
  sup_flags.option("limit", sup.limit, "read only the first N words (0 = all)");
  sup_flags.option("output", sup.output, "matrix file")->required();

  // align-gan
  GanArgs gan;
  auto* gan_cmd = app.add_subcommand("align-gan", "adversarial alignment with optional Procrustes refinement");
  Flags gan_flags(gan_cmd, {"align-gan", "gan", ""});
  gan_flags.option("source", gan.source, "source word2vec file")->required();
  gan_flags.option("target", gan.target, "target word2vec file")->required();
  gan_flags.option("output", gan.output, "matrix file for the selected (best or refined) map")->required();
  gan_flags.option("final-output", gan.final_output, "matrix file for the last-iteration map");
  gan_flags.option("log", gan.log, "training log CSV");
  gan_flags.option("summary", gan.summary, "run summary (key = value); stderr when absent");
  gan_flags.option("lexicon", gan.lexicon, "evaluation lexicon for the summary P@1");
  gan_flags.option("eval-words", gan.eval_words, "identity lexicon size when no lexicon is given (0 = skip)");
  gan_flags.option("eval-scorer", gan.eval_scorer, "cosine or csls");
  gan_flags.option("source-norm", gan.source_norm, "none, unit, center or center+unit");
  gan_flags.option("target-norm", gan.target_norm, "none, unit, center or center+unit");
  gan_flags.option("limit", gan.limit, "read only the first N words (0 = all)");
  gan_flags.option("epochs", gan.cfg.epochs, "training epochs");
  gan_flags.option("iterations-per-epoch", gan.cfg.iterations_per_epoch, "generator steps per epoch");
  gan_flags.option("dis-steps", gan.cfg.dis_steps, "discriminator steps per generator step");
  gan_flags.option("batch-size", gan.cfg.batch_size, "rows per batch");
  gan_flags.option("sample-pool", gan.cfg.sample_pool, "sample from the N most frequent words");
  gan_flags.option("hidden", gan.cfg.hidden, "discriminator hidden width");
  gan_flags.option("dis-learning-rate", gan.cfg.dis_learning_rate, "discriminator SGD rate");
  gan_flags.option("gen-learning-rate", gan.cfg.gen_learning_rate, "generator SGD rate");
  gan_flags.option("lr-decay", gan.cfg.lr_decay, "per-epoch learning-rate factor");
  gan_flags.option("label-smoothing", gan.cfg.label_smoothing, "label smoothing s in [0, 0.5)");
  gan_flags.option("input-dropout", gan.cfg.input_dropout, "discriminator input dropout");
  gan_flags.option("leaky-slope", gan.cfg.leaky_slope, "leaky ReLU slope");
  gan_flags.option("ortho-beta", gan.cfg.ortho_beta, "orthogonality update beta (0 = off)");
  gan_flags.option("eval-interval", gan.cfg.eval_interval, "iterations between validation checks");
  gan_flags.option("val-words", gan.cfg.val_words, "frequent source words in the validation metric");
  gan_flags.option("val-scorer", gan.val_scorer, "cosine or csls");
  gan_flags.option("csls-k", gan.cfg.csls_k, "CSLS neighborhood size");
  gan_flags.option("seed", gan.cfg.seed, "random seed");
  gan_flags.option("refine-rounds", gan.refine_rounds, "Procrustes refinement rounds (0 = none)");
  gan_flags.option("refine-pool", gan.refine_pool, "frequent words considered by refinement");
  gan_flags.option("refine-scorer", gan.refine_scorer, "cosine or csls for mutual neighbors");

  // evaluate
  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "word-translation retrieval precision");
  Flags ev_flags(ev_cmd, {"evaluate", ""});
  ev_flags.option("source", ev.source, "source word2vec file")->required();
  ev_flags.option("target", ev.target, "target word2vec file")->required();
  ev_flags.option("matrix", ev.matrix, "alignment matrix (default identity)");
  ev_flags.option("lexicon", ev.lexicon, "lexicon, 'source target' per line (default identity)");
  ev_flags.option("eval-words", ev.eval_words, "identity lexicon size when no lexicon is given");
  ev_flags.option("k", ev.k, "precision cutoffs")->delimiter(',');
  ev_flags.option("scorer", ev.scorers, "cosine and/or csls")->delimiter(',');
  ev_flags.option("csls-k", ev.csls_k, "CSLS neighborhood size");
  ev_flags.flag("brute-force", ev.brute_force, "score every pair exhaustively");
  ev_flags.option("source-norm", ev.source_norm, "none, unit, center or center+unit");
  ev_flags.option("target-norm", ev.target_norm, "none, unit, center or center+unit");
  ev_flags.option("limit", ev.limit, "read only the first N words (0 = all)");
  ev_flags.option("output", ev.output, "CSV output ('-' or absent for stdout)");

  // grid / learning-curve
  PlanArgs grid;
  std::string grid_config;
  auto* grid_cmd = app.add_subcommand("grid", "alignment grid over algorithm pairs, results.csv per plan");
  add_plan_flags(grid_cmd, grid, grid_config);

  PlanArgs curve;
  std::string curve_config;
  auto* curve_cmd = app.add_subcommand("learning-curve", "P@1 against corpus sample size");
  add_plan_flags(curve_cmd, curve, curve_config);

  // export-losses
  std::vector<std::string> logs;
  std::string loss_dir;
  auto* loss_cmd = app.add_subcommand("export-losses", "merge training logs into loss_curves.csv");
  loss_cmd->add_option("logs", logs, "training log CSVs, optionally as run_id=path")->required();
  loss_cmd->add_option("--output", loss_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*pre_cmd) {
      pre_flags.apply_config();
      if (pre.input.empty()) throw std::invalid_argument("--input is required");
      cmd_preprocess(pre);
    } else if (*sg_cmd) {
      sg_flags.apply_config();
      if (sg.corpus.empty() || sg.output.empty()) throw std::invalid_argument("--corpus and --output are required");
      sg.cfg.validate();
      cmd_train_sgns(sg);
    } else if (*pp_cmd) {
      pp_flags.apply_config();
      if (pp.corpus.empty() || pp.output.empty()) throw std::invalid_argument("--corpus and --output are required");
      cmd_train_ppmi(pp);
    } else if (*geo_cmd) {
      geo_flags.apply_config();
      cmd_geometry(geo);
    } else if (*sup_cmd) {
      sup_flags.apply_config();
      cmd_align_supervised(sup);
    } else if (*gan_cmd) {
      gan_flags.apply_config();
      cmd_align_gan(gan);
    } else if (*ev_cmd) {
      ev_flags.apply_config();
      cmd_evaluate(ev);
    } else if (*grid_cmd) {
      std::optional<Config> cfg;
      if (!grid_config.empty()) cfg = Config::load(grid_config);
      const auto plan = plan_from_args(grid, cfg);
      const auto records = run_grid(plan);
      print_records(records);
      std::cerr << "results: " << (plan.output_dir / "results.csv").string() << '\n';
      std::ifstream table(plan.output_dir / "results_table.txt");
      std::cout << table.rdbuf();
    } else if (*curve_cmd) {
      std::optional<Config> cfg;
      if (!curve_config.empty()) cfg = Config::load(curve_config);
      auto plan = plan_from_args(curve, cfg);
      if (curve.output.empty() && !(cfg && (cfg->has("output_dir") || cfg->has("plan.output_dir")))) {
        plan.output_dir = default_output_root() / "learning-curve";
      }
      if (plan.sample_fractions.empty()) plan.sample_fractions = {0.01, 0.1, 1.0};
      const auto points = run_learning_curve(plan);
      std::cout << "fraction,tokens,p_at_1,n_evaluated\n";
      for (const auto& p : points) {
        std::cout << p.fraction << ',' << p.tokens << ','
                  << (p.p_at_1 ? std::to_string(*p.p_at_1) : std::string()) << ',' << p.n_evaluated << '\n';
      }
    } else if (*loss_cmd) {
      std::vector<std::pair<std::string, TrainingLog>> loaded;
      for (const auto& entry : logs) {
        const auto eq = entry.find('=');
        const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
        const std::string id = eq == std::string::npos ? fs::path(path).parent_path().filename().string() + "/" +
                                                             fs::path(path).stem().string()
                                                       : entry.substr(0, eq);
        loaded.emplace_back(id, load_training_log_csv(path));
      }
      export_loss_curves(loaded, loss_dir);
      std::cerr << "wrote " << (fs::path(loss_dir) / "loss_curves.csv").string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "embalign: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
