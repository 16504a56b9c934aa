// semvec: dataset generation, training, evaluation and export.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 numeric divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "semvec/checkpoint.hpp"
#include "semvec/datagen.hpp"
#include "semvec/error.hpp"
#include "semvec/eval.hpp"
#include "semvec/kernels.hpp"
#include "semvec/parallel.hpp"
#include "semvec/training.hpp"

#ifndef SEMVEC_VERSION
#define SEMVEC_VERSION "0.0.0"
#endif

namespace {

using namespace semvec;
using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Op> parse_ops(const std::string& text) {
  std::vector<Op> ops;
  for (const auto& name : split_list(text)) {
    auto op = op_from_name(name);
    if (!op) op = op_from_symbol(name);
    if (!op) throw UsageError("unknown operator '" + name + "'");
    ops.push_back(*op);
  }
  return ops;
}

Domain parse_domain(const std::string& text) {
  const auto d = domain_from_name(text);
  if (!d) throw UsageError("unknown domain '" + text + "' (expected bool or poly)");
  return *d;
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run record written next to every artifact as <out>.manifest.json.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point clock = std::chrono::steady_clock::now();

  void write(const fs::path& out) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    json j{{"command", command},
           {"argv", argv},
           {"config", config},
           {"seed", seed},
           {"inputs", inputs},
           {"outputs", outputs},
           {"version", SEMVEC_VERSION},
           {"kernels", std::string(kernels::backend_name(kernels::active_backend()))},
           {"started_at", iso_time(started)},
           {"wall_clock_seconds", secs}};
    std::ofstream f(out.string() + ".manifest.json");
    if (!f) throw DataError("cannot write manifest for " + out.string());
    f << j.dump(2) << '\n';
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f.precision(10);
  return f;
}

struct LoadedData {
  Dataset dataset;
  DatasetSpec spec;
  std::vector<Expr> exprs;
};

LoadedData load_dataset(const fs::path& path) {
  LoadedData d;
  d.dataset = read_jsonl(path);
  d.spec = d.dataset.spec ? *d.dataset.spec : infer_spec(d.dataset.records);
  d.exprs = parse_records(d.dataset.records, d.spec.domain);
  return d;
}

std::vector<Split> parse_splits(const std::string& text) {
  if (text == "test") return {Split::SeenTest, Split::UnseenTest};
  if (text == "all") return {Split::Train, Split::Valid, Split::SeenTest, Split::UnseenTest};
  std::vector<Split> out;
  for (const auto& name : split_list(text)) {
    const auto s = split_from_name(name);
    if (!s) throw UsageError("unknown split '" + name + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw UsageError("no split given");
  return out;
}

// Keeps the loaded model alive for as long as the encoder is used.
struct LoadedEncoder {
  Checkpoint ckpt;
  std::optional<models::Model<float>> model;
  eval::Encoder encoder;
  std::size_t dim = 0;
};

LoadedEncoder load_encoder(const fs::path& path, const DatasetSpec& spec) {
  LoadedEncoder e;
  e.ckpt = load_checkpoint(path);
  eval::check_compatible(e.ckpt.model, spec.domain, spec.ops, spec.vars);
  if (e.ckpt.tfidf) {
    e.encoder = eval::tfidf_encoder(*e.ckpt.tfidf);
    e.dim = e.ckpt.tfidf->vocabulary().size();
  } else {
    e.model.emplace(e.ckpt.load_model());
    e.encoder = eval::model_encoder(*e.model);
    e.dim = e.ckpt.model.dim;
  }
  return e;
}

std::vector<std::size_t> records_in(const std::vector<DatasetRecord>& records,
                                    std::span<const Split> splits) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (std::find(splits.begin(), splits.end(), records[i].split) != splits.end()) {
      out.push_back(i);
    }
  }
  return out;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string domain = "bool";
  std::string ops;
  std::string vars = "a,b,c";
  std::uint32_t max_size = 0;
  std::size_t cap = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a, Manifest& m) {
  DatasetSpec spec;
  spec.domain = parse_domain(a.domain);
  spec.ops = a.ops.empty()
                 ? std::vector<Op>(domain_ops(spec.domain).begin(), domain_ops(spec.domain).end())
                 : parse_ops(a.ops);
  spec.vars = VarOrder::parse(a.vars);
  spec.max_size = a.max_size;
  if (a.cap > 0) spec.per_class_cap = a.cap;
  spec.seed = a.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& err) {
    throw UsageError(err.what());
  }
  const Dataset d = generate(spec);
  const DatasetStats st = stats(d.records);
  std::cout << "classes " << st.num_classes << "\nexprs " << st.num_exprs << "\nentropy_bits "
            << std::fixed << std::setprecision(3) << st.entropy_bits << '\n';
  if (!a.out.empty()) {
    write_jsonl(a.out, d.records, d.spec);
    m.config = json::parse(spec_to_json(spec));
    m.seed = a.seed;
    m.outputs = {a.out};
    m.write(a.out);
  }
  return 0;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const std::string& path) {
  const Dataset d = read_jsonl(path);
  const DatasetStats st = stats(d.records);
  std::map<Split, std::size_t> per_split;
  for (const auto& r : d.records) ++per_split[r.split];
  std::cout << "classes " << st.num_classes << "\nexprs " << st.num_exprs << "\nentropy_bits "
            << std::fixed << std::setprecision(3) << st.entropy_bits << '\n';
  for (const auto& [s, n] : per_split) std::cout << split_name(s) << ' ' << n << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dataset;
  std::string model = "eqnet";
  std::string config;
  std::string out;
  std::string history;
  std::map<std::string, std::string> overrides;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, bool deterministic, std::optional<std::size_t> threads,
              Manifest& m) {
  const auto kind = models::model_kind_from_name(a.model);
  if (!kind) throw UsageError("unknown model '" + a.model + "'");
  training::TrainConfig cfg = training::TrainConfig::defaults(*kind);
  if (!a.config.empty()) cfg = training::load_config(a.config, cfg);
  try {
    for (const auto& [k, v] : a.overrides) cfg.set(k, v);
    if (threads) cfg.threads = *threads;
    if (deterministic) cfg.threads = 1;
    cfg.model = *kind;
    cfg.validate();
  } catch (const std::invalid_argument& err) {
    throw UsageError(err.what());
  }

  const LoadedData d = load_dataset(a.dataset);
  Checkpoint ckpt;
  if (*kind == models::ModelKind::TfIdf) {
    std::vector<TokenSeq> docs;
    for (std::size_t i = 0; i < d.exprs.size(); ++i) {
      if (d.dataset.records[i].split == Split::Train) docs.push_back(tokenize(d.exprs[i]));
    }
    models::TfIdfModel tf(models::token_vocabulary(d.spec.ops, d.spec.vars));
    tf.fit(docs);
    ckpt.model = cfg.model_config(d.spec.domain, d.spec.ops, d.spec.vars);
    ckpt.tfidf = std::move(tf);
    ckpt.train_config = cfg.to_pairs();
  } else {
    const auto progress = [&](const training::EpochStats& s) {
      if (a.quiet) return;
      std::fprintf(stderr,
                   "epoch %zu loss %.4f hinge %.4f subexpae %.4f mu %.4f valid5 %.4f (%.1fs)\n",
                   s.epoch, s.loss, s.hinge, s.subexpae, s.mu, s.valid_score5, s.seconds);
    };
    training::TrainResult r = training::train(d.exprs, d.dataset.records, d.spec.domain,
                                              d.spec.ops, d.spec.vars, cfg, progress);
    std::fprintf(stderr, "best epoch %zu valid5 %.4f\n", r.best_epoch, r.best_valid_score5);
    ckpt = make_checkpoint(r.model, cfg.to_pairs());
    if (!a.history.empty()) {
      training::write_history_csv(a.history, r.history);
      m.outputs.push_back(a.history);
    }
  }
  save_checkpoint(a.out, ckpt);
  for (const auto& [k, v] : cfg.to_pairs()) m.config[k] = v;
  m.seed = cfg.seed;
  m.inputs = {a.dataset};
  if (!a.config.empty()) m.inputs.push_back(a.config);
  m.outputs.insert(m.outputs.begin(), a.out);
  m.write(a.out);
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string ckpt;
  std::string dataset;
  std::string split = "unseen_test";
  std::string pool = "train+split";
  std::size_t k = 15;
  std::string out;
  std::string pairs;
  std::size_t max_points = 2000;
  bool random_baseline = false;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a, std::size_t threads, Manifest& m) {
  if (a.k == 0) throw UsageError("--k must be positive");
  if (a.pool != "train+split" && a.pool != "split") {
    throw UsageError("--pool must be train+split or split");
  }
  const LoadedData d = load_dataset(a.dataset);
  LoadedEncoder enc = load_encoder(a.ckpt, d.spec);
  if (a.random_baseline) enc.encoder = eval::random_encoder(enc.dim, a.seed);
  const std::vector<Split> splits = parse_splits(a.split);

  eval::EvalResult r;
  if (a.pool == "split") {
    r = eval::transfer_eval(enc.encoder, d.exprs, d.dataset.records, splits, a.k, threads);
  } else {
    if (splits.size() != 1) throw UsageError("--pool train+split takes a single split");
    r = eval::evaluate_split(enc.encoder, d.exprs, d.dataset.records, splits[0], a.k, threads);
  }
  const auto at = [&](std::size_t k) -> json {
    if (r.curve.mean.size() < k || r.curve.scored == 0) return nullptr;
    return r.curve.mean[k - 1];
  };
  json summary{{"split", a.split},        {"pool", a.pool},
               {"pool_size", r.pool_size}, {"queries", r.queries},
               {"scored", r.curve.scored}, {"skipped", r.curve.skipped},
               {"score1", at(1)},          {"score5", at(5)},
               {"auc", r.curve.scored ? json(r.auc) : json(nullptr)}};
  std::cout << summary.dump() << '\n';

  m.config = summary;
  m.config["k"] = a.k;
  m.config["random_baseline"] = a.random_baseline;
  m.seed = a.seed;
  m.inputs = {a.ckpt, a.dataset};
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    f << "k,mean_score\n";
    for (std::size_t k = 0; k < r.curve.mean.size(); ++k) f << k + 1 << ',' << r.curve.mean[k] << '\n';
    m.outputs.push_back(a.out);
  }
  if (!a.pairs.empty()) {
    std::vector<std::size_t> members =
        a.pool == "split" ? records_in(d.dataset.records, splits) : std::vector<std::size_t>{};
    if (a.pool != "split") {
      std::vector<Split> with_train = splits;
      with_train.push_back(Split::Train);
      members = records_in(d.dataset.records, with_train);
    }
    eval::ClassIndex classes;
    const eval::EmbeddingPool pool =
        eval::build_pool(enc.encoder, d.exprs, d.dataset.records, members, classes, threads);
    const auto curve = eval::thin_curve(eval::pair_curve(pool), a.max_points);
    auto f = open_out(a.pairs);
    f << "threshold,precision,recall,fpr\n";
    for (const auto& p : curve) {
      f << p.threshold << ',' << p.precision << ',' << p.recall << ',' << p.fpr << '\n';
    }
    m.outputs.push_back(a.pairs);
  }
  if (!m.outputs.empty()) m.write(m.outputs.front());
  return 0;
}

// ---------------------------------------------------------------- export

struct ExportArgs {
  std::string ckpt;
  std::string dataset;
  std::string split = "test";
  std::string out;
  bool pca = false;
};

int cmd_export(const ExportArgs& a, std::size_t threads, Manifest& m) {
  const LoadedData d = load_dataset(a.dataset);
  const LoadedEncoder enc = load_encoder(a.ckpt, d.spec);
  const auto which = records_in(d.dataset.records, parse_splits(a.split));
  std::vector<std::vector<double>> vecs(which.size());
  parallel_for(which.size(), threads, [&](std::size_t i) { vecs[i] = enc.encoder(d.exprs[which[i]]); });
  if (a.pca) {
    if (vecs.size() < 2) throw DataError("PCA needs at least two expressions");
    vecs = eval::pca_project(eval::pca_fit(vecs, 2), vecs);
  }
  auto f = open_out(a.out);
  f << "id,expr,class,split";
  const std::size_t cols = vecs.empty() ? 0 : vecs[0].size();
  for (std::size_t c = 0; c < cols; ++c) f << (a.pca ? ",pc" : ",v") << c;
  f << '\n';
  for (std::size_t i = 0; i < which.size(); ++i) {
    const auto& r = d.dataset.records[which[i]];
    f << which[i] << ",\"" << r.expr << "\",\"" << r.class_id << "\"," << split_name(r.split);
    for (double v : vecs[i]) f << ',' << v;
    f << '\n';
  }
  m.config = {{"split", a.split}, {"pca", a.pca}, {"rows", which.size()}};
  m.inputs = {a.ckpt, a.dataset};
  m.outputs = {a.out};
  m.write(a.out);
  return 0;
}

// ---------------------------------------------------------------- viz-tree

struct VizArgs {
  std::string ckpt;
  std::string dataset;
  std::string expr;
  std::size_t k = 5;
  std::string out;
};

int cmd_viz(const VizArgs& a, std::size_t threads, Manifest& m) {
  const LoadedData d = load_dataset(a.dataset);
  const LoadedEncoder enc = load_encoder(a.ckpt, d.spec);
  if (!enc.model) throw DataError("viz-tree needs a trained model checkpoint");
  const Expr e = parse(a.expr, d.spec.domain);
  std::vector<std::size_t> all(d.dataset.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  eval::ClassIndex classes;
  const eval::EmbeddingPool pool =
      eval::build_pool(enc.encoder, d.exprs, d.dataset.records, all, classes, threads);
  const std::string tree =
      eval::per_node_scores(e, *enc.model, pool, classes, d.dataset.records, a.k);
  if (a.out.empty()) {
    std::cout << json::parse(tree).dump(2) << '\n';
    return 0;
  }
  auto f = open_out(a.out);
  f << json::parse(tree).dump(2) << '\n';
  m.config = {{"expr", a.expr}, {"k", a.k}};
  m.inputs = {a.ckpt, a.dataset};
  m.outputs = {a.out};
  m.write(a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic expression embeddings: generate, train, evaluate, export"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SEMVEC_VERSION);

  std::optional<std::size_t> threads;
  bool deterministic = false;
  app.add_option("--threads", threads, "Worker threads (default: SEMVEC_THREADS or all cores; training uses 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", deterministic, "Single-threaded, bit-reproducible execution");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Enumerate a dataset and write JSONL");
  g->add_option("--domain", gen.domain, "bool or poly")->capture_default_str();
  g->add_option("--ops", gen.ops, "Comma-separated operators (default: all of the domain)");
  g->add_option("--vars", gen.vars, "Variables, e.g. a,b,c")->capture_default_str();
  g->add_option("--max-size", gen.max_size, "Maximum tree size in nodes")->required();
  g->add_option("--cap", gen.cap, "Sample at most this many members per class");
  g->add_option("--seed", gen.seed, "Split and subsampling seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output JSONL (omit to print statistics only)");

  std::string stats_path;
  auto* s = app.add_subcommand("stats", "Print dataset statistics");
  s->add_option("--dataset", stats_path, "Dataset JSONL")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--dataset", tr.dataset, "Dataset JSONL")->required();
  t->add_option("--model", tr.model, "eqnet, treenn1, treenn2, gru or tfidf")->capture_default_str();
  t->add_option("--config", tr.config, "key = value file applied over the model defaults");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--history", tr.history, "Per-epoch CSV");
  t->add_flag("--quiet", tr.quiet, "No per-epoch progress");
  // Every training field is also a flag; flags override the config file.
  std::map<std::string, std::string> train_flags;
  for (const auto& [key, value] : training::TrainConfig{}.to_pairs()) {
    if (key == "model" || key == "threads") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    t->add_option_function<std::string>(
        flag, [&tr, key = key](const std::string& v) { tr.overrides[key] = v; },
        "Override " + key);
  }

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score retrieval on a dataset split");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  e->add_option("--dataset", ev.dataset, "Dataset JSONL")->required();
  e->add_option("--split", ev.split, "valid, seen_test, unseen_test, test or a comma list")
      ->capture_default_str();
  e->add_option("--pool", ev.pool, "train+split, or split for transfer")->capture_default_str();
  e->add_option("--k", ev.k, "Largest k of the score curve")->capture_default_str();
  e->add_option("--out", ev.out, "Score curve CSV (k, mean_score)");
  e->add_option("--pairs", ev.pairs, "Pair PR/ROC CSV (threshold, precision, recall, fpr)");
  e->add_option("--max-points", ev.max_points, "Points kept in the pair curve")->capture_default_str();
  e->add_flag("--random-baseline", ev.random_baseline,
              "Replace the model with seeded random vectors of the same size");
  e->add_option("--seed", ev.seed, "Random baseline seed")->capture_default_str();

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "Write embeddings as CSV");
  x->add_option("--ckpt", ex.ckpt, "Checkpoint")->required();
  x->add_option("--dataset", ex.dataset, "Dataset JSONL")->required();
  x->add_option("--split", ex.split, "Splits to export")->capture_default_str();
  x->add_option("--out", ex.out, "Output CSV")->required();
  x->add_flag("--pca", ex.pca, "Project onto the top two principal components");

  VizArgs vz;
  auto* v = app.add_subcommand("viz-tree", "Per-node score_k of one expression as JSON");
  v->add_option("--ckpt", vz.ckpt, "Checkpoint")->required();
  v->add_option("--dataset", vz.dataset, "Dataset whose records form the pool")->required();
  v->add_option("--expr", vz.expr, "Expression text")->required();
  v->add_option("--k", vz.k, "Neighbors per node")->capture_default_str();
  v->add_option("--out", vz.out, "Output JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsageError;
  }

  Manifest m;
  m.argv.assign(argv, argv + argc);
  const std::size_t eval_threads = deterministic ? 1 : threads.value_or(default_threads());
  try {
    if (*g) {
      m.command = "gen";
      return cmd_gen(gen, m);
    }
    if (*s) return cmd_stats(stats_path);
    if (*t) {
      m.command = "train";
      std::optional<std::size_t> train_threads = threads;
      if (!train_threads && std::getenv("SEMVEC_THREADS")) train_threads = default_threads();
      return cmd_train(tr, deterministic, train_threads, m);
    }
    if (*e) {
      m.command = "eval";
      return cmd_eval(ev, eval_threads, m);
    }
    if (*x) {
      m.command = "export";
      return cmd_export(ex, eval_threads, m);
    }
    if (*v) {
      m.command = "viz-tree";
      return cmd_viz(vz, eval_threads, m);
    }
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsageError;
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << '\n';
    return kNumericError;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
