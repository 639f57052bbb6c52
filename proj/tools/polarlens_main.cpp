// polarlens CLI: argument parsing and config assembly in front of the
// shared-library C API. Every subcommand maps onto one pipeline stage; a
// `key = value` config file can preset options and explicit flags win.

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polarlens.h"

namespace {

using nlohmann::json;

// config-file keys for `stage`: bare keys and `stage.key` both apply
json kv_config(const std::string& path, const std::string& stage) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
  json cfg = json::object();
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--config",
                                 path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    auto dot = key.find('.');
    if (dot != std::string::npos) {
      if (key.substr(0, dot) != stage) continue;
      key = key.substr(dot + 1);
    }
    cfg[key] = value;
  }
  return cfg;
}

// One CLI subcommand bound to a pipeline stage. Options collect as strings
// and only user-provided values land in the stage config.
class StageCommand {
 public:
  StageCommand(CLI::App& parent, const std::string& name, const std::string& stage,
               const std::string& desc)
      : stage_(stage) {
    cmd_ = parent.add_subcommand(name, desc);
  }

  CLI::App* app() { return cmd_; }
  const std::string& stage() const { return stage_; }

  void opt(const std::string& flag, const std::string& key, const std::string& desc,
           bool required = false) {
    auto value = std::make_shared<std::string>();
    CLI::Option* o = cmd_->add_option(flag, *value, desc);
    if (required) o->required();
    single_.push_back({o, key, value});
  }

  void multi_opt(const std::string& flag, const std::string& key, const std::string& desc) {
    auto values = std::make_shared<std::vector<std::string>>();
    CLI::Option* o = cmd_->add_option(flag, *values, desc);
    multi_.push_back({o, key, values});
  }

  void flag(const std::string& name, const std::string& key, const std::string& desc) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* o = cmd_->add_flag(name, *value, desc);
    flags_.push_back({o, key, value});
  }

  bool parsed() const { return cmd_->parsed(); }

  json build_config(const std::string& config_file) const {
    json cfg = config_file.empty() ? json::object() : kv_config(config_file, stage_);
    for (const auto& e : single_)
      if (e.option->count() > 0) cfg[e.key] = *e.value;
    for (const auto& e : multi_)
      if (e.option->count() > 0) cfg[e.key] = *e.value;
    for (const auto& e : flags_)
      if (e.option->count() > 0) cfg[e.key] = *e.value;
    return cfg;
  }

 private:
  template <typename T>
  struct Entry {
    CLI::Option* option;
    std::string key;
    std::shared_ptr<T> value;
  };
  CLI::App* cmd_;
  std::string stage_;
  std::vector<Entry<std::string>> single_;
  std::vector<Entry<std::vector<std::string>>> multi_;
  std::vector<Entry<bool>> flags_;
};

int run(const StageCommand& sc, const std::string& config_file) {
  json cfg = sc.build_config(config_file);
  std::unique_ptr<polarlens_session, decltype(&polarlens_session_free)> session(
      polarlens_session_new(), &polarlens_session_free);
  if (!session) {
    std::fprintf(stderr, "polarlens: cannot create session\n");
    return POLARLENS_ERR_RUNTIME;
  }
  int status = polarlens_run_stage(session.get(), sc.stage().c_str(), cfg.dump().c_str());
  if (status != POLARLENS_OK) {
    std::fprintf(stderr, "polarlens %s: %s\n", sc.stage().c_str(),
                 polarlens_last_error(session.get()));
    return status;
  }
  json manifest = json::parse(polarlens_last_manifest(session.get()));
  for (const auto& out : manifest.at("outputs"))
    std::printf("wrote %s\n", out.get<std::string>().c_str());
  return POLARLENS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polarlens: multi-dimensional ideological polarization from a tweet corpus"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "key = value config file; flags override")
      ->expected(1);
  app.set_version_flag("--version", std::string(polarlens_version()));

  std::vector<std::unique_ptr<StageCommand>> commands;
  auto add = [&](CLI::App& parent, const std::string& name, const std::string& stage,
                 const std::string& desc) -> StageCommand& {
    commands.push_back(std::make_unique<StageCommand>(parent, name, stage, desc));
    return *commands.back();
  };

  auto& ingest = add(app, "ingest", "ingest", "parse a record file into per-user aggregates");
  ingest.opt("--input", "input", "line-delimited record file", true);
  ingest.opt("--out", "out", "users artifact to write", true);
  ingest.opt("--window", "window", "study window YYYY-MM-DD:YYYY-MM-DD");
  ingest.opt("--jobs", "jobs", "parser worker threads");
  ingest.opt("--schema", "schema", "JSON file remapping record keys");

  auto& score = add(app, "score", "score", "domain scores and 30% pole binning");
  score.opt("--users", "users", "users artifact", true);
  score.opt("--catalog-dir", "catalog_dir", "directory with science/political/moderacy.csv",
            true);
  score.opt("--out", "out", "scores CSV to write", true);
  score.opt("--min-domains", "min_domains", "matched-share floor for binning (default 3)");
  score.opt("--q", "q", "quantile for the pole cutoffs (default 0.30)");
  score.opt("--cutoffs-science", "cutoffs_science", "pin science cutoffs as lo:hi");
  score.opt("--cutoffs-political", "cutoffs_political", "pin political cutoffs as lo:hi");
  score.opt("--cutoffs-moderacy", "cutoffs_moderacy", "pin moderacy cutoffs as lo:hi");

  auto& graph = add(app, "graph", "graph", "build the weighted retweet graph");
  graph.opt("--input", "input", "line-delimited record file", true);
  graph.opt("--out", "out", "graph artifact to write", true);
  graph.opt("--window", "window", "study window YYYY-MM-DD:YYYY-MM-DD");
  graph.opt("--schema", "schema", "JSON file remapping record keys");

  auto& lpa = add(app, "lpa", "lpa", "seed-clamped label propagation over the retweet graph");
  lpa.opt("--graph", "graph", "graph artifact", true);
  lpa.opt("--seeds", "seeds", "seed TSV (user_id<TAB>pole)", true);
  lpa.opt("--dim", "dim", "science|political|moderacy", true);
  lpa.opt("--out", "out", "labels CSV to write", true);
  lpa.opt("--mode", "mode", "undirected|directed (default undirected)");
  lpa.opt("--rng", "rng", "propagation rng seed (default 42)");
  lpa.opt("--max-iter", "max_iter", "sweep cap (default 100)");
  lpa.opt("--eval-folds", "eval_folds", "also run held-out seed evaluation with this many folds");

  auto* features = app.add_subcommand("features", "per-user feature extraction");
  features->require_subcommand(1);

  auto& fbow = add(*features, "bow", "features_bow", "seed co-occurrence TF-IDF hashtag vectors");
  fbow.opt("--users", "users", "users artifact", true);
  fbow.opt("--dim", "dim", "science|political|moderacy", true);
  fbow.opt("--out", "out", "sparse triplet CSV to write", true);
  fbow.opt("--k", "k", "hashtags per seed group (default 100)");
  fbow.opt("--cooccur", "cooccur", "per_tweet|per_user (default per_tweet)");
  fbow.opt("--vocab-out", "vocab_out", "vocabulary artifact (default <out>.vocab.json)");

  auto& flda = add(*features, "lda", "features_lda", "topic-affinity vectors from hashtag LDA");
  flda.opt("--users", "users", "users artifact", true);
  flda.opt("--out", "out", "dense affinity CSV to write", true);
  flda.opt("--k", "k", "topic count (default 20)");
  flda.opt("--sweeps", "sweeps", "gibbs sweeps (default 1000)");
  flda.opt("--burn-in", "burn_in", "burn-in sweeps (default 200)");
  flda.opt("--rng", "rng", "sampler rng seed (default 7)");
  flda.opt("--alpha", "alpha", "doc-topic prior (default 50/K)");
  flda.opt("--beta", "beta", "topic-word prior (default 0.01)");
  flda.opt("--min-users", "min_users", "prune tags used by fewer users (default 10)");
  flda.opt("--max-frac", "max_frac", "prune tags used by more than this user fraction (0.75)");
  flda.opt("--model-out", "model_out", "topic model artifact (default <out>.model.json)");
  flda.flag("--k-sweep", "k_sweep", "report coherence for K in {5,10,15,20,25,30} first");

  auto& femb = add(*features, "embed", "features_embed", "mean word-vector document embeddings");
  femb.opt("--users", "users", "users artifact", true);
  femb.opt("--vectors", "vectors", "pretrained vector table (text format)", true);
  femb.opt("--out", "out", "dense embedding CSV to write", true);
  femb.opt("--stopwords", "stopwords", "stopword list (default: built-in English)");

  auto& train = add(app, "train", "train", "logistic regression on binned domain scores");
  train.opt("--features", "features", "feature CSV (sparse or dense)", true);
  train.opt("--labels", "labels", "scores CSV with bins (ground truth)", true);
  train.opt("--dim", "dim", "science|political|moderacy", true);
  train.opt("--out", "out", "model artifact to write", true);
  train.opt("--folds", "folds", "cross-validation folds (default 5)");
  train.opt("--kind", "kind", "bow|lda|embed (default: detect from the file)");
  train.opt("--lr", "lr", "learning rate (default 0.1)");
  train.opt("--l2", "l2", "L2 penalty (default 1e-4)");
  train.opt("--epochs", "epochs", "full-batch epochs (default 200)");
  train.opt("--rng", "rng", "fold shuffle rng seed (default 0)");

  auto& classify = add(app, "classify", "classify", "apply a trained model to feature rows");
  classify.opt("--model", "model", "model artifact", true);
  classify.opt("--features", "features", "feature CSV", true);
  classify.opt("--out", "out", "labels CSV to write", true);

  auto& analyze = add(app, "analyze", "analyze",
                      "drift, group activity, hashtags, geography and heatmaps");
  analyze.opt("--users", "users", "users artifact", true);
  analyze.opt("--catalog-dir", "catalog_dir", "catalog directory", true);
  analyze.opt("--scores", "scores", "scores CSV", true);
  analyze.opt("--out-dir", "out_dir", "directory for analysis outputs", true);
  analyze.opt("--labels-science", "labels_science", "classified science labels (default: bins)");
  analyze.opt("--labels-political", "labels_political",
              "classified political labels (default: bins)");
  analyze.opt("--labels-moderacy", "labels_moderacy",
              "classified moderacy labels (default: bins)");
  analyze.opt("--bins", "bins", "heatmap bins per axis (default 20)");
  analyze.opt("--min-state-users", "min_state_users", "suppress states under this (default 50)");
  analyze.opt("--k-hashtags", "k_hashtags", "top hashtags per group (default 50)");
  analyze.opt("--min-domains", "min_domains", "cross-dimension join floor (default 3)");

  auto& synth = add(app, "synth", "synth", "synthetic corpus with planted ground truth");
  synth.opt("--spec", "spec", "synth spec JSON");
  synth.opt("--out", "out", "corpus JSONL to write", true);
  synth.opt("--truth", "truth", "planted truth CSV to write");
  synth.opt("--aux-dir", "aux_dir", "also write catalogs/, seeds/, vectors.txt, stopwords.txt");
  synth.opt("--n-users", "n_users", "user count override");
  synth.opt("--rng", "rng", "generator rng seed override");

  auto& report = add(app, "report", "report", "bundle analysis outputs and eval reports");
  report.opt("--analysis-dir", "analysis_dir", "directory written by analyze", true);
  report.opt("--out-dir", "out_dir", "bundle directory to write", true);
  report.multi_opt("--model", "models", "model artifact to include (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // bad arguments are validation errors; --help/--version exit cleanly
    int code = app.exit(e);
    return code == 0 ? 0 : POLARLENS_ERR_VALIDATION;
  }

  for (const auto& sc : commands)
    if (sc->parsed()) return run(*sc, config_file);
  std::fprintf(stderr, "polarlens: no subcommand\n");
  return POLARLENS_ERR_VALIDATION;
}
