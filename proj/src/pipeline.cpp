#include "polarlens/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "polarlens/analysis.hpp"
#include "polarlens/bow.hpp"
#include "polarlens/catalog.hpp"
#include "polarlens/corpus.hpp"
#include "polarlens/embed.hpp"
#include "polarlens/graph.hpp"
#include "polarlens/io_util.hpp"
#include "polarlens/lda.hpp"
#include "polarlens/model.hpp"
#include "polarlens/synth.hpp"

namespace polarlens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- config access ------------------------------------------------------------

[[noreturn]] void bad_key(const std::string& key, const char* what) {
  throw ValidationError("config key '" + key + "' " + what);
}

std::string want_string(const json& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end() || !it->is_string() || it->get<std::string>().empty())
    bad_key(key, "is required");
  return it->get<std::string>();
}

std::string opt_string(const json& cfg, const std::string& key, const std::string& dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  if (!it->is_string()) bad_key(key, "must be a string");
  return it->get<std::string>();
}

double opt_number(const json& cfg, const std::string& key, double dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  if (it->is_string()) {
    try {
      return std::stod(it->get<std::string>());
    } catch (...) {
      bad_key(key, "must be a number");
    }
  }
  if (!it->is_number()) bad_key(key, "must be a number");
  return it->get<double>();
}

std::int64_t opt_int(const json& cfg, const std::string& key, std::int64_t dflt) {
  double v = opt_number(cfg, key, static_cast<double>(dflt));
  auto i = static_cast<std::int64_t>(v);
  if (static_cast<double>(i) != v) bad_key(key, "must be an integer");
  return i;
}

bool opt_bool(const json& cfg, const std::string& key, bool dflt) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return dflt;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    std::string s = it->get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  bad_key(key, "must be a boolean");
}

Dimension want_dimension(const json& cfg, const std::string& key) {
  auto dim = dimension_from_string(want_string(cfg, key));
  if (!dim) bad_key(key, "must be one of science|political|moderacy");
  return *dim;
}

void want_range(bool ok, const std::string& key, const char* range) {
  if (!ok) bad_key(key, (std::string("must lie in ") + range).c_str());
}

// missing stage inputs name the producer to run first
void want_input(const std::string& path, const std::string& what, const std::string& producer) {
  if (file_exists(path)) return;
  std::string msg = what + " '" + path + "' not found";
  if (!producer.empty()) msg += "; run the " + producer + " stage first";
  throw ValidationError(msg);
}

// --- manifests ------------------------------------------------------------------

struct ManifestBuilder {
  json inputs = json::object();
  std::vector<std::string> outputs;

  void input(const std::string& name, const std::string& path) {
    inputs[name] = {{"path", path}, {"fnv64", file_fnv1a_hex(path)}};
  }
  void output(const std::string& path) { outputs.push_back(path); }

  StageResult finish(const std::string& stage, const json& effective_config,
                     const std::string& manifest_path) {
    StageResult result;
    result.outputs = outputs;
    result.manifest = {{"stage", stage},
                       {"version", kVersion},
                       {"config", effective_config},
                       {"inputs", inputs},
                       {"outputs", outputs}};
    result.manifest_path = manifest_path;
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest '" + manifest_path + "'");
    out << result.manifest.dump(2) << '\n';
    return result;
  }
};

std::string sidecar(const std::string& path, const std::string& suffix) {
  std::string base = path;
  if (base.size() > 4 && base.compare(base.size() - 4, 4, ".csv") == 0)
    base.resize(base.size() - 4);
  return base + suffix;
}

WindowSpec window_from(const json& cfg) {
  return WindowSpec::parse(opt_string(cfg, "window", "2020-01-21:2020-05-01"));
}

SchemaConfig schema_from(const json& cfg) {
  std::string path = opt_string(cfg, "schema", "");
  return path.empty() ? SchemaConfig() : SchemaConfig::from_json_file(path);
}

// --- stages -----------------------------------------------------------------------

StageResult stage_synth(const json& cfg) {
  SynthSpec spec;
  std::string spec_path = opt_string(cfg, "spec", "");
  if (!spec_path.empty()) {
    want_input(spec_path, "synth spec", "");
    spec = SynthSpec::from_json_file(spec_path);
  }
  if (cfg.contains("n_users")) spec.n_users = static_cast<std::uint32_t>(opt_int(cfg, "n_users", spec.n_users));
  if (cfg.contains("rng")) spec.rng_seed = static_cast<std::uint64_t>(opt_int(cfg, "rng", 42));
  spec.validate();

  std::string out = want_string(cfg, "out");
  std::string truth = opt_string(cfg, "truth", sidecar(out, "") + ".truth.csv");
  std::string aux = opt_string(cfg, "aux_dir", "");

  SynthData data = generate(spec);
  write_synth(data, out, truth, aux);

  json effective = cfg;
  effective["truth"] = truth;
  ManifestBuilder mb;
  if (!spec_path.empty()) mb.input("spec", spec_path);
  mb.output(out);
  mb.output(truth);
  if (!aux.empty()) mb.output(aux);
  return mb.finish("synth", effective, out + ".manifest.json");
}

StageResult stage_ingest(const json& cfg) {
  std::string input = want_string(cfg, "input");
  std::string out = want_string(cfg, "out");
  want_input(input, "corpus", "synth");
  WindowSpec window = window_from(cfg);
  int jobs = static_cast<int>(opt_int(cfg, "jobs", 1));
  want_range(jobs >= 1, "jobs", "[1,inf)");

  UserStore store = ingest_file(input, schema_from(cfg), window, jobs);
  save_user_store(store, out);

  json effective = cfg;
  effective["window"] = window.to_string();
  effective["counters"] = {{"parsed", store.counters.parsed},
                           {"skipped_malformed", store.counters.skipped_malformed},
                           {"skipped_window", store.counters.skipped_window},
                           {"users", store.users.size()}};
  ManifestBuilder mb;
  mb.input("corpus", input);
  mb.output(out);
  return mb.finish("ingest", effective, out + ".manifest.json");
}

StageResult stage_score(const json& cfg) {
  std::string users_path = want_string(cfg, "users");
  std::string catalog_dir = want_string(cfg, "catalog_dir");
  std::string out = want_string(cfg, "out");
  want_input(users_path, "user aggregates", "ingest");
  for (const char* name : {"science.csv", "political.csv", "moderacy.csv"})
    want_input(catalog_dir + "/" + name, "catalog", "");
  auto min_domains = static_cast<std::uint32_t>(opt_int(cfg, "min_domains", 3));
  double q = opt_number(cfg, "q", 0.30);
  want_range(min_domains >= 1, "min_domains", "[1,inf)");
  want_range(q > 0 && q <= 0.5, "q", "(0,0.5]");

  UserStore store = load_user_store(users_path);
  CatalogFamily catalogs = load_catalog_dir(catalog_dir);

  std::vector<std::vector<DimScore>> per_dim;
  json cutoffs_json = json::object();
  for (Dimension dim : kAllDimensions) {
    std::vector<DimScore> scores = score_all(store, catalogs.of(dim), min_domains);
    // published cutoffs can be pinned per dimension: [lo, hi] or "lo:hi"
    std::optional<std::pair<double, double>> fixed;
    std::string fixed_key = std::string("cutoffs_") + std::string(to_string(dim));
    if (cfg.contains(fixed_key)) {
      const auto& v = cfg.at(fixed_key);
      if (v.is_array() && v.size() == 2) {
        fixed = std::make_pair(v[0].get<double>(), v[1].get<double>());
      } else if (v.is_string()) {
        auto parts = split_on(v.get<std::string>(), ':');
        try {
          if (parts.size() == 2) fixed = std::make_pair(std::stod(parts[0]), std::stod(parts[1]));
        } catch (...) {
        }
        if (!fixed) bad_key(fixed_key, "must be \"lo:hi\"");
      } else {
        bad_key(fixed_key, "must be [lo, hi] or \"lo:hi\"");
      }
      if (fixed && fixed->first > fixed->second) bad_key(fixed_key, "must have lo <= hi");
    }
    BinCutoffs cut = bin_scores(scores, q, min_domains, fixed);
    cutoffs_json[std::string(to_string(dim))] = {{"lo", cut.lo},
                                                 {"hi", cut.hi},
                                                 {"q", cut.q},
                                                 {"n_eligible", cut.n_eligible},
                                                 {"fixed", fixed.has_value()}};
    per_dim.push_back(std::move(scores));
  }
  write_scores_csv(per_dim, out);
  std::string cutoffs_path = sidecar(out, ".cutoffs.json");
  {
    std::ofstream c(cutoffs_path, std::ios::binary);
    if (!c) throw std::runtime_error("cannot write '" + cutoffs_path + "'");
    c << cutoffs_json.dump(2) << '\n';
  }

  ManifestBuilder mb;
  mb.input("users", users_path);
  for (const char* name : {"science.csv", "political.csv", "moderacy.csv"})
    mb.input(name, catalog_dir + "/" + name);
  mb.output(out);
  mb.output(cutoffs_path);
  json effective = cfg;
  effective["min_domains"] = min_domains;
  effective["q"] = q;
  return mb.finish("score", effective, out + ".manifest.json");
}

StageResult stage_graph(const json& cfg) {
  std::string input = want_string(cfg, "input");
  std::string out = want_string(cfg, "out");
  want_input(input, "corpus", "synth");
  WindowSpec window = window_from(cfg);
  RetweetGraph g = build_graph_from_file(input, schema_from(cfg), window);
  save_graph(g, out);

  json effective = cfg;
  effective["window"] = window.to_string();
  effective["stats"] = {{"nodes", g.node_count()},
                        {"edges", g.edge_count()},
                        {"retweets", g.total_retweets}};
  ManifestBuilder mb;
  mb.input("corpus", input);
  mb.output(out);
  return mb.finish("graph", effective, out + ".manifest.json");
}

StageResult stage_lpa(const json& cfg) {
  std::string graph_path = want_string(cfg, "graph");
  std::string seeds_path = want_string(cfg, "seeds");
  std::string out = want_string(cfg, "out");
  Dimension dim = want_dimension(cfg, "dim");
  want_input(graph_path, "graph", "graph");
  want_input(seeds_path, "seeds", "");

  LpaParams params;
  params.max_iter = static_cast<int>(opt_int(cfg, "max_iter", 100));
  params.rng_seed = static_cast<std::uint64_t>(opt_int(cfg, "rng", 42));
  std::string mode = opt_string(cfg, "mode", "undirected");
  if (mode == "undirected")
    params.treat_edges = EdgeTreatment::Undirected;
  else if (mode == "directed")
    params.treat_edges = EdgeTreatment::Directed;
  else
    bad_key("mode", "must be undirected|directed");
  want_range(params.max_iter >= 1, "max_iter", "[1,inf)");

  RetweetGraph g = load_graph(graph_path);
  SeedSet seeds = load_seeds(seeds_path, dim);
  LpaResult result = propagate_labels(g, seeds, params);
  write_labels_csv(g, result, dim, out);

  json log;
  log["changes_per_sweep"] = result.changes_per_sweep;
  log["converged"] = result.converged;
  log["clamped_seeds"] = result.clamped_seeds;
  log["missing_seeds"] = result.missing_seeds;
  int folds = static_cast<int>(opt_int(cfg, "eval_folds", 0));
  if (folds > 0) {
    HoldoutReport report = holdout_eval(g, seeds, folds, params.rng_seed, params);
    log["holdout"] = {{"folds", folds},
                      {"accuracy", report.accuracy},
                      {"precision", report.precision},
                      {"recall", report.recall},
                      {"f1", report.f1},
                      {"n_seeds", report.n_seeds_evaluated}};
  }
  std::string log_path = sidecar(out, ".log.json");
  {
    std::ofstream l(log_path, std::ios::binary);
    if (!l) throw std::runtime_error("cannot write '" + log_path + "'");
    l << log.dump(2) << '\n';
  }

  ManifestBuilder mb;
  mb.input("graph", graph_path);
  mb.input("seeds", seeds_path);
  mb.output(out);
  mb.output(log_path);
  json effective = cfg;
  effective["mode"] = mode;
  return mb.finish("lpa", effective, out + ".manifest.json");
}

StageResult stage_features_bow(const json& cfg) {
  std::string users_path = want_string(cfg, "users");
  std::string out = want_string(cfg, "out");
  Dimension dim = want_dimension(cfg, "dim");
  want_input(users_path, "user aggregates", "ingest");
  auto k = static_cast<std::uint32_t>(opt_int(cfg, "k", 100));
  want_range(k >= 1, "k", "[1,inf)");
  std::string unit_name = opt_string(cfg, "cooccur", "per_tweet");
  CooccurUnit unit;
  if (unit_name == "per_tweet")
    unit = CooccurUnit::PerTweet;
  else if (unit_name == "per_user")
    unit = CooccurUnit::PerUser;
  else
    bad_key("cooccur", "must be per_tweet|per_user");

  UserStore store = load_user_store(users_path);
  BowSeeds seeds = BowSeeds::defaults_for(dim);
  if (cfg.contains("seeds_pos")) seeds.pos = cfg.at("seeds_pos").get<std::vector<std::string>>();
  if (cfg.contains("seeds_neg")) seeds.neg = cfg.at("seeds_neg").get<std::vector<std::string>>();

  std::vector<std::string> warnings;
  HashtagVocab vocab = cooccur_vocab(store, seeds, k, unit, &warnings);
  if (vocab.vocab.empty())
    throw ValidationError("co-occurrence produced an empty vocabulary; check the seeds");
  TfidfResult tfidf = tfidf_features(store, vocab);

  write_sparse_csv(tfidf.features, out);
  std::string vocab_path = opt_string(cfg, "vocab_out", sidecar(out, ".vocab.json"));
  save_vocab(vocab, vocab_path);

  ManifestBuilder mb;
  mb.input("users", users_path);
  mb.output(out);
  mb.output(vocab_path);
  json effective = cfg;
  effective["cooccur"] = unit_name;
  effective["k"] = k;
  effective["warnings"] = warnings;
  effective["excluded_users"] = tfidf.excluded_users;
  effective["vocab_size"] = vocab.vocab.size();
  return mb.finish("features_bow", effective, out + ".manifest.json");
}

StageResult stage_features_lda(const json& cfg) {
  std::string users_path = want_string(cfg, "users");
  std::string out = want_string(cfg, "out");
  want_input(users_path, "user aggregates", "ingest");

  LdaParams params;
  params.topics = static_cast<std::uint32_t>(opt_int(cfg, "k", 20));
  params.alpha = opt_number(cfg, "alpha", 0.0);
  params.beta = opt_number(cfg, "beta", 0.01);
  params.sweeps = static_cast<std::uint32_t>(opt_int(cfg, "sweeps", 1000));
  params.burn_in = static_cast<std::uint32_t>(opt_int(cfg, "burn_in", 200));
  params.rng_seed = static_cast<std::uint64_t>(opt_int(cfg, "rng", 7));
  auto min_users = static_cast<std::uint32_t>(opt_int(cfg, "min_users", 10));
  double max_frac = opt_number(cfg, "max_frac", 0.75);
  want_range(params.topics >= 2 && params.topics <= 255, "k", "[2,255]");
  want_range(params.burn_in < params.sweeps, "burn_in", "[0,sweeps)");
  want_range(min_users >= 1, "min_users", "[1,inf)");
  want_range(max_frac > 0 && max_frac <= 1, "max_frac", "(0,1]");

  UserStore store = load_user_store(users_path);
  HashtagDocCorpus corpus = build_hashtag_corpus(store, min_users, max_frac);

  json effective = cfg;
  if (cfg.contains("k_sweep") && opt_bool(cfg, "k_sweep", false)) {
    auto sweep = sweep_topic_counts(corpus, {5, 10, 15, 20, 25, 30}, params);
    json js = json::array();
    for (auto& [k, c] : sweep) js.push_back({{"k", k}, {"coherence", c}});
    effective["k_sweep_result"] = js;
  }

  TopicModel model = fit_lda(corpus, params);
  CoherenceReport coh = coherence(model, corpus);
  InferParams infer;
  infer.rng_seed = params.rng_seed;
  std::vector<AffinityVector> affinities = infer_corpus_affinities(model, corpus, infer);
  write_affinity_csv(affinities, out);
  std::string model_path = opt_string(cfg, "model_out", sidecar(out, ".model.json"));
  save_topic_model(model, model_path);

  ManifestBuilder mb;
  mb.input("users", users_path);
  mb.output(out);
  mb.output(model_path);
  effective["coherence_mean"] = coh.mean;
  effective["vocab_size"] = corpus.vocab.size();
  effective["dropped_docs"] = corpus.dropped_docs;
  return mb.finish("features_lda", effective, out + ".manifest.json");
}

StageResult stage_features_embed(const json& cfg) {
  std::string users_path = want_string(cfg, "users");
  std::string vectors_path = want_string(cfg, "vectors");
  std::string out = want_string(cfg, "out");
  want_input(users_path, "user aggregates", "ingest");
  want_input(vectors_path, "vector table", "");

  UserStore store = load_user_store(users_path);
  std::vector<std::string> warnings;
  EmbeddingTable table = load_vectors(vectors_path, &warnings);
  std::set<std::string> stopwords;
  std::string stop_path = opt_string(cfg, "stopwords", "");
  stopwords = stop_path.empty() ? default_stopwords() : load_stopwords(stop_path);

  std::vector<DocEmbedding> rows;
  std::uint64_t no_match = 0;
  for (const auto& user : store.users) {
    auto tokens = preprocess_text(user.doc_text, stopwords);
    if (auto doc = embed_document(tokens, table, user.user_id))
      rows.push_back(std::move(*doc));
    else
      ++no_match;
  }
  write_embedding_csv(rows, table.dim, out);

  ManifestBuilder mb;
  mb.input("users", users_path);
  mb.input("vectors", vectors_path);
  if (!stop_path.empty()) mb.input("stopwords", stop_path);
  mb.output(out);
  json effective = cfg;
  effective["dim"] = table.dim;
  effective["users_without_match"] = no_match;
  effective["warnings"] = warnings;
  return mb.finish("features_embed", effective, out + ".manifest.json");
}

// score bins -> binary labels for one dimension (pos=1, neg=0); unbinned drop
std::map<std::string, int> labels_from_scores(const std::string& scores_path, Dimension dim) {
  auto per_dim = read_scores_csv(scores_path);
  std::map<std::string, int> labels;
  for (const auto& s : per_dim[static_cast<std::size_t>(dim)]) {
    if (s.bin == Bin::PosPole) labels[s.user_id] = 1;
    if (s.bin == Bin::NegPole) labels[s.user_id] = 0;
  }
  return labels;
}

StageResult stage_train(const json& cfg) {
  std::string features_path = want_string(cfg, "features");
  std::string labels_path = want_string(cfg, "labels");
  std::string out = want_string(cfg, "out");
  Dimension dim = want_dimension(cfg, "dim");
  want_input(features_path, "features", "features");
  want_input(labels_path, "labels", "score");
  int folds = static_cast<int>(opt_int(cfg, "folds", 5));
  want_range(folds >= 2, "folds", "[2,inf)");

  TrainParams params;
  params.lr = opt_number(cfg, "lr", 0.1);
  params.l2 = opt_number(cfg, "l2", 1e-4);
  params.epochs = static_cast<std::uint32_t>(opt_int(cfg, "epochs", 200));
  params.rng_seed = static_cast<std::uint64_t>(opt_int(cfg, "rng", 0));
  want_range(params.lr > 0, "lr", "(0,inf)");
  want_range(params.l2 >= 0, "l2", "[0,inf)");

  FeatureKind detected = FeatureKind::EMBED;
  FeatureMatrix X_all = load_feature_csv(features_path, &detected);
  FeatureKind kind = detected;
  if (cfg.contains("kind")) {
    auto k = feature_kind_from_string(want_string(cfg, "kind"));
    if (!k) bad_key("kind", "must be bow|lda|embed");
    kind = *k;
  }
  const bool standardize = kind != FeatureKind::BOW;

  std::map<std::string, int> labels = labels_from_scores(labels_path, dim);
  FeatureMatrix X;
  X.dim = X_all.dim;
  std::vector<int> y;
  for (std::size_t i = 0; i < X_all.size(); ++i) {
    auto it = labels.find(X_all.user_ids[i]);
    if (it == labels.end()) continue;
    X.rows.push_back(X_all.rows[i]);
    X.user_ids.push_back(X_all.user_ids[i]);
    y.push_back(it->second);
  }
  if (X.size() == 0)
    throw ValidationError("no feature rows match binned users in '" + labels_path + "'");

  EvalReport eval = kfold_cv(X, y, folds, params, kind, dim, standardize);
  LogRegModel model = train_logreg(X, y, params, kind, dim, standardize);
  model.feature_hash = file_fnv1a_hex(features_path);
  save_model(model, &eval, out);

  ManifestBuilder mb;
  mb.input("features", features_path);
  mb.input("labels", labels_path);
  mb.output(out);
  json effective = cfg;
  effective["kind"] = std::string(to_string(kind));
  effective["dataset_size"] = eval.dataset_size;
  effective["cv_accuracy"] = eval.mean.accuracy;
  return mb.finish("train", effective, out + ".manifest.json");
}

StageResult stage_classify(const json& cfg) {
  std::string model_path = want_string(cfg, "model");
  std::string features_path = want_string(cfg, "features");
  std::string out = want_string(cfg, "out");
  want_input(model_path, "model", "train");
  want_input(features_path, "features", "features");

  LogRegModel model = load_model(model_path);
  FeatureMatrix X = load_feature_csv(features_path);
  if (X.dim != model.weights.size())
    throw ValidationError("feature dimensionality " + std::to_string(X.dim) +
                          " does not match model (" + std::to_string(model.weights.size()) + ")");

  std::ofstream o(out, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write '" + out + "'");
  o << "user_id,prob,label\n";
  for (std::size_t i = 0; i < X.size(); ++i) {
    double p = predict_proba(model, X.rows[i]);
    o << X.user_ids[i] << ',' << format_double(p) << ','
      << pole_name(model.dimension, predict_label(p) == 1 ? +1 : -1) << '\n';
  }
  o.close();
  if (!o) throw std::runtime_error("write to '" + out + "' failed");

  ManifestBuilder mb;
  mb.input("model", model_path);
  mb.input("features", features_path);
  mb.output(out);
  return mb.finish("classify", cfg, out + ".manifest.json");
}

// labels file from either classify (user_id,prob,label) or lpa (user_id,label)
std::map<std::string, int> read_pole_labels(const std::string& path, Dimension dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open labels '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("labels '" + path + "' is empty");
  int label_col;
  if (header.rfind("user_id,prob,label", 0) == 0)
    label_col = 2;
  else if (header.rfind("user_id,label", 0) == 0)
    label_col = 1;
  else
    throw ValidationError("'" + path + "' is not a labels file");
  std::map<std::string, int> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) <= label_col) continue;
    auto pole = pole_from_label(dim, f[static_cast<std::size_t>(label_col)]);
    if (!pole)
      throw ValidationError("'" + path + "': label '" + f[static_cast<std::size_t>(label_col)] +
                            "' is not a " + std::string(to_string(dim)) + " pole");
    out[f[0]] = *pole;
  }
  return out;
}

StageResult stage_analyze(const json& cfg) {
  std::string users_path = want_string(cfg, "users");
  std::string catalog_dir = want_string(cfg, "catalog_dir");
  std::string scores_path = want_string(cfg, "scores");
  std::string out_dir = want_string(cfg, "out_dir");
  want_input(users_path, "user aggregates", "ingest");
  want_input(scores_path, "scores", "score");
  auto min_domains = static_cast<std::uint32_t>(opt_int(cfg, "min_domains", 3));
  auto bins = static_cast<std::uint32_t>(opt_int(cfg, "bins", 20));
  auto min_state_users = static_cast<std::uint64_t>(opt_int(cfg, "min_state_users", 50));
  auto k_hashtags = static_cast<std::uint32_t>(opt_int(cfg, "k_hashtags", 50));
  want_range(bins >= 1, "bins", "[1,inf)");
  want_range(k_hashtags >= 1, "k_hashtags", "[1,inf)");

  UserStore store = load_user_store(users_path);
  CatalogFamily catalogs = load_catalog_dir(catalog_dir);
  auto per_dim_scores = read_scores_csv(scores_path);

  // pole labels per dimension: classifier output when provided, else bins
  auto poles_for = [&](Dimension dim, const char* key) {
    std::string path = opt_string(cfg, key, "");
    if (!path.empty()) {
      want_input(path, "labels", "classify");
      return read_pole_labels(path, dim);
    }
    std::map<std::string, int> out;
    for (const auto& s : per_dim_scores[static_cast<std::size_t>(dim)]) {
      if (s.bin == Bin::PosPole) out[s.user_id] = +1;
      if (s.bin == Bin::NegPole) out[s.user_id] = -1;
    }
    return out;
  };
  GroupAssignments groups =
      assign_groups(poles_for(Dimension::Science, "labels_science"),
                    poles_for(Dimension::Moderacy, "labels_moderacy"),
                    poles_for(Dimension::Political, "labels_political"));

  fs::create_directories(out_dir);
  ManifestBuilder mb;
  mb.input("users", users_path);
  mb.input("scores", scores_path);

  std::vector<DeltaSeries> drift;
  for (Dimension dim : kAllDimensions) drift.push_back(delta_series(store, catalogs.of(dim)));
  write_delta_series_csv(drift, out_dir + "/delta_series.csv");
  mb.output(out_dir + "/delta_series.csv");

  write_activity_csv(group_activity_series(groups, store), out_dir + "/group_activity.csv");
  mb.output(out_dir + "/group_activity.csv");

  write_group_hashtags_csv(top_group_hashtags(groups, store, k_hashtags),
                           out_dir + "/group_hashtags.csv");
  mb.output(out_dir + "/group_hashtags.csv");

  write_state_fractions_csv(state_fractions(groups, store, min_state_users),
                            out_dir + "/state_fractions.csv");
  mb.output(out_dir + "/state_fractions.csv");

  auto table = cross_dimension_table(per_dim_scores[0], per_dim_scores[1], per_dim_scores[2],
                                     min_domains);
  std::vector<HeatmapGrid> grids;
  grids.push_back(score_heatmap(table, bins, Dimension::Science, Dimension::Political));
  grids.push_back(score_heatmap(table, bins, Dimension::Science, Dimension::Moderacy));
  write_heatmaps_json(grids, out_dir + "/heatmaps.json");
  mb.output(out_dir + "/heatmaps.json");

  write_groups_csv(groups, out_dir + "/groups.csv");
  mb.output(out_dir + "/groups.csv");

  json effective = cfg;
  effective["n_grouped_users"] = groups.group_of.size();
  effective["cross_dimension_users"] = table.size();
  return mb.finish("analyze", effective, out_dir + "/manifest.json");
}

StageResult stage_report(const json& cfg) {
  std::string analysis_dir = want_string(cfg, "analysis_dir");
  std::string out_dir = want_string(cfg, "out_dir");

  const char* kAnalysisFiles[] = {"delta_series.csv", "group_activity.csv",
                                  "group_hashtags.csv", "state_fractions.csv", "heatmaps.json"};
  std::vector<std::string> missing;
  for (const char* name : kAnalysisFiles)
    if (!file_exists(analysis_dir + "/" + name)) missing.push_back(name);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("analysis outputs missing: " + list +
                          "; run the analyze stage first");
  }

  fs::create_directories(out_dir);
  ManifestBuilder mb;
  for (const char* name : kAnalysisFiles) {
    std::string src = analysis_dir + "/" + name;
    std::string dst = out_dir + "/" + name;
    mb.input(name, src);
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
    mb.output(dst);
  }

  // eval rows from the trained model artifacts; absent kinds get a note
  json eval_rows = json::array();
  json notes = json::array();
  std::set<std::string> covered;
  if (cfg.contains("models")) {
    for (const auto& entry : cfg.at("models")) {
      std::string path = entry.get<std::string>();
      want_input(path, "model", "train");
      mb.input(fs::path(path).filename().string(), path);
      EvalReport eval;
      LogRegModel model = load_model(path, &eval);
      json row;
      row["dimension"] = std::string(to_string(model.dimension));
      row["feature_kind"] = std::string(to_string(model.feature_kind));
      row["dataset_size"] = eval.dataset_size;
      row["accuracy"] = eval.mean.accuracy;
      row["precision"] = eval.mean.precision;
      row["recall"] = eval.mean.recall;
      row["f1"] = eval.mean.f1;
      eval_rows.push_back(std::move(row));
      covered.insert(std::string(to_string(model.feature_kind)) + "/" +
                     std::string(to_string(model.dimension)));
    }
  }
  for (FeatureKind kind : {FeatureKind::BOW, FeatureKind::LDA, FeatureKind::EMBED})
    for (Dimension dim : kAllDimensions) {
      std::string key = std::string(to_string(kind)) + "/" + std::string(to_string(dim));
      if (!covered.count(key)) notes.push_back("no " + key + " model provided; row omitted");
    }
  json eval_report = {{"rows", eval_rows}, {"notes", notes}};
  {
    std::ofstream e(out_dir + "/eval_reports.json", std::ios::binary);
    if (!e) throw std::runtime_error("cannot write eval_reports.json");
    e << eval_report.dump(2) << '\n';
  }
  mb.output(out_dir + "/eval_reports.json");

  json versions = {{"artifact", "polarlens"}, {"version", kVersion}};
  {
    std::ofstream v(out_dir + "/versions.json", std::ios::binary);
    if (!v) throw std::runtime_error("cannot write versions.json");
    v << versions.dump(2) << '\n';
  }
  mb.output(out_dir + "/versions.json");

  return mb.finish("report", cfg, out_dir + "/manifest.json");
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "synth",        "ingest",       "score",          "graph",
      "lpa",          "features_bow", "features_lda",   "features_embed",
      "train",        "classify",     "analyze",        "report"};
  return names;
}

StageResult run_stage(const std::string& stage, const nlohmann::json& config) {
  if (!config.is_object()) throw ValidationError("stage config must be a JSON object");
  if (stage == "synth") return stage_synth(config);
  if (stage == "ingest") return stage_ingest(config);
  if (stage == "score") return stage_score(config);
  if (stage == "graph") return stage_graph(config);
  if (stage == "lpa") return stage_lpa(config);
  if (stage == "features_bow") return stage_features_bow(config);
  if (stage == "features_lda") return stage_features_lda(config);
  if (stage == "features_embed") return stage_features_embed(config);
  if (stage == "train") return stage_train(config);
  if (stage == "classify") return stage_classify(config);
  if (stage == "analyze") return stage_analyze(config);
  if (stage == "report") return stage_report(config);
  throw ValidationError("unknown stage '" + stage + "'");
}

nlohmann::json kv_config_for_stage(const std::string& path, const std::string& stage) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  nlohmann::json cfg = nlohmann::json::object();
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
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ValidationError(path + ":" + std::to_string(lineno) + ": empty key");
    auto dot = key.find('.');
    if (dot != std::string::npos) {
      if (key.substr(0, dot) != stage) continue;  // another stage's namespace
      key = key.substr(dot + 1);
    }
    cfg[key] = value;  // strings; stage readers coerce
  }
  return cfg;
}

}  // namespace polarlens
