#include "polarlens/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "polarlens/io_util.hpp"

namespace polarlens {

std::optional<std::uint32_t> RetweetGraph::index_of(std::string_view user_id) const {
  auto it = std::lower_bound(node_ids.begin(), node_ids.end(), user_id);
  if (it != node_ids.end() && *it == user_id)
    return static_cast<std::uint32_t>(it - node_ids.begin());
  return std::nullopt;
}

void RetweetGraph::finalize_adjacency() {
  const std::size_t n = node_ids.size();
  out_offsets.assign(n + 1, 0);
  in_offsets.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++out_offsets[e.src + 1];
    ++in_offsets[e.dst + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets[i + 1] += out_offsets[i];
    in_offsets[i + 1] += in_offsets[i];
  }
  out_nbr.resize(edges.size());
  out_w.resize(edges.size());
  in_nbr.resize(edges.size());
  in_w.resize(edges.size());
  std::vector<std::uint32_t> out_pos(out_offsets.begin(), out_offsets.end() - 1);
  std::vector<std::uint32_t> in_pos(in_offsets.begin(), in_offsets.end() - 1);
  for (const auto& e : edges) {
    out_nbr[out_pos[e.src]] = e.dst;
    out_w[out_pos[e.src]++] = e.weight;
    in_nbr[in_pos[e.dst]] = e.src;
    in_w[in_pos[e.dst]++] = e.weight;
  }
}

void GraphBuilder::add(const TweetRecord& rec) {
  if (rec.retweeted_user_id && *rec.retweeted_user_id != rec.user_id)
    ++weights_[{rec.user_id, *rec.retweeted_user_id}];
}

void GraphBuilder::add_edge(const std::string& retweeter, const std::string& retweeted,
                            std::uint32_t weight) {
  if (retweeter != retweeted) weights_[{retweeter, retweeted}] += weight;
}

void GraphBuilder::add_node(const std::string& user_id) { extra_nodes_.insert(user_id); }

RetweetGraph GraphBuilder::finalize() && {
  RetweetGraph g;
  std::set<std::string> ids = std::move(extra_nodes_);
  for (const auto& [key, w] : weights_) {
    ids.insert(key.first);
    ids.insert(key.second);
  }
  g.node_ids.assign(ids.begin(), ids.end());
  g.edges.reserve(weights_.size());
  for (const auto& [key, w] : weights_) {
    RetweetGraph::Edge e;
    e.src = *g.index_of(key.first);
    e.dst = *g.index_of(key.second);
    e.weight = static_cast<std::uint32_t>(std::min<std::uint64_t>(w, UINT32_MAX));
    g.total_retweets += e.weight;
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  g.finalize_adjacency();
  return g;
}

RetweetGraph build_graph_from_file(const std::string& corpus_path, const SchemaConfig& schema,
                                   const WindowSpec& window) {
  GraphBuilder builder;
  for_each_record(corpus_path, schema, window,
                  [&](TweetRecord&& rec) { builder.add(rec); });
  return std::move(builder).finalize();
}

namespace {
constexpr char kGraphMagic[4] = {'P', 'L', 'Z', 'G'};
constexpr std::uint32_t kGraphVersion = 1;
}  // namespace

void save_graph(const RetweetGraph& g, const std::string& path) {
  BinWriter w(path);
  w.raw(kGraphMagic, 4);
  w.u32(kGraphVersion);
  w.u64(g.node_ids.size());
  w.u64(g.edges.size());
  w.u64(g.total_retweets);
  for (const auto& id : g.node_ids) w.str(id);
  for (const auto& e : g.edges) {
    w.u32(e.src);
    w.u32(e.dst);
    w.u32(e.weight);
  }
  w.close();
}

RetweetGraph load_graph(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kGraphMagic, "graph");
  std::uint32_t version = r.u32();
  if (version != kGraphVersion)
    throw ValidationError("graph artifact version " + std::to_string(version) + " unsupported");
  RetweetGraph g;
  std::uint64_t nn = r.u64(), ne = r.u64();
  g.total_retweets = r.u64();
  g.node_ids.reserve(nn);
  for (std::uint64_t i = 0; i < nn; ++i) g.node_ids.push_back(r.str());
  g.edges.reserve(ne);
  for (std::uint64_t i = 0; i < ne; ++i) {
    RetweetGraph::Edge e;
    e.src = r.u32();
    e.dst = r.u32();
    e.weight = r.u32();
    if (e.src >= nn || e.dst >= nn) throw ValidationError("graph artifact has bad edge index");
    g.edges.push_back(e);
  }
  g.finalize_adjacency();
  return g;
}

SeedSet load_seeds(const std::string& path, Dimension dimension) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open seeds '" + path + "'");
  SeedSet seeds;
  seeds.dimension = dimension;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 2)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected user_id<TAB>pole");
    std::string id = fields[0];
    if (!id.empty() && id[0] == '@') id.erase(0, 1);  // handles allowed
    auto pole = pole_from_label(dimension, fields[1]);
    if (!pole)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": label '" + fields[1] +
                            "' is not a " + std::string(to_string(dimension)) + " pole");
    auto [it, inserted] = seeds.label_of.emplace(id, *pole);
    if (!inserted && it->second != *pole)
      throw ValidationError("seed '" + id + "' listed with both poles");
  }
  if (seeds.label_of.empty()) throw ValidationError("seed file '" + path + "' has no entries");
  return seeds;
}

void save_seeds(const SeedSet& seeds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& [id, pole] : seeds.label_of)
    out << id << '\t' << pole_name(seeds.dimension, pole) << '\n';
}

namespace {

struct SeedIndex {
  std::vector<std::uint32_t> nodes;  // graph indices of in-graph seeds
  std::vector<int8_t> labels;        // parallel to nodes
  std::uint32_t missing = 0;
};

SeedIndex index_seeds(const RetweetGraph& g, const SeedSet& seeds) {
  SeedIndex idx;
  for (const auto& [id, pole] : seeds.label_of) {
    if (auto node = g.index_of(id)) {
      idx.nodes.push_back(*node);
      idx.labels.push_back(static_cast<int8_t>(pole));
    } else {
      ++idx.missing;
    }
  }
  return idx;
}

LpaResult propagate_indexed(const RetweetGraph& g, const SeedIndex& idx, const LpaParams& params) {
  const std::size_t n = g.node_count();
  LpaResult result;
  result.labels.assign(n, 0);
  std::vector<bool> clamped(n, false);

  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < idx.nodes.size(); ++i) {
    result.labels[idx.nodes[i]] = idx.labels[i];
    clamped[idx.nodes[i]] = true;
    (idx.labels[i] > 0 ? has_pos : has_neg) = true;
  }
  result.clamped_seeds = static_cast<std::uint32_t>(idx.nodes.size());
  result.missing_seeds = idx.missing;
  if (!has_pos || !has_neg)
    throw ValidationError("label propagation needs at least one in-graph seed per pole");

  std::mt19937_64 rng(params.rng_seed);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  const bool undirected = params.treat_edges == EdgeTreatment::Undirected;
  for (int sweep = 0; sweep < params.max_iter; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    std::uint64_t changes = 0;
    for (std::uint32_t v : order) {
      if (clamped[v]) continue;
      // integer weight tallies keep the vote exact and order-independent
      std::uint64_t w_pos = 0, w_neg = 0;
      auto tally = [&](std::uint32_t nbr, std::uint32_t w) {
        int8_t lab = result.labels[nbr];
        if (lab > 0)
          w_pos += w;
        else if (lab < 0)
          w_neg += w;
      };
      for (std::uint32_t i = g.out_offsets[v]; i < g.out_offsets[v + 1]; ++i)
        tally(g.out_nbr[i], g.out_w[i]);
      if (undirected)
        for (std::uint32_t i = g.in_offsets[v]; i < g.in_offsets[v + 1]; ++i)
          tally(g.in_nbr[i], g.in_w[i]);

      if (w_pos == 0 && w_neg == 0) continue;  // unlabeled neighbors cast no vote
      int8_t next;
      if (w_pos > w_neg) {
        next = 1;
      } else if (w_neg > w_pos) {
        next = -1;
      } else if (result.labels[v] != 0) {
        next = result.labels[v];  // current label is among the tied winners
      } else {
        next = (rng() & 1) ? 1 : -1;
      }
      if (next != result.labels[v]) {
        result.labels[v] = next;
        ++changes;
      }
    }
    result.changes_per_sweep.push_back(changes);
    if (changes == 0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace

LpaResult propagate_labels(const RetweetGraph& g, const SeedSet& seeds, const LpaParams& params) {
  return propagate_indexed(g, index_seeds(g, seeds), params);
}

namespace {

double safe_div(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void fill_fold_metrics(HoldoutFold& f) {
  const auto& c = f.confusion;
  f.accuracy = safe_div(c.tp + c.tn, c.total());
  f.precision = safe_div(c.tp, c.tp + c.fp);
  f.recall = safe_div(c.tp, c.tp + c.fn);
  f.f1 = (f.precision + f.recall) > 0 ? 2 * f.precision * f.recall / (f.precision + f.recall) : 0;
}

}  // namespace

HoldoutReport holdout_eval(const RetweetGraph& g, const SeedSet& seeds, int folds,
                           std::uint64_t rng_seed, const LpaParams& params) {
  if (folds < 2) throw ValidationError("holdout_eval needs folds >= 2");
  SeedIndex idx = index_seeds(g, seeds);

  std::vector<std::size_t> pos, neg;  // positions into idx
  for (std::size_t i = 0; i < idx.nodes.size(); ++i)
    (idx.labels[i] > 0 ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(folds) || neg.size() < static_cast<std::size_t>(folds))
    throw ValidationError("each pole needs at least `folds` in-graph seeds");

  std::mt19937_64 rng(rng_seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  // round-robin deal keeps folds stratified within one seed per pole
  std::vector<std::vector<std::size_t>> fold_members(folds);
  for (std::size_t i = 0; i < pos.size(); ++i) fold_members[i % folds].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) fold_members[i % folds].push_back(neg[i]);

  HoldoutReport report;
  for (int f = 0; f < folds; ++f) {
    std::vector<bool> held(idx.nodes.size(), false);
    for (std::size_t m : fold_members[f]) held[m] = true;
    SeedIndex train;
    train.missing = idx.missing;
    for (std::size_t i = 0; i < idx.nodes.size(); ++i) {
      if (held[i]) continue;
      train.nodes.push_back(idx.nodes[i]);
      train.labels.push_back(idx.labels[i]);
    }
    LpaParams fold_params = params;
    fold_params.rng_seed = rng_seed + 1 + static_cast<std::uint64_t>(f);
    LpaResult run = propagate_indexed(g, train, fold_params);

    HoldoutFold fold;
    for (std::size_t m : fold_members[f]) {
      int8_t truth = idx.labels[m];
      int8_t pred = run.labels[idx.nodes[m]];
      if (pred == 0) {
        ++fold.unlabeled_holdouts;
        pred = static_cast<int8_t>(-truth);  // unrecovered counts as wrong
      }
      if (truth > 0)
        (pred > 0 ? fold.confusion.tp : fold.confusion.fn) += 1;
      else
        (pred > 0 ? fold.confusion.fp : fold.confusion.tn) += 1;
    }
    fill_fold_metrics(fold);
    report.folds.push_back(fold);
  }

  for (const auto& f : report.folds) {
    report.confusion.tp += f.confusion.tp;
    report.confusion.fp += f.confusion.fp;
    report.confusion.tn += f.confusion.tn;
    report.confusion.fn += f.confusion.fn;
    report.accuracy += f.accuracy;
    report.precision += f.precision;
    report.recall += f.recall;
    report.f1 += f.f1;
  }
  const double nf = static_cast<double>(folds);
  report.accuracy /= nf;
  report.precision /= nf;
  report.recall /= nf;
  report.f1 /= nf;
  report.n_seeds_evaluated = idx.nodes.size();
  return report;
}

void write_labels_csv(const RetweetGraph& g, const LpaResult& result, Dimension dim,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "user_id,label\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (result.labels[i] == 0) continue;  // unreachable nodes stay unlabeled
    out << g.node_ids[i] << ',' << pole_name(dim, result.labels[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::map<std::string, int> read_labels_csv(const std::string& path, Dimension dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open labels '" + path + "'");
  std::map<std::string, int> labels;
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,label", 0) != 0)
    throw ValidationError("'" + path + "' is not a labels file");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
    auto pole = pole_from_label(dim, f[1]);
    if (!pole)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": label '" + f[1] +
                            "' is not a " + std::string(to_string(dim)) + " pole");
    labels[f[0]] = *pole;
  }
  return labels;
}

}  // namespace polarlens
