#pragma once
// Retweet network and seed-clamped label propagation. An edge runs from the
// retweeter to the retweeted user, weighted by how often; propagation spreads
// the two pole labels of one dimension from clamped seed nodes.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"

namespace polarlens {

struct RetweetGraph {
  struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::uint32_t weight = 0;
  };

  std::vector<std::string> node_ids;  // sorted; index is the node handle
  std::vector<Edge> edges;            // sorted by (src, dst); no self-loops

  // CSR adjacency, built by finalize()
  std::vector<std::uint32_t> out_offsets, out_nbr, out_w;
  std::vector<std::uint32_t> in_offsets, in_nbr, in_w;

  std::uint64_t total_retweets = 0;  // sum of edge weights

  std::size_t node_count() const { return node_ids.size(); }
  std::size_t edge_count() const { return edges.size(); }
  std::optional<std::uint32_t> index_of(std::string_view user_id) const;
  void finalize_adjacency();
};

// Builds the weighted simple digraph from records: parallel retweets collapse
// into the edge weight, self-retweets are dropped. Node indexing is canonical
// (sorted by user id) so identical corpora give identical graphs regardless
// of record order.
class GraphBuilder {
 public:
  void add(const TweetRecord& rec);
  void add_edge(const std::string& retweeter, const std::string& retweeted,
                std::uint32_t weight = 1);
  void add_node(const std::string& user_id);  // keeps isolated nodes in the graph
  RetweetGraph finalize() &&;

 private:
  std::map<std::pair<std::string, std::string>, std::uint64_t> weights_;
  std::set<std::string> extra_nodes_;
};

RetweetGraph build_graph_from_file(const std::string& corpus_path, const SchemaConfig& schema,
                                   const WindowSpec& window);

void save_graph(const RetweetGraph& g, const std::string& path);
RetweetGraph load_graph(const std::string& path);

struct SeedSet {
  Dimension dimension = Dimension::Science;
  std::map<std::string, int> label_of;  // user id -> +1 / -1

  std::size_t count_pole(int pole) const {
    std::size_t n = 0;
    for (auto& [id, p] : label_of) n += (p == pole);
    return n;
  }
};

// TSV of `user_id<TAB>pole_label`. Unknown pole labels are a hard error;
// seeds missing from a graph are kept and reported at propagation time.
SeedSet load_seeds(const std::string& path, Dimension dimension);
void save_seeds(const SeedSet& seeds, const std::string& path);

enum class EdgeTreatment { Undirected, Directed };

struct LpaParams {
  int max_iter = 100;
  std::uint64_t rng_seed = 0;
  EdgeTreatment treat_edges = EdgeTreatment::Undirected;
};

struct LpaResult {
  // +1 / -1 per node; 0 = unlabeled (unreachable from any seed)
  std::vector<int8_t> labels;
  std::vector<std::uint64_t> changes_per_sweep;
  std::uint32_t clamped_seeds = 0;   // seeds found in the graph
  std::uint32_t missing_seeds = 0;   // seeds kept but absent from the graph
  bool converged = false;
};

// Asynchronous weighted-majority propagation in rng-shuffled node order.
// Seed labels never change; ties keep the current label when it is among the
// winners, otherwise draw uniformly from the tied labels. Deterministic for a
// fixed rng_seed. Throws ValidationError unless both poles are seeded in g.
LpaResult propagate_labels(const RetweetGraph& g, const SeedSet& seeds, const LpaParams& params);

struct HoldoutFold {
  Confusion confusion;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  std::uint64_t unlabeled_holdouts = 0;
};

struct HoldoutReport {
  std::vector<HoldoutFold> folds;
  Confusion confusion;  // summed
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;  // per-fold means
  std::size_t n_seeds_evaluated = 0;
};

// Stratified k-fold over the seeds present in the graph: held-out seeds run
// unlabeled, and a held-out seed the propagation leaves unlabeled counts as
// predicted-wrong (it lands in the confusion cell opposite its truth).
HoldoutReport holdout_eval(const RetweetGraph& g, const SeedSet& seeds, int folds,
                           std::uint64_t rng_seed, const LpaParams& params);

// labels.csv: user_id,label with pole names of the dimension
void write_labels_csv(const RetweetGraph& g, const LpaResult& result, Dimension dim,
                      const std::string& path);
std::map<std::string, int> read_labels_csv(const std::string& path, Dimension dim);

}  // namespace polarlens
