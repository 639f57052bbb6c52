#pragma once
// Synthetic corpus and graph generation with planted ground truth. Emits the
// production record format so every pipeline stage can be exercised end to
// end, plus planted-partition graphs for label-propagation recovery tests.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polarlens/catalog.hpp"
#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"
#include "polarlens/embed.hpp"
#include "polarlens/graph.hpp"

namespace polarlens {

struct SynthSpec {
  std::uint32_t n_users = 600;
  std::uint64_t rng_seed = 42;
  std::map<IdeologyGroup, double> mixture;  // empty -> uniform over the six groups

  // planted-partition retweet edges over the hardline (science, political)
  // communities; moderates attach to the hardliners of their science pole,
  // both political sides alike
  double p_in = 0.05;
  double p_out = 0.002;
  double p_moderate_attach = -1;  // < 0 -> p_in / 4

  std::uint32_t tweets_per_user = 8;     // hashtag/text tweets
  std::uint32_t domains_per_dim = 7;     // catalog shares per relevant dimension
  double offpole_rate = 0.0;             // chance a domain share flips poles
  std::uint32_t hashtags_per_tweet = 2;
  std::uint32_t tokens_per_tweet = 8;
  std::uint32_t seeds_per_pole = 0;      // 0 -> max(10, n_users / 50)
  std::uint32_t catalog_domains_per_pole = 30;
  std::uint32_t embed_dim = 16;
  bool moderate_political_balance = true;  // moderates share balanced L/R domains
  std::string window = "2020-01-21:2020-05-01";

  static SynthSpec from_json_file(const std::string& path);
  void validate() const;
};

struct SynthTruth {
  IdeologyGroup group = IdeologyGroup::ProSciLeft;
  int science_pole = 0;
  std::optional<int> political_pole;  // unset for moderates
  int moderacy_pole = 0;
  std::string state;
};

struct SynthData {
  std::vector<TweetRecord> records;
  std::map<std::string, SynthTruth> truth;
  CatalogFamily catalogs;
  SeedSet seeds_science, seeds_political, seeds_moderacy;
  EmbeddingTable vectors;
  WindowSpec window;
};

// Deterministic for a fixed rng_seed; identical specs generate byte-identical
// corpora when written.
SynthData generate(const SynthSpec& spec);

// Writes corpus.jsonl + truth.csv, and when aux_dir is non-empty also
// catalogs/, seeds/, vectors.txt and stopwords.txt beneath it.
void write_synth(const SynthData& data, const std::string& corpus_path,
                 const std::string& truth_path, const std::string& aux_dir = "");

std::map<std::string, SynthTruth> read_truth_csv(const std::string& path);

struct PlantedGraph {
  RetweetGraph graph;
  std::vector<int8_t> labels;  // +1 / -1 planted community per node
  SeedSet seeds;               // seed_frac per pole, clamped pole labels
};

// Two equal communities with edge probabilities p_in within and p_out across;
// the classic recovery oracle for label propagation.
PlantedGraph make_planted_graph(std::uint32_t n_nodes, double p_in, double p_out,
                                double seed_frac, std::uint64_t rng_seed,
                                Dimension dim = Dimension::Science);

}  // namespace polarlens
