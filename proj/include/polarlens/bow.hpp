#pragma once
// Hashtag bag-of-words features: per-dimension vocabularies built from seed
// co-occurrence, turned into TF-IDF user vectors.

#include <cstdint>
#include <string>
#include <vector>

#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"

namespace polarlens {

struct BowSeeds {
  Dimension dimension = Dimension::Science;
  std::vector<std::string> pos;  // e.g. science: {"stayhome"}
  std::vector<std::string> neg;  // e.g. science: {"plandemic"}

  // The seed hashtags the study used per dimension.
  static BowSeeds defaults_for(Dimension dim);
};

// Co-occurrence counting unit: per tweet is the default (hashtags appearing
// in the same tweet as a seed); per user counts co-usage anywhere in a user's
// history.
enum class CooccurUnit { PerTweet, PerUser };

struct HashtagVocab {
  Dimension dimension = Dimension::Science;
  BowSeeds seeds;
  std::vector<std::string> vocab;  // ordered: pos-group ranking then neg-group, deduplicated
  std::vector<double> idf;         // parallel to vocab; filled by tfidf_features
  std::uint32_t k = 100;

  std::size_t size() const { return vocab.size(); }
};

// Ranks non-seed hashtags by how many tweets (or users) they share with any
// seed of a group, takes the top k per group and concatenates pos-then-neg,
// keeping first occurrence. Ties break lexicographically. A seed absent from
// the corpus is reported through `warnings`.
HashtagVocab cooccur_vocab(const UserStore& store, const BowSeeds& seeds, std::uint32_t k = 100,
                           CooccurUnit unit = CooccurUnit::PerTweet,
                           std::vector<std::string>* warnings = nullptr);

struct SparseFeatures {
  std::string user_id;
  std::vector<std::uint32_t> indices;  // strictly increasing vocab positions
  std::vector<double> values;          // > 0, parallel to indices
};

struct TfidfResult {
  std::vector<SparseFeatures> features;  // zero rows excluded
  std::uint64_t excluded_users = 0;      // users with no vocab hashtag
};

// tf = raw vocab-hashtag count for the user; idf = ln((1+N)/(1+df)) + 1 over
// the N users with at least one vocab hashtag. Fills vocab.idf so the model
// artifact reproduces inference bit-for-bit.
TfidfResult tfidf_features(const UserStore& store, HashtagVocab& vocab);

// Vocab artifact (JSON): ordered list, seeds, idf table.
void save_vocab(const HashtagVocab& vocab, const std::string& path);
HashtagVocab load_vocab(const std::string& path);

// Sparse triplet CSV: user_id,index,value
void write_sparse_csv(const std::vector<SparseFeatures>& rows, const std::string& path);
std::vector<SparseFeatures> read_sparse_csv(const std::string& path);

}  // namespace polarlens
