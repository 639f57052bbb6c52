#pragma once
// Topic modeling over per-user hashtag documents: collapsed Gibbs LDA,
// topic-affinity feature vectors and UMass coherence.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"

namespace polarlens {

struct HashtagDocCorpus {
  std::vector<std::string> vocab;                   // pruned hashtag vocabulary
  std::vector<std::vector<std::uint32_t>> docs;     // token ids per document
  std::vector<std::string> doc_user_ids;            // parallel to docs
  std::uint64_t dropped_docs = 0;                   // users whose tags were all pruned

  std::size_t vocab_size() const { return vocab.size(); }
};

// One document per user: the multiset of their hashtags, restricted to tags
// used by >= min_users users and <= max_frac of users. Users left with no
// tokens are dropped and counted.
HashtagDocCorpus build_hashtag_corpus(const UserStore& store, std::uint32_t min_users = 10,
                                      double max_frac = 0.75);

struct LdaParams {
  std::uint32_t topics = 20;
  double alpha = 0.0;  // 0 -> 50/K
  double beta = 0.01;
  std::uint32_t sweeps = 1000;
  std::uint32_t burn_in = 200;
  std::uint64_t rng_seed = 0;

  double resolved_alpha() const { return alpha > 0 ? alpha : 50.0 / topics; }
};

struct TopicModel {
  std::uint32_t topics = 0;
  double alpha = 0, beta = 0;
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> phi;  // topics x vocab, rows sum to 1
  std::vector<double> final_loglik;      // per recorded sweep
  std::uint64_t rng_seed = 0;
  std::uint32_t sweeps = 0, burn_in = 0;

  std::vector<std::pair<std::string, double>> top_words(std::uint32_t topic,
                                                        std::uint32_t n) const;
};

// Collapsed Gibbs sampler, stepped one full sweep at a time so callers can
// watch counts between sweeps. Deterministic for a fixed seed.
class GibbsSampler {
 public:
  GibbsSampler(const HashtagDocCorpus& corpus, const LdaParams& params);

  void sweep();
  void accumulate();  // record current counts into the phi estimate
  TopicModel finalize() const;

  std::uint32_t topics() const { return K_; }
  // current count of word w assigned to topic k (token-conservation checks)
  std::uint64_t topic_word_count(std::uint32_t k, std::uint32_t w) const {
    return n_kw_[static_cast<std::size_t>(k) * V_ + w];
  }
  std::uint64_t topic_count(std::uint32_t k) const { return n_k_[k]; }
  double loglik() const;

 private:
  const HashtagDocCorpus& corpus_;
  LdaParams params_;
  std::uint32_t K_, V_;
  double alpha_;
  std::vector<std::vector<std::uint8_t>> z_;  // K <= 255 topic assignment per token
  std::vector<std::uint64_t> n_dk_, n_kw_, n_k_;
  std::vector<double> phi_acc_;
  std::uint64_t acc_sweeps_ = 0;
  std::mt19937_64 rng_;
  std::vector<double> scratch_;
};

TopicModel fit_lda(const HashtagDocCorpus& corpus, const LdaParams& params);

struct AffinityVector {
  std::string user_id;
  std::vector<double> theta;  // length K, sums to 1
  bool empty_doc = false;     // no in-vocab token; theta is the uniform prior
};

struct InferParams {
  std::uint32_t sweeps = 100;
  std::uint32_t burn_in = 20;
  std::uint64_t rng_seed = 0;
};

// Gibbs inference on one held document with phi fixed; theta averages the
// smoothed topic proportions (n_k + alpha)/(N + K*alpha) over post-burn-in
// sweeps. OOV tokens are dropped first.
AffinityVector infer_affinity(const TopicModel& model, const std::vector<std::string>& tokens,
                              const InferParams& params, const std::string& user_id = "");

// All corpus documents at once; per-document seeds derive from params.rng_seed
// and the document index, so results are order- and thread-independent.
std::vector<AffinityVector> infer_corpus_affinities(const TopicModel& model,
                                                    const HashtagDocCorpus& corpus,
                                                    const InferParams& params);

struct CoherenceReport {
  std::vector<double> per_topic;
  double mean = 0;
};

// UMass coherence: mean over ordered top-word pairs (w_i, w_j), i > j, of
// ln((D(w_i, w_j) + 1) / D(w_j)) with document co-occurrence counts taken
// from `corpus`.
CoherenceReport coherence(const TopicModel& model, const HashtagDocCorpus& corpus,
                          std::uint32_t top_n = 10);

// Re-enacts the topic-count selection: fits one model per K and reports mean
// coherence for each.
std::vector<std::pair<std::uint32_t, double>> sweep_topic_counts(
    const HashtagDocCorpus& corpus, const std::vector<std::uint32_t>& ks, const LdaParams& base);

void save_topic_model(const TopicModel& model, const std::string& path);
TopicModel load_topic_model(const std::string& path);

// Dense affinity CSV: user_id,t0..t{K-1}
void write_affinity_csv(const std::vector<AffinityVector>& rows, const std::string& path);

}  // namespace polarlens
