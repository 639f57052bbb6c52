#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "polarlens/lda.hpp"

using namespace polarlens;
using namespace polarlens::testing;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return num / (std::sqrt(na) * std::sqrt(nb) + 1e-300);
}

// generate-from-model oracle: docs drawn from K planted topics over V words,
// each document committed to a single topic
struct Planted {
  HashtagDocCorpus corpus;
  std::vector<std::vector<double>> topics;
};

Planted plant(std::uint32_t K, std::uint32_t V, std::size_t docs, std::size_t doc_len,
              std::uint64_t seed) {
  Planted p;
  for (std::uint32_t w = 0; w < V; ++w) p.corpus.vocab.push_back("w" + std::to_string(w));
  p.topics.assign(K, std::vector<double>(V, 0.0));
  const std::uint32_t span = V / K;
  for (std::uint32_t k = 0; k < K; ++k)
    for (std::uint32_t w = k * span; w < (k + 1) * span; ++w) p.topics[k][w] = 1.0 / span;

  std::mt19937_64 rng(seed);
  for (std::size_t d = 0; d < docs; ++d) {
    std::uint32_t k = static_cast<std::uint32_t>(d % K);
    std::vector<std::uint32_t> doc;
    for (std::size_t i = 0; i < doc_len; ++i)
      doc.push_back(k * span + static_cast<std::uint32_t>(rng() % span));
    p.corpus.docs.push_back(std::move(doc));
    p.corpus.doc_user_ids.push_back("u" + std::to_string(d));
  }
  return p;
}

// best greedy alignment: for each planted topic pick the most similar
// recovered row (without replacement), return the worst cosine
double best_aligned_cosine(const std::vector<std::vector<double>>& planted,
                           const std::vector<std::vector<double>>& recovered) {
  std::vector<bool> used(recovered.size(), false);
  double worst = 1.0;
  for (const auto& t : planted) {
    double best = -1;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < recovered.size(); ++i) {
      if (used[i]) continue;
      double c = cosine(t, recovered[i]);
      if (c > best) best = c, best_i = i;
    }
    used[best_i] = true;
    worst = std::min(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("hashtag corpus pruning by user counts") {
  std::vector<TweetRecord> records;
  int seq = 0;
  // "rare" used by 9 users, "ubiq" by all 20, "good" by 12
  for (int u = 0; u < 20; ++u) {
    std::vector<std::string> tags = {"ubiq"};
    if (u < 9) tags.push_back("rare");
    if (u < 12) tags.push_back("good");
    records.push_back(RecordBuilder("u" + std::to_string(u), "t" + std::to_string(seq++),
                                    ts(2020, 2, 10))
                          .tags(tags));
  }
  UserStore store = store_from(records);
  HashtagDocCorpus corpus = build_hashtag_corpus(store, 10, 0.75);
  CHECK(corpus.vocab == std::vector<std::string>{"good"});
  CHECK(corpus.docs.size() == 12);   // users left with only pruned tags drop out
  CHECK(corpus.dropped_docs == 8);

  SUBCASE("everything pruned is an error") {
    CHECK_THROWS_AS(build_hashtag_corpus(store, 100, 0.75), ValidationError);
  }
}

TEST_CASE("gibbs recovers planted topics (K=2)") {
  Planted p = plant(2, 30, 150, 30, 42);
  LdaParams params;
  params.topics = 2;
  params.sweeps = 300;
  params.burn_in = 100;
  params.rng_seed = 7;
  TopicModel model = fit_lda(p.corpus, params);
  CHECK(best_aligned_cosine(p.topics, model.phi) >= 0.95);
}

TEST_CASE("same rng seed gives identical phi") {
  Planted p = plant(2, 20, 60, 15, 5);
  LdaParams params;
  params.topics = 2;
  params.sweeps = 50;
  params.burn_in = 10;
  params.rng_seed = 99;
  TopicModel a = fit_lda(p.corpus, params);
  TopicModel b = fit_lda(p.corpus, params);
  CHECK(a.phi == b.phi);
}

TEST_CASE("single-token corpus concentrates trivially") {
  HashtagDocCorpus corpus;
  corpus.vocab = {"only"};
  corpus.docs = {{0}};
  corpus.doc_user_ids = {"u0"};
  LdaParams params;
  params.topics = 2;
  params.sweeps = 10;
  params.burn_in = 2;
  TopicModel model = fit_lda(corpus, params);
  for (const auto& row : model.phi) {
    CHECK(row.size() == 1);
    CHECK(row[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("phi rows are distributions and K is validated") {
  Planted p = plant(3, 30, 60, 20, 8);
  LdaParams params;
  params.topics = 3;
  params.sweeps = 30;
  params.burn_in = 5;
  TopicModel model = fit_lda(p.corpus, params);
  for (const auto& row : model.phi) {
    double sum = 0;
    for (double v : row) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  params.topics = 1;
  CHECK_THROWS_AS(fit_lda(p.corpus, params), ValidationError);
}

TEST_CASE("token counts are conserved every sweep") {
  Planted p = plant(2, 25, 50, 12, 3);
  std::vector<std::uint64_t> freq(p.corpus.vocab.size(), 0);
  for (const auto& doc : p.corpus.docs)
    for (auto w : doc) ++freq[w];

  LdaParams params;
  params.topics = 2;
  params.sweeps = 20;
  params.burn_in = 5;
  params.rng_seed = 1;
  GibbsSampler sampler(p.corpus, params);
  for (int sweep = 0; sweep < 20; ++sweep) {
    sampler.sweep();
    for (std::uint32_t w = 0; w < p.corpus.vocab.size(); ++w) {
      std::uint64_t total = 0;
      for (std::uint32_t k = 0; k < 2; ++k) total += sampler.topic_word_count(k, w);
      REQUIRE(total == freq[w]);
    }
  }
}

TEST_CASE("affinity inference") {
  Planted p = plant(2, 30, 150, 30, 21);
  LdaParams params;
  params.topics = 2;
  params.sweeps = 200;
  params.burn_in = 50;
  params.rng_seed = 17;
  TopicModel model = fit_lda(p.corpus, params);
  InferParams infer;
  infer.rng_seed = 5;

  SUBCASE("empty document gets the uniform prior with a flag") {
    AffinityVector v = infer_affinity(model, {"unseen-token"}, infer, "u");
    CHECK(v.empty_doc);
    for (double t : v.theta) CHECK(t == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("documents of planted-topic words point at that topic") {
    // which recovered topic matches planted topic 0?
    std::uint32_t match = cosine(p.topics[0], model.phi[0]) > cosine(p.topics[0], model.phi[1])
                              ? 0u : 1u;
    std::vector<std::string> doc;
    for (int i = 0; i < 12; ++i) doc.push_back("w" + std::to_string(i % 15));
    AffinityVector v = infer_affinity(model, doc, infer, "u");
    CHECK_FALSE(v.empty_doc);
    std::uint32_t argmax = v.theta[0] > v.theta[1] ? 0u : 1u;
    CHECK(argmax == match);
  }

  SUBCASE("theta always sums to one") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::string> doc;
      for (int i = 0; i < 1 + static_cast<int>(rng() % 20); ++i)
        doc.push_back("w" + std::to_string(rng() % 30));
      AffinityVector v = infer_affinity(model, doc, infer, "u");
      double sum = 0;
      for (double t : v.theta) {
        CHECK(t >= 0.0);
        sum += t;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("umass coherence on a hand-countable corpus") {
  // doc sets: {0,1} x3, {0} x1, {1} x1 -> D(0)=4, D(1)=4, D(0,1)=3
  HashtagDocCorpus corpus;
  corpus.vocab = {"alpha", "beta"};
  corpus.docs = {{0, 1}, {0, 1}, {0, 1}, {0}, {1}};
  corpus.doc_user_ids = {"a", "b", "c", "d", "e"};

  TopicModel model;
  model.topics = 1;
  model.vocab = corpus.vocab;
  model.phi = {{0.7, 0.3}};  // top word alpha, then beta

  CoherenceReport report = coherence(model, corpus, 2);
  REQUIRE(report.per_topic.size() == 1);
  // single pair (w_i=beta, w_j=alpha): ln((3+1)/4) = 0
  CHECK(report.per_topic[0] == doctest::Approx(std::log(4.0 / 4.0)).epsilon(1e-12));

  SUBCASE("never co-occurring top words") {
    corpus.docs = {{0}, {0}, {0}, {0}, {1}};
    CoherenceReport r = coherence(model, corpus, 2);
    // D(alpha)=4, D(alpha,beta)=0 -> ln(1/4)
    CHECK(r.per_topic[0] == doctest::Approx(std::log(1.0 / 4.0)).epsilon(1e-12));
  }
}

TEST_CASE("coherence multiset is invariant under topic relabeling") {
  Planted p = plant(3, 30, 90, 15, 13);
  LdaParams params;
  params.topics = 3;
  params.sweeps = 40;
  params.burn_in = 10;
  TopicModel model = fit_lda(p.corpus, params);
  CoherenceReport before = coherence(model, p.corpus, 5);
  std::swap(model.phi[0], model.phi[2]);
  CoherenceReport after = coherence(model, p.corpus, 5);
  std::vector<double> a = before.per_topic, b = after.per_topic;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("topic model artifact round trip") {
  Planted p = plant(2, 15, 40, 10, 30);
  LdaParams params;
  params.topics = 2;
  params.sweeps = 20;
  params.burn_in = 5;
  TopicModel model = fit_lda(p.corpus, params);
  std::string path = temp_dir("lda") + "/model.json";
  save_topic_model(model, path);
  TopicModel loaded = load_topic_model(path);
  CHECK(loaded.topics == model.topics);
  CHECK(loaded.alpha == model.alpha);
  CHECK(loaded.beta == model.beta);
  CHECK(loaded.vocab == model.vocab);
  CHECK(loaded.phi == model.phi);
}

TEST_CASE("k sweep reports one coherence per candidate") {
  Planted p = plant(2, 20, 50, 12, 44);
  LdaParams params;
  params.sweeps = 20;
  params.burn_in = 5;
  auto sweep = sweep_topic_counts(p.corpus, {2, 3}, params);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].first == 2);
  CHECK(sweep[1].first == 3);
}
