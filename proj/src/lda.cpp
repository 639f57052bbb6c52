#include "polarlens/lda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

HashtagDocCorpus build_hashtag_corpus(const UserStore& store, std::uint32_t min_users,
                                      double max_frac) {
  // prune by user document frequency, not raw occurrence count
  std::map<std::uint32_t, std::uint64_t> users_of_tag;
  std::uint64_t n_users_with_tags = 0;
  for (const auto& user : store.users) {
    if (user.hashtag_counts.empty()) continue;
    ++n_users_with_tags;
    for (auto& [tag, c] : user.hashtag_counts) ++users_of_tag[tag];
  }

  const double max_users = max_frac * static_cast<double>(n_users_with_tags);
  std::map<std::uint32_t, std::uint32_t> keep;  // store tag id -> corpus token id
  HashtagDocCorpus corpus;
  for (auto& [tag, n] : users_of_tag) {
    if (n < min_users) continue;
    if (static_cast<double>(n) > max_users) continue;
    keep[tag] = static_cast<std::uint32_t>(corpus.vocab.size());
    corpus.vocab.push_back(store.tags[tag]);
  }
  if (corpus.vocab.empty())
    throw ValidationError("hashtag vocabulary is empty after pruning; lower min_users");

  for (const auto& user : store.users) {
    std::vector<std::uint32_t> doc;
    for (auto& [tag, c] : user.hashtag_counts) {
      auto it = keep.find(tag);
      if (it == keep.end()) continue;
      doc.insert(doc.end(), c, it->second);
    }
    if (doc.empty()) {
      if (!user.hashtag_counts.empty()) ++corpus.dropped_docs;
      continue;
    }
    corpus.docs.push_back(std::move(doc));
    corpus.doc_user_ids.push_back(user.user_id);
  }
  return corpus;
}

GibbsSampler::GibbsSampler(const HashtagDocCorpus& corpus, const LdaParams& params)
    : corpus_(corpus),
      params_(params),
      K_(params.topics),
      V_(static_cast<std::uint32_t>(corpus.vocab_size())),
      alpha_(params.resolved_alpha()),
      rng_(params.rng_seed) {
  if (K_ < 2) throw ValidationError("lda needs at least 2 topics");
  if (K_ > 255) throw ValidationError("lda supports at most 255 topics");
  if (corpus.docs.empty()) throw ValidationError("lda corpus is empty");

  const std::size_t D = corpus_.docs.size();
  n_dk_.assign(D * K_, 0);
  n_kw_.assign(static_cast<std::size_t>(K_) * V_, 0);
  n_k_.assign(K_, 0);
  phi_acc_.assign(static_cast<std::size_t>(K_) * V_, 0.0);
  scratch_.resize(K_);

  z_.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    z_[d].resize(corpus_.docs[d].size());
    for (std::size_t i = 0; i < corpus_.docs[d].size(); ++i) {
      std::uint32_t k = static_cast<std::uint32_t>(rng_() % K_);
      z_[d][i] = static_cast<std::uint8_t>(k);
      ++n_dk_[d * K_ + k];
      ++n_kw_[static_cast<std::size_t>(k) * V_ + corpus_.docs[d][i]];
      ++n_k_[k];
    }
  }
}

void GibbsSampler::sweep() {
  const double v_beta = V_ * params_.beta;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t d = 0; d < corpus_.docs.size(); ++d) {
    const auto& doc = corpus_.docs[d];
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const std::uint32_t w = doc[i];
      const std::uint32_t old_k = z_[d][i];
      --n_dk_[d * K_ + old_k];
      --n_kw_[static_cast<std::size_t>(old_k) * V_ + w];
      --n_k_[old_k];

      double total = 0;
      for (std::uint32_t k = 0; k < K_; ++k) {
        double p = (static_cast<double>(n_dk_[d * K_ + k]) + alpha_) *
                   (static_cast<double>(n_kw_[static_cast<std::size_t>(k) * V_ + w]) +
                    params_.beta) /
                   (static_cast<double>(n_k_[k]) + v_beta);
        total += p;
        scratch_[k] = total;
      }
      double r = unit(rng_) * total;
      std::uint32_t new_k = K_ - 1;
      for (std::uint32_t k = 0; k < K_; ++k)
        if (r < scratch_[k]) {
          new_k = k;
          break;
        }

      z_[d][i] = static_cast<std::uint8_t>(new_k);
      ++n_dk_[d * K_ + new_k];
      ++n_kw_[static_cast<std::size_t>(new_k) * V_ + w];
      ++n_k_[new_k];
    }
  }
}

void GibbsSampler::accumulate() {
  for (std::size_t i = 0; i < phi_acc_.size(); ++i)
    phi_acc_[i] += static_cast<double>(n_kw_[i]);
  ++acc_sweeps_;
}

double GibbsSampler::loglik() const {
  // word log-likelihood under the current token assignments
  const double v_beta = V_ * params_.beta;
  double ll = 0;
  for (std::uint32_t k = 0; k < K_; ++k) {
    double denom = static_cast<double>(n_k_[k]) + v_beta;
    for (std::uint32_t w = 0; w < V_; ++w) {
      std::uint64_t c = n_kw_[static_cast<std::size_t>(k) * V_ + w];
      if (c > 0)
        ll += static_cast<double>(c) *
              std::log((static_cast<double>(c) + params_.beta) / denom);
    }
  }
  return ll;
}

TopicModel GibbsSampler::finalize() const {
  TopicModel model;
  model.topics = K_;
  model.alpha = alpha_;
  model.beta = params_.beta;
  model.vocab = corpus_.vocab;
  model.rng_seed = params_.rng_seed;
  model.sweeps = params_.sweeps;
  model.burn_in = params_.burn_in;
  model.phi.assign(K_, std::vector<double>(V_, 0.0));
  const double denom_sweeps = acc_sweeps_ > 0 ? static_cast<double>(acc_sweeps_) : 1.0;
  for (std::uint32_t k = 0; k < K_; ++k) {
    // smoothed, normalized average counts; row sums to 1 by construction
    double row_total = 0;
    for (std::uint32_t w = 0; w < V_; ++w) {
      double avg = acc_sweeps_ > 0
                       ? phi_acc_[static_cast<std::size_t>(k) * V_ + w] / denom_sweeps
                       : static_cast<double>(n_kw_[static_cast<std::size_t>(k) * V_ + w]);
      model.phi[k][w] = avg + params_.beta;
      row_total += model.phi[k][w];
    }
    for (std::uint32_t w = 0; w < V_; ++w) model.phi[k][w] /= row_total;
  }
  return model;
}

TopicModel fit_lda(const HashtagDocCorpus& corpus, const LdaParams& params) {
  GibbsSampler sampler(corpus, params);
  std::vector<double> trace;
  for (std::uint32_t s = 0; s < params.sweeps; ++s) {
    sampler.sweep();
    if (s >= params.burn_in) sampler.accumulate();
    if ((s + 1) % 100 == 0 || s + 1 == params.sweeps) trace.push_back(sampler.loglik());
  }
  TopicModel model = sampler.finalize();
  model.final_loglik = std::move(trace);
  return model;
}

namespace {

// Gibbs inference over in-vocab token ids with phi held fixed.
AffinityVector infer_affinity_ids(const TopicModel& model, const std::vector<std::uint32_t>& doc,
                                  const InferParams& params, const std::string& user_id) {
  const std::uint32_t K = model.topics;
  AffinityVector out;
  out.user_id = user_id;

  if (doc.empty()) {
    out.theta.assign(K, 1.0 / K);
    out.empty_doc = true;
    return out;
  }

  std::mt19937_64 rng(params.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint32_t> z(doc.size());
  std::vector<std::uint64_t> n_k(K, 0);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    z[i] = static_cast<std::uint32_t>(rng() % K);
    ++n_k[z[i]];
  }

  const double n_total = static_cast<double>(doc.size());
  std::vector<double> cum(K), theta_acc(K, 0.0);
  std::uint64_t acc = 0;
  for (std::uint32_t s = 0; s < params.sweeps; ++s) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      --n_k[z[i]];
      double total = 0;
      for (std::uint32_t k = 0; k < K; ++k) {
        total += (static_cast<double>(n_k[k]) + model.alpha) * model.phi[k][doc[i]];
        cum[k] = total;
      }
      double r = unit(rng) * total;
      std::uint32_t new_k = K - 1;
      for (std::uint32_t k = 0; k < K; ++k)
        if (r < cum[k]) {
          new_k = k;
          break;
        }
      z[i] = new_k;
      ++n_k[new_k];
    }
    if (s >= params.burn_in) {
      for (std::uint32_t k = 0; k < K; ++k)
        theta_acc[k] += (static_cast<double>(n_k[k]) + model.alpha) / (n_total + K * model.alpha);
      ++acc;
    }
  }
  if (acc == 0) {  // no post-burn-in sweep; fall back to the final state
    for (std::uint32_t k = 0; k < K; ++k)
      theta_acc[k] = (static_cast<double>(n_k[k]) + model.alpha) / (n_total + K * model.alpha);
    acc = 1;
  }
  out.theta.resize(K);
  for (std::uint32_t k = 0; k < K; ++k) out.theta[k] = theta_acc[k] / static_cast<double>(acc);
  return out;
}

}  // namespace

AffinityVector infer_affinity(const TopicModel& model, const std::vector<std::string>& tokens,
                              const InferParams& params, const std::string& user_id) {
  std::map<std::string, std::uint32_t> vocab_idx;
  for (std::uint32_t i = 0; i < model.vocab.size(); ++i) vocab_idx[model.vocab[i]] = i;
  std::vector<std::uint32_t> doc;
  for (const auto& t : tokens) {
    auto it = vocab_idx.find(t);
    if (it != vocab_idx.end()) doc.push_back(it->second);
  }
  return infer_affinity_ids(model, doc, params, user_id);
}

std::vector<AffinityVector> infer_corpus_affinities(const TopicModel& model,
                                                    const HashtagDocCorpus& corpus,
                                                    const InferParams& params) {
  // token ids transfer directly when the model was fit on this corpus;
  // otherwise remap through the model vocabulary
  const bool same_vocab = corpus.vocab == model.vocab;
  std::map<std::string, std::uint32_t> vocab_idx;
  if (!same_vocab)
    for (std::uint32_t i = 0; i < model.vocab.size(); ++i) vocab_idx[model.vocab[i]] = i;

  std::vector<AffinityVector> out;
  out.reserve(corpus.docs.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    InferParams p = params;
    // per-document seed: deterministic regardless of evaluation order
    p.rng_seed = params.rng_seed * 6364136223846793005ull + d + 1;
    if (same_vocab) {
      out.push_back(infer_affinity_ids(model, corpus.docs[d], p, corpus.doc_user_ids[d]));
    } else {
      std::vector<std::uint32_t> doc;
      doc.reserve(corpus.docs[d].size());
      for (auto id : corpus.docs[d]) {
        auto it = vocab_idx.find(corpus.vocab[id]);
        if (it != vocab_idx.end()) doc.push_back(it->second);
      }
      out.push_back(infer_affinity_ids(model, doc, p, corpus.doc_user_ids[d]));
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> TopicModel::top_words(std::uint32_t topic,
                                                                  std::uint32_t n) const {
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(vocab.size());
  for (std::size_t w = 0; w < vocab.size(); ++w) ranked.emplace_back(vocab[w], phi[topic][w]);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

CoherenceReport coherence(const TopicModel& model, const HashtagDocCorpus& corpus,
                          std::uint32_t top_n) {
  std::map<std::string, std::uint32_t> vocab_idx;
  for (std::uint32_t i = 0; i < corpus.vocab.size(); ++i) vocab_idx[corpus.vocab[i]] = i;

  // document frequencies over distinct tokens per doc
  std::vector<std::set<std::uint32_t>> doc_sets;
  doc_sets.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) doc_sets.emplace_back(doc.begin(), doc.end());

  auto doc_freq = [&](std::uint32_t w) {
    std::uint64_t n = 0;
    for (const auto& s : doc_sets) n += s.count(w);
    return n;
  };
  auto pair_freq = [&](std::uint32_t a, std::uint32_t b) {
    std::uint64_t n = 0;
    for (const auto& s : doc_sets) n += (s.count(a) && s.count(b));
    return n;
  };

  CoherenceReport report;
  for (std::uint32_t k = 0; k < model.topics; ++k) {
    auto top = model.top_words(k, top_n);
    std::vector<std::uint32_t> ids;
    for (const auto& [word, p] : top) {
      auto it = vocab_idx.find(word);
      if (it != vocab_idx.end()) ids.push_back(it->second);
    }
    double sum = 0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 1; i < ids.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        std::uint64_t dj = doc_freq(ids[j]);
        if (dj == 0) continue;  // cannot happen for corpus-built vocabs
        sum += std::log((static_cast<double>(pair_freq(ids[i], ids[j])) + 1.0) /
                        static_cast<double>(dj));
        ++pairs;
      }
    }
    report.per_topic.push_back(pairs > 0 ? sum / static_cast<double>(pairs) : 0.0);
  }
  for (double c : report.per_topic) report.mean += c;
  if (!report.per_topic.empty()) report.mean /= static_cast<double>(report.per_topic.size());
  return report;
}

std::vector<std::pair<std::uint32_t, double>> sweep_topic_counts(
    const HashtagDocCorpus& corpus, const std::vector<std::uint32_t>& ks, const LdaParams& base) {
  std::vector<std::pair<std::uint32_t, double>> out;
  for (std::uint32_t k : ks) {
    LdaParams p = base;
    p.topics = k;
    p.alpha = 0;  // re-resolve 50/K per candidate
    TopicModel model = fit_lda(corpus, p);
    out.emplace_back(k, coherence(model, corpus).mean);
  }
  return out;
}

void save_topic_model(const TopicModel& model, const std::string& path) {
  json j;
  j["topics"] = model.topics;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["vocab"] = model.vocab;
  j["phi"] = model.phi;
  j["rng_seed"] = model.rng_seed;
  j["sweeps"] = model.sweeps;
  j["burn_in"] = model.burn_in;
  j["loglik_trace"] = model.final_loglik;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump() << '\n';
}

TopicModel load_topic_model(const std::string& path) {
  json j = json::parse(read_text_file(path));
  TopicModel model;
  model.topics = j.at("topics").get<std::uint32_t>();
  model.alpha = j.at("alpha").get<double>();
  model.beta = j.at("beta").get<double>();
  model.vocab = j.at("vocab").get<std::vector<std::string>>();
  model.phi = j.at("phi").get<std::vector<std::vector<double>>>();
  model.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  model.sweeps = j.at("sweeps").get<std::uint32_t>();
  model.burn_in = j.at("burn_in").get<std::uint32_t>();
  if (j.contains("loglik_trace")) model.final_loglik = j.at("loglik_trace").get<std::vector<double>>();
  return model;
}

void write_affinity_csv(const std::vector<AffinityVector>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (rows.empty()) throw std::runtime_error("no affinity rows to write");
  out << "user_id";
  for (std::size_t k = 0; k < rows.front().theta.size(); ++k) out << ",t" << k;
  out << '\n';
  for (const auto& row : rows) {
    out << row.user_id;
    for (double v : row.theta) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace polarlens
