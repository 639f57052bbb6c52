#include "polarlens/bow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

BowSeeds BowSeeds::defaults_for(Dimension dim) {
  BowSeeds s;
  s.dimension = dim;
  switch (dim) {
    case Dimension::Science:
      s.pos = {"stayhome"};
      s.neg = {"plandemic"};
      break;
    case Dimension::Political:
      s.pos = {"chinavirus"};   // conservative pole
      s.neg = {"trumpvirus"};   // liberal pole
      break;
    case Dimension::Moderacy:
      s.pos = {"pandemic", "lockdown"};
      s.neg = {"trumpvirus", "chinavirus"};
      break;
  }
  return s;
}

namespace {

// top-k by count, ties resolved toward the lexicographically smaller tag
std::vector<std::string> top_k(const std::map<std::uint32_t, std::uint64_t>& counts,
                               const UserStore& store, std::uint32_t k) {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [tag, c] : counts) ranked.emplace_back(c, tag);
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return store.tags[a.second] < store.tags[b.second];
  });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [c, tag] : ranked) out.push_back(store.tags[tag]);
  return out;
}

}  // namespace

HashtagVocab cooccur_vocab(const UserStore& store, const BowSeeds& seeds, std::uint32_t k,
                           CooccurUnit unit, std::vector<std::string>* warnings) {
  if (seeds.pos.empty() || seeds.neg.empty())
    throw ValidationError("co-occurrence needs at least one seed per group");

  std::set<std::uint32_t> pos_ids, neg_ids, all_seed_ids;
  auto resolve = [&](const std::vector<std::string>& group, std::set<std::uint32_t>& out) {
    for (const auto& raw : group) {
      std::string tag = normalize_hashtag(raw);
      if (auto id = store.tag_id(tag)) {
        out.insert(*id);
        all_seed_ids.insert(*id);
      } else if (warnings) {
        warnings->push_back("seed hashtag '" + tag + "' does not occur in the corpus");
      }
    }
  };
  resolve(seeds.pos, pos_ids);
  resolve(seeds.neg, neg_ids);

  std::map<std::uint32_t, std::uint64_t> pos_counts, neg_counts;
  if (unit == CooccurUnit::PerTweet) {
    for (const auto& user : store.users) {
      for (const auto& tagset : user.tweet_tag_sets) {
        bool with_pos = false, with_neg = false;
        for (auto id : tagset) {
          with_pos = with_pos || pos_ids.count(id);
          with_neg = with_neg || neg_ids.count(id);
        }
        if (!with_pos && !with_neg) continue;
        for (auto id : tagset) {
          if (all_seed_ids.count(id)) continue;  // seeds themselves stay out of the vocab
          if (with_pos) ++pos_counts[id];
          if (with_neg) ++neg_counts[id];
        }
      }
    }
  } else {
    for (const auto& user : store.users) {
      bool with_pos = false, with_neg = false;
      for (auto& [id, c] : user.hashtag_counts) {
        with_pos = with_pos || pos_ids.count(id);
        with_neg = with_neg || neg_ids.count(id);
      }
      if (!with_pos && !with_neg) continue;
      for (auto& [id, c] : user.hashtag_counts) {
        if (all_seed_ids.count(id)) continue;
        if (with_pos) ++pos_counts[id];
        if (with_neg) ++neg_counts[id];
      }
    }
  }

  HashtagVocab vocab;
  vocab.dimension = seeds.dimension;
  vocab.seeds = seeds;
  vocab.k = k;
  std::set<std::string> seen;
  for (const auto& group : {top_k(pos_counts, store, k), top_k(neg_counts, store, k)})
    for (const auto& tag : group)
      if (seen.insert(tag).second) vocab.vocab.push_back(tag);
  return vocab;
}

TfidfResult tfidf_features(const UserStore& store, HashtagVocab& vocab) {
  if (vocab.vocab.empty()) throw ValidationError("empty vocabulary");

  std::map<std::uint32_t, std::uint32_t> vocab_pos;  // store tag id -> vocab index
  for (std::uint32_t i = 0; i < vocab.vocab.size(); ++i)
    if (auto id = store.tag_id(vocab.vocab[i])) vocab_pos[*id] = i;

  // first pass: users with >=1 vocab hashtag define N and the df counts
  std::vector<std::uint64_t> df(vocab.vocab.size(), 0);
  std::uint64_t n_users = 0;
  TfidfResult result;
  for (const auto& user : store.users) {
    bool any = false;
    for (auto& [id, c] : user.hashtag_counts) {
      auto it = vocab_pos.find(id);
      if (it == vocab_pos.end()) continue;
      if (!any) ++n_users;
      any = true;
      ++df[it->second];
    }
    if (!any) ++result.excluded_users;
  }

  vocab.idf.assign(vocab.vocab.size(), 0.0);
  for (std::size_t i = 0; i < df.size(); ++i)
    vocab.idf[i] =
        std::log((1.0 + static_cast<double>(n_users)) / (1.0 + static_cast<double>(df[i]))) + 1.0;

  for (const auto& user : store.users) {
    SparseFeatures row;
    row.user_id = user.user_id;
    for (auto& [id, c] : user.hashtag_counts) {
      auto it = vocab_pos.find(id);
      if (it == vocab_pos.end()) continue;
      row.indices.push_back(it->second);
      row.values.push_back(static_cast<double>(c));
    }
    if (row.indices.empty()) continue;
    // hashtag_counts iterate by store tag id; re-sort by vocab position
    std::vector<std::size_t> perm(row.indices.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return row.indices[a] < row.indices[b]; });
    SparseFeatures sorted;
    sorted.user_id = row.user_id;
    for (std::size_t i : perm) {
      sorted.indices.push_back(row.indices[i]);
      sorted.values.push_back(row.values[i] * vocab.idf[row.indices[i]]);
    }
    result.features.push_back(std::move(sorted));
  }
  return result;
}

void save_vocab(const HashtagVocab& vocab, const std::string& path) {
  json j;
  j["dimension"] = std::string(to_string(vocab.dimension));
  j["k"] = vocab.k;
  j["seeds_pos"] = vocab.seeds.pos;
  j["seeds_neg"] = vocab.seeds.neg;
  j["vocab"] = vocab.vocab;
  j["idf"] = vocab.idf;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

HashtagVocab load_vocab(const std::string& path) {
  json j = json::parse(read_text_file(path));
  HashtagVocab vocab;
  auto dim = dimension_from_string(j.at("dimension").get<std::string>());
  if (!dim) throw ValidationError("vocab '" + path + "': bad dimension");
  vocab.dimension = *dim;
  vocab.seeds.dimension = *dim;
  vocab.k = j.at("k").get<std::uint32_t>();
  vocab.seeds.pos = j.at("seeds_pos").get<std::vector<std::string>>();
  vocab.seeds.neg = j.at("seeds_neg").get<std::vector<std::string>>();
  vocab.vocab = j.at("vocab").get<std::vector<std::string>>();
  vocab.idf = j.at("idf").get<std::vector<double>>();
  return vocab;
}

void write_sparse_csv(const std::vector<SparseFeatures>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "user_id,index,value\n";
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.indices.size(); ++i)
      out << row.user_id << ',' << row.indices[i] << ',' << format_double(row.values[i]) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<SparseFeatures> read_sparse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open features '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,index,value", 0) != 0)
    throw ValidationError("'" + path + "' is not a sparse feature file");
  std::vector<SparseFeatures> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
    if (rows.empty() || rows.back().user_id != f[0]) {
      rows.emplace_back();
      rows.back().user_id = f[0];
    }
    rows.back().indices.push_back(
        static_cast<std::uint32_t>(parse_count_field(path, lineno, f[1])));
    rows.back().values.push_back(parse_double_field(path, lineno, f[2]));
  }
  return rows;
}

}  // namespace polarlens
