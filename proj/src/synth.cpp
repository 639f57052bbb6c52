#include "polarlens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

namespace {

struct GroupTraits {
  int science = 0;                   // +1 pro / -1 anti
  std::optional<int> political;      // unset for moderates
  int moderacy = 0;                  // +1 moderate / -1 hardline
  const char* slug = "";
  const char* sci_seed_tag = "";
  std::vector<const char*> dim_seed_tags;  // political or moderacy seeds this group uses
};

GroupTraits traits_of(IdeologyGroup g) {
  switch (g) {
    case IdeologyGroup::ProSciLeft:
      return {+1, -1, -1, "psl", "stayhome", {"trumpvirus"}};
    case IdeologyGroup::ProSciModerate:
      return {+1, std::nullopt, +1, "psm", "stayhome", {"pandemic", "lockdown"}};
    case IdeologyGroup::ProSciRight:
      return {+1, +1, -1, "psr", "stayhome", {"chinavirus"}};
    case IdeologyGroup::AntiSciLeft:
      return {-1, -1, -1, "asl", "plandemic", {"trumpvirus"}};
    case IdeologyGroup::AntiSciModerate:
      return {-1, std::nullopt, +1, "asm", "plandemic", {"pandemic", "lockdown"}};
    case IdeologyGroup::AntiSciRight:
      return {-1, +1, -1, "asr", "plandemic", {"chinavirus"}};
  }
  return {};
}

// unambiguous against the builtin gazetteer (no nested state names)
constexpr const char* kSynthStates[][2] = {
    {"Texas", "TX"},   {"California", "CA"}, {"New York", "NY"}, {"Florida", "FL"},
    {"Washington", "WA"}, {"Oregon", "OR"},  {"Vermont", "VT"},  {"Mississippi", "MS"},
    {"Arizona", "AZ"}, {"Ohio", "OH"},
};

std::string pad_id(const char* prefix, std::uint64_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*llu", prefix, width,
                static_cast<unsigned long long>(n));
  return buf;
}

}  // namespace

SynthSpec SynthSpec::from_json_file(const std::string& path) {
  json j = json::parse(read_text_file(path));
  SynthSpec s;
  auto grab = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  grab("n_users", s.n_users);
  grab("rng_seed", s.rng_seed);
  grab("p_in", s.p_in);
  grab("p_out", s.p_out);
  grab("p_moderate_attach", s.p_moderate_attach);
  grab("tweets_per_user", s.tweets_per_user);
  grab("domains_per_dim", s.domains_per_dim);
  grab("offpole_rate", s.offpole_rate);
  grab("hashtags_per_tweet", s.hashtags_per_tweet);
  grab("tokens_per_tweet", s.tokens_per_tweet);
  grab("seeds_per_pole", s.seeds_per_pole);
  grab("catalog_domains_per_pole", s.catalog_domains_per_pole);
  grab("embed_dim", s.embed_dim);
  grab("moderate_political_balance", s.moderate_political_balance);
  grab("window", s.window);
  if (j.contains("mixture")) {
    for (const auto& [key, val] : j.at("mixture").items()) {
      auto g = group_from_string(key);
      if (!g) throw ValidationError("synth spec: unknown group '" + key + "'");
      s.mixture[*g] = val.get<double>();
    }
  }
  s.validate();
  return s;
}

void SynthSpec::validate() const {
  if (n_users < 6) throw ValidationError("synth spec: need at least 6 users");
  if (!mixture.empty()) {
    double total = 0;
    for (const auto& [g, w] : mixture) {
      if (w < 0) throw ValidationError("synth spec: negative mixture weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("synth spec: mixture must sum to 1");
    bool any = false;
    for (const auto& [g, w] : mixture) any = any || w > 0;
    if (!any) throw ValidationError("synth spec: degenerate mixture");
  }
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
    throw ValidationError("synth spec: edge probabilities must lie in [0,1]");
  if (offpole_rate < 0 || offpole_rate >= 0.5)
    throw ValidationError("synth spec: offpole_rate must lie in [0,0.5)");
  if (embed_dim < 4) throw ValidationError("synth spec: embed_dim must be >= 4");
  WindowSpec::parse(window);
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  SynthData data;
  data.window = WindowSpec::parse(spec.window);
  BiweeklySpec buckets = BiweeklySpec::for_window(data.window);
  const int n_buckets = buckets.count();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // --- group assignment (largest remainder over the mixture) ---
  std::map<IdeologyGroup, double> mixture = spec.mixture;
  if (mixture.empty())
    for (IdeologyGroup g : kAllGroups) mixture[g] = 1.0 / 6.0;
  std::vector<std::pair<IdeologyGroup, std::uint32_t>> group_counts;
  {
    std::uint32_t assigned = 0;
    std::vector<std::pair<double, IdeologyGroup>> remainders;
    for (IdeologyGroup g : kAllGroups) {
      double exact = mixture.count(g) ? mixture[g] * spec.n_users : 0.0;
      auto floor_n = static_cast<std::uint32_t>(exact);
      group_counts.emplace_back(g, floor_n);
      assigned += floor_n;
      remainders.emplace_back(exact - floor_n, g);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::uint32_t i = 0; assigned < spec.n_users; ++i, ++assigned)
      for (auto& [g, c] : group_counts)
        if (g == remainders[i % remainders.size()].second) ++c;
  }

  struct UserInfo {
    std::string id;
    IdeologyGroup group;
    GroupTraits traits;
  };
  std::vector<UserInfo> users;
  {
    std::uint32_t next = 0;
    for (auto& [g, count] : group_counts)
      for (std::uint32_t i = 0; i < count; ++i, ++next)
        users.push_back({pad_id("u", next, 5), g, traits_of(g)});
  }

  // --- catalogs ---
  auto make_pool = [&](const char* pattern, std::uint32_t n) {
    std::vector<std::string> pool;
    for (std::uint32_t i = 0; i < n; ++i) {
      char buf[48];
      std::snprintf(buf, sizeof buf, pattern, i);
      pool.emplace_back(buf);
    }
    return pool;
  };
  auto sci_pro = make_pool("sci-pro-%03u.org", spec.catalog_domains_per_pole);
  auto sci_anti = make_pool("sci-anti-%03u.org", spec.catalog_domains_per_pole);
  auto pol_lib = make_pool("pol-lib-%03u.com", spec.catalog_domains_per_pole);
  auto pol_con = make_pool("pol-con-%03u.com", spec.catalog_domains_per_pole);
  auto mod_neutral = make_pool("mod-neutral-%03u.net", spec.catalog_domains_per_pole);

  data.catalogs.science.dimension = Dimension::Science;
  for (const auto& d : sci_pro) data.catalogs.science.pole_of[d] = +1;
  for (const auto& d : sci_anti) data.catalogs.science.pole_of[d] = -1;
  data.catalogs.political.dimension = Dimension::Political;
  for (const auto& d : pol_con) data.catalogs.political.pole_of[d] = +1;
  for (const auto& d : pol_lib) data.catalogs.political.pole_of[d] = -1;
  data.catalogs.moderacy.dimension = Dimension::Moderacy;
  for (const auto& d : mod_neutral) data.catalogs.moderacy.pole_of[d] = +1;
  for (const auto& d : pol_con) data.catalogs.moderacy.pole_of[d] = -1;  // hardline proxy
  for (const auto& d : pol_lib) data.catalogs.moderacy.pole_of[d] = -1;

  // --- hashtag and token pools ---
  const std::uint32_t kTagsPerGroup = 12, kCommonTags = 6, kTokensPerGroup = 15,
                      kCommonTokens = 10;
  std::map<IdeologyGroup, std::vector<std::string>> group_tags, group_tokens;
  for (IdeologyGroup g : kAllGroups) {
    GroupTraits t = traits_of(g);
    for (std::uint32_t i = 0; i < kTagsPerGroup; ++i)
      group_tags[g].push_back(std::string(t.slug) + "tag" + std::to_string(i));
    for (std::uint32_t i = 0; i < kTokensPerGroup; ++i)
      group_tokens[g].push_back(std::string("w") + t.slug + std::to_string(i));
  }
  std::vector<std::string> common_tags, common_tokens;
  for (std::uint32_t i = 0; i < kCommonTags; ++i)
    common_tags.push_back("covid19news" + std::to_string(i));
  for (std::uint32_t i = 0; i < kCommonTokens; ++i)
    common_tokens.push_back("common" + std::to_string(i));

  // --- embedding table: group tokens sit near their pole directions ---
  data.vectors.dim = spec.embed_dim;
  auto jitter = [&](const std::string& token, std::uint32_t axis) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : token) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
    h ^= axis * 0x9e3779b97f4a7c15ull;
    return (static_cast<double>(h % 2000) / 1000.0 - 1.0) * 0.15;
  };
  auto add_vector = [&](const std::string& token, double sci, double pol, double mod) {
    std::vector<float> v(spec.embed_dim, 0.0f);
    v[0] = static_cast<float>(sci + jitter(token, 0));
    v[1] = static_cast<float>(pol + jitter(token, 1));
    v[2] = static_cast<float>(mod + jitter(token, 2));
    for (std::uint32_t i = 3; i < spec.embed_dim; ++i)
      v[i] = static_cast<float>(jitter(token, i));
    data.vectors.vectors[token] = std::move(v);
  };
  for (IdeologyGroup g : kAllGroups) {
    GroupTraits t = traits_of(g);
    double pol = t.political ? static_cast<double>(*t.political) : 0.0;
    for (const auto& tok : group_tokens[g])
      add_vector(tok, t.science, pol, t.moderacy);
  }
  for (const auto& tok : common_tokens) add_vector(tok, 0, 0, 0);

  // --- per-user truth, domain shares, hashtag tweets ---
  std::uint64_t tweet_seq = 0;
  auto stamp_in_bucket = [&](int bucket) {
    const auto& iv = buckets.intervals[static_cast<std::size_t>(bucket - 1)];
    std::int64_t days = iv.end_day - iv.start_day + 1;
    std::int64_t offset = static_cast<std::int64_t>(rng() % (days * 86400ull));
    return iv.start_day * 86400 + offset;
  };
  auto emit_domain_tweet = [&](const UserInfo& u, const std::string& domain, int bucket,
                               const std::string& state_name) {
    TweetRecord rec;
    rec.tweet_id = pad_id("t", tweet_seq++, 8);
    rec.user_id = u.id;
    rec.timestamp = stamp_in_bucket(bucket);
    rec.urls.push_back("https://www." + domain + "/p/" + std::to_string(tweet_seq));
    rec.text = "sharing " + rec.urls.back();
    rec.state = Gazetteer::builtin().match(state_name);
    data.records.push_back(std::move(rec));
  };

  auto pick = [&](const std::vector<std::string>& pool) { return pool[rng() % pool.size()]; };

  for (std::size_t ui = 0; ui < users.size(); ++ui) {
    const UserInfo& u = users[ui];
    const GroupTraits& t = u.traits;
    const auto& [state_name, state_code] = kSynthStates[ui % std::size(kSynthStates)];

    SynthTruth truth;
    truth.group = u.group;
    truth.science_pole = t.science;
    truth.political_pole = t.political;
    truth.moderacy_pole = t.moderacy;
    truth.state = state_code;
    data.truth[u.id] = truth;

    // science shares, one per bucket round-robin
    for (std::uint32_t i = 0; i < spec.domains_per_dim; ++i) {
      bool flip = unit(rng) < spec.offpole_rate;
      bool pro = (t.science > 0) != flip;
      emit_domain_tweet(u, pick(pro ? sci_pro : sci_anti), 1 + static_cast<int>(i) % n_buckets,
                        state_name);
    }
    if (t.political) {
      // hardline: political shares double as moderacy hardline shares
      for (std::uint32_t i = 0; i < spec.domains_per_dim; ++i) {
        bool flip = unit(rng) < spec.offpole_rate;
        bool con = (*t.political > 0) != flip;
        emit_domain_tweet(u, pick(con ? pol_con : pol_lib), 1 + static_cast<int>(i) % n_buckets,
                          state_name);
      }
    } else {
      // moderate: neutral shares, plus balanced L/R pairs when enabled
      for (std::uint32_t i = 0; i < spec.domains_per_dim; ++i) {
        emit_domain_tweet(u, pick(mod_neutral), 1 + static_cast<int>(i) % n_buckets, state_name);
      }
      if (spec.moderate_political_balance) {
        std::uint32_t pairs = std::max<std::uint32_t>(2, spec.domains_per_dim / 2);
        for (std::uint32_t i = 0; i < pairs; ++i) {
          emit_domain_tweet(u, pick(pol_lib), 1 + static_cast<int>(2 * i) % n_buckets, state_name);
          emit_domain_tweet(u, pick(pol_con), 1 + static_cast<int>(2 * i + 1) % n_buckets,
                            state_name);
        }
      }
    }

    // hashtag/text tweets
    for (std::uint32_t i = 0; i < spec.tweets_per_user; ++i) {
      TweetRecord rec;
      rec.tweet_id = pad_id("t", tweet_seq++, 8);
      rec.user_id = u.id;
      rec.timestamp = stamp_in_bucket(1 + static_cast<int>(rng() % n_buckets));
      rec.state = Gazetteer::builtin().match(state_name);

      std::vector<std::string> tags;
      for (std::uint32_t h = 0; h < spec.hashtags_per_tweet; ++h) {
        double r = unit(rng);
        if (r < 0.35) {
          // a polarization seed tag: science seed or this group's other seeds
          if (unit(rng) < 0.5)
            tags.push_back(t.sci_seed_tag);
          else
            tags.push_back(t.dim_seed_tags[rng() % t.dim_seed_tags.size()]);
        } else if (r < 0.65) {
          tags.push_back(pick(common_tags));
        } else {
          tags.push_back(pick(group_tags[u.group]));
        }
      }
      std::string text;
      for (std::uint32_t w = 0; w < spec.tokens_per_tweet; ++w) {
        if (!text.empty()) text += ' ';
        text += unit(rng) < 0.7 ? pick(group_tokens[u.group]) : pick(common_tokens);
      }
      for (const auto& tag : tags) text += " #" + tag;
      rec.text = std::move(text);
      rec.hashtags = tags;
      data.records.push_back(std::move(rec));
    }
  }

  // --- planted-partition retweet edges ---
  // Hardliners cluster by (science, political). Moderates do not cluster at
  // all: they attach to hardliners of their science pole on BOTH political
  // sides alike, which is exactly what starves the moderacy axis of signal.
  // p_mod defaults to p_in/4 so community ties outweigh the bridges.
  const double p_mod = spec.p_moderate_attach < 0 ? spec.p_in / 4 : spec.p_moderate_attach;
  auto community = [](const GroupTraits& t) {
    return t.political ? (t.science > 0 ? 0 : 2) + (*t.political > 0 ? 1 : 0) : -1;
  };
  for (std::size_t a = 0; a < users.size(); ++a) {
    int ca = community(users[a].traits);
    for (std::size_t b = a + 1; b < users.size(); ++b) {
      int cb = community(users[b].traits);
      double p;
      if (ca >= 0 && cb >= 0) {
        p = ca == cb ? spec.p_in : spec.p_out;
      } else if (ca < 0 && cb < 0) {
        p = spec.p_out;
      } else {
        bool same_science = users[a].traits.science == users[b].traits.science;
        p = same_science ? p_mod : spec.p_out;
      }
      if (unit(rng) >= p) continue;
      bool a_retweets = (rng() & 1) != 0;
      const UserInfo& src = a_retweets ? users[a] : users[b];
      const UserInfo& dst = a_retweets ? users[b] : users[a];
      std::uint32_t weight = 1 + (rng() % 4 == 0 ? 1 : 0);
      for (std::uint32_t w = 0; w < weight; ++w) {
        TweetRecord rec;
        rec.tweet_id = pad_id("t", tweet_seq++, 8);
        rec.user_id = src.id;
        rec.retweeted_user_id = dst.id;
        rec.timestamp = stamp_in_bucket(1 + static_cast<int>(rng() % n_buckets));
        rec.text = "RT @" + dst.id + " " + pick(common_tokens);
        const auto& st = kSynthStates[(&src - users.data()) % std::size(kSynthStates)];
        rec.state = Gazetteer::builtin().match(st[0]);
        data.records.push_back(std::move(rec));
      }
    }
  }

  // --- seeds: round-robin across the groups sharing each pole ---
  const std::uint32_t seeds_per_pole =
      spec.seeds_per_pole > 0 ? spec.seeds_per_pole
                              : std::max<std::uint32_t>(10, spec.n_users / 50);
  auto pick_seeds = [&](Dimension dim, auto pole_of_traits) {
    SeedSet seeds;
    seeds.dimension = dim;
    for (int pole : {+1, -1}) {
      std::vector<std::vector<const UserInfo*>> by_group;
      for (IdeologyGroup g : kAllGroups) {
        GroupTraits t = traits_of(g);
        auto p = pole_of_traits(t);
        if (!p || *p != pole) continue;
        by_group.emplace_back();
        for (const auto& u : users)
          if (u.group == g) by_group.back().push_back(&u);
      }
      std::uint32_t taken = 0;
      for (std::uint32_t round = 0; taken < seeds_per_pole; ++round) {
        bool progress = false;
        for (auto& members : by_group) {
          if (round < members.size() && taken < seeds_per_pole) {
            seeds.label_of[members[round]->id] = pole;
            ++taken;
            progress = true;
          }
        }
        if (!progress) break;  // pole smaller than requested seed count
      }
    }
    return seeds;
  };
  data.seeds_science = pick_seeds(Dimension::Science, [](const GroupTraits& t) {
    return std::optional<int>(t.science);
  });
  data.seeds_political =
      pick_seeds(Dimension::Political, [](const GroupTraits& t) { return t.political; });
  data.seeds_moderacy = pick_seeds(Dimension::Moderacy, [](const GroupTraits& t) {
    return std::optional<int>(t.moderacy);
  });

  return data;
}

void write_synth(const SynthData& data, const std::string& corpus_path,
                 const std::string& truth_path, const std::string& aux_dir) {
  std::ofstream corpus(corpus_path, std::ios::binary);
  if (!corpus) throw std::runtime_error("cannot write '" + corpus_path + "'");
  for (const auto& rec : data.records) {
    json j;
    j["id"] = rec.tweet_id;
    j["user_id"] = rec.user_id;
    j["created_at"] = format_rfc3339(rec.timestamp);
    j["text"] = rec.text;
    if (!rec.hashtags.empty()) j["hashtags"] = rec.hashtags;
    if (!rec.urls.empty()) j["urls"] = rec.urls;
    if (rec.retweeted_user_id) j["retweeted_user_id"] = *rec.retweeted_user_id;
    if (rec.state) {
      // state code round-trips through the gazetteer unambiguously
      j["user_location"] = "somewhere, " + *rec.state;
    }
    corpus << j.dump() << '\n';
  }
  corpus.close();
  if (!corpus) throw std::runtime_error("write to '" + corpus_path + "' failed");

  std::ofstream truth(truth_path, std::ios::binary);
  if (!truth) throw std::runtime_error("cannot write '" + truth_path + "'");
  truth << "user_id,group,science,political,moderacy,state\n";
  for (const auto& [uid, t] : data.truth) {
    truth << uid << ',' << to_string(t.group) << ','
          << pole_name(Dimension::Science, t.science_pole) << ',';
    if (t.political_pole) truth << pole_name(Dimension::Political, *t.political_pole);
    truth << ',' << pole_name(Dimension::Moderacy, t.moderacy_pole) << ',' << t.state << '\n';
  }
  truth.close();
  if (!truth) throw std::runtime_error("write to '" + truth_path + "' failed");

  if (aux_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(aux_dir) / "catalogs");
  fs::create_directories(fs::path(aux_dir) / "seeds");
  auto write_catalog = [&](const DomainCatalog& cat, const std::string& name) {
    std::ofstream out(aux_dir + "/catalogs/" + name, std::ios::binary);
    out << "domain,label\n";
    for (const auto& [dom, pole] : cat.pole_of)
      out << dom << ',' << pole_name(cat.dimension, pole) << '\n';
  };
  write_catalog(data.catalogs.science, "science.csv");
  write_catalog(data.catalogs.political, "political.csv");
  write_catalog(data.catalogs.moderacy, "moderacy.csv");
  save_seeds(data.seeds_science, aux_dir + "/seeds/science.tsv");
  save_seeds(data.seeds_political, aux_dir + "/seeds/political.tsv");
  save_seeds(data.seeds_moderacy, aux_dir + "/seeds/moderacy.tsv");
  save_vectors(data.vectors, aux_dir + "/vectors.txt");
  std::ofstream sw(aux_dir + "/stopwords.txt", std::ios::binary);
  for (const auto& w : default_stopwords()) sw << w << '\n';
}

std::map<std::string, SynthTruth> read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open truth '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,group", 0) != 0)
    throw ValidationError("'" + path + "' is not a truth file");
  std::map<std::string, SynthTruth> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 6) throw ValidationError("bad truth row: " + line);
    SynthTruth t;
    auto g = group_from_string(f[1]);
    if (!g) throw ValidationError("bad group in truth row: " + line);
    t.group = *g;
    t.science_pole = *pole_from_label(Dimension::Science, f[2]);
    if (!f[3].empty()) t.political_pole = *pole_from_label(Dimension::Political, f[3]);
    t.moderacy_pole = *pole_from_label(Dimension::Moderacy, f[4]);
    t.state = f[5];
    out[f[0]] = t;
  }
  return out;
}

PlantedGraph make_planted_graph(std::uint32_t n_nodes, double p_in, double p_out,
                                double seed_frac, std::uint64_t rng_seed, Dimension dim) {
  if (n_nodes < 4) throw ValidationError("planted graph needs at least 4 nodes");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PlantedGraph planted;
  planted.labels.resize(n_nodes);
  std::vector<std::string> ids(n_nodes);
  for (std::uint32_t i = 0; i < n_nodes; ++i) {
    ids[i] = pad_id("n", i, 6);
    planted.labels[i] = i < n_nodes / 2 ? 1 : -1;
  }

  GraphBuilder builder;
  for (const auto& id : ids) builder.add_node(id);
  for (std::uint32_t a = 0; a < n_nodes; ++a)
    for (std::uint32_t b = a + 1; b < n_nodes; ++b) {
      double p = planted.labels[a] == planted.labels[b] ? p_in : p_out;
      if (unit(rng) >= p) continue;
      if (rng() & 1)
        builder.add_edge(ids[a], ids[b]);
      else
        builder.add_edge(ids[b], ids[a]);
    }
  planted.graph = std::move(builder).finalize();

  planted.seeds.dimension = dim;
  auto per_pole = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(seed_frac * (n_nodes / 2)));
  for (std::uint32_t i = 0; i < per_pole; ++i) {
    planted.seeds.label_of[ids[i]] = +1;
    planted.seeds.label_of[ids[n_nodes / 2 + i]] = -1;
  }
  // ids sorted by construction, so planted labels align with graph indices
  return planted;
}

}  // namespace polarlens
