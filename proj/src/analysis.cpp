#include "polarlens/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

DeltaSeries delta_series(const UserStore& store, const DomainCatalog& catalog) {
  const int n_buckets = store.buckets.count();
  if (n_buckets < 2) throw ValidationError("delta series needs at least two buckets");

  DeltaSeries series;
  series.dimension = catalog.dimension;
  series.delta_bar.assign(static_cast<std::size_t>(n_buckets - 1), 0.0);

  for (const auto& user : store.users) {
    // matched pole sums per bucket; eligibility needs a match in every bucket
    std::vector<std::int64_t> bucket_sum(n_buckets + 1, 0);
    std::vector<std::uint64_t> bucket_n(n_buckets + 1, 0);
    for (const auto& [bucket, doms] : user.per_bucket_domains) {
      if (bucket < 1 || bucket > n_buckets) continue;
      for (const auto& [dom_id, shares] : doms) {
        if (auto pole = catalog.pole(store.domains[dom_id])) {
          bucket_sum[bucket] += static_cast<std::int64_t>(*pole) * shares;
          bucket_n[bucket] += shares;
        }
      }
    }
    bool eligible = true;
    for (int b = 1; b <= n_buckets; ++b) eligible = eligible && bucket_n[b] > 0;
    if (!eligible) continue;

    ++series.n_users;
    std::int64_t cum_sum = bucket_sum[1];
    std::uint64_t cum_n = bucket_n[1];
    double prev = static_cast<double>(cum_sum) / static_cast<double>(cum_n);
    for (int b = 2; b <= n_buckets; ++b) {
      cum_sum += bucket_sum[b];
      cum_n += bucket_n[b];
      double cur = static_cast<double>(cum_sum) / static_cast<double>(cum_n);
      series.delta_bar[static_cast<std::size_t>(b - 2)] += std::abs(cur - prev);
      prev = cur;
    }
  }
  if (series.n_users == 0)
    throw ValidationError("no user shares " + std::string(to_string(catalog.dimension)) +
                          " domains in every bucket");
  for (double& v : series.delta_bar) v /= static_cast<double>(series.n_users);
  return series;
}

std::optional<IdeologyGroup> assign_group(std::optional<int> science_pole,
                                          std::optional<int> moderacy_pole,
                                          std::optional<int> political_pole) {
  if (!science_pole || !moderacy_pole) return std::nullopt;
  const bool pro = *science_pole > 0;
  if (*moderacy_pole > 0)  // moderate: political axis is ignored
    return pro ? IdeologyGroup::ProSciModerate : IdeologyGroup::AntiSciModerate;
  if (!political_pole) return std::nullopt;  // hardline needs a political pole
  if (*political_pole < 0) return pro ? IdeologyGroup::ProSciLeft : IdeologyGroup::AntiSciLeft;
  return pro ? IdeologyGroup::ProSciRight : IdeologyGroup::AntiSciRight;
}

GroupAssignments assign_groups(const std::map<std::string, int>& science,
                               const std::map<std::string, int>& moderacy,
                               const std::map<std::string, int>& political) {
  GroupAssignments out;
  for (const auto& [uid, sci] : science) {
    auto mit = moderacy.find(uid);
    if (mit == moderacy.end()) continue;
    std::optional<int> pol;
    if (auto pit = political.find(uid); pit != political.end()) pol = pit->second;
    if (auto g = assign_group(sci, mit->second, pol)) out.group_of[uid] = *g;
  }
  return out;
}

std::vector<ActivityRow> group_activity_series(const GroupAssignments& groups,
                                               const UserStore& store) {
  const int n_buckets = store.buckets.count();
  std::vector<ActivityRow> rows(static_cast<std::size_t>(n_buckets));
  std::vector<std::map<IdeologyGroup, std::uint64_t>> counts(n_buckets + 1);
  std::vector<std::uint64_t> totals(n_buckets + 1, 0);

  for (const auto& user : store.users) {
    auto git = groups.group_of.find(user.user_id);
    if (git == groups.group_of.end()) continue;
    for (const auto& [bucket, n_tweets] : user.per_bucket_tweets) {
      if (bucket < 1 || bucket > n_buckets || n_tweets == 0) continue;
      ++counts[bucket][git->second];
      ++totals[bucket];
    }
  }
  for (int b = 1; b <= n_buckets; ++b) {
    ActivityRow& row = rows[static_cast<std::size_t>(b - 1)];
    row.bucket = b;
    row.active_total = totals[b];
    if (totals[b] == 0) {
      row.empty = true;
      continue;
    }
    for (const auto& [g, c] : counts[b])
      row.fraction[g] = static_cast<double>(c) / static_cast<double>(totals[b]);
  }
  return rows;
}

std::vector<GroupHashtags> top_group_hashtags(const GroupAssignments& groups,
                                              const UserStore& store, std::uint32_t k) {
  std::map<IdeologyGroup, std::map<std::uint32_t, std::uint64_t>> counts;
  for (const auto& user : store.users) {
    auto git = groups.group_of.find(user.user_id);
    if (git == groups.group_of.end()) continue;
    auto& m = counts[git->second];
    for (const auto& [tag, c] : user.hashtag_counts) m[tag] += c;
  }

  auto ranked_top = [&](const std::map<std::uint32_t, std::uint64_t>& m, std::uint32_t limit,
                        const std::set<std::uint32_t>& drop) {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> ranked;
    for (const auto& [tag, c] : m)
      if (!drop.count(tag)) ranked.emplace_back(c, tag);
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return store.tags[a.second] < store.tags[b.second];
    });
    if (ranked.size() > limit) ranked.resize(limit);
    return ranked;
  };

  // tags present in ALL six pre-filter top-k sets are dropped
  std::map<std::uint32_t, int> groups_with_tag;
  for (IdeologyGroup g : kAllGroups) {
    auto it = counts.find(g);
    if (it == counts.end()) continue;
    for (const auto& [c, tag] : ranked_top(it->second, k, {})) ++groups_with_tag[tag];
  }
  std::set<std::uint32_t> common;
  for (const auto& [tag, n] : groups_with_tag)
    if (n == static_cast<int>(std::size(kAllGroups))) common.insert(tag);

  std::vector<GroupHashtags> out;
  for (IdeologyGroup g : kAllGroups) {
    GroupHashtags gh;
    gh.group = g;
    auto it = counts.find(g);
    if (it != counts.end())
      for (const auto& [c, tag] : ranked_top(it->second, k, common))
        gh.top.emplace_back(store.tags[tag], c);
    out.push_back(std::move(gh));
  }
  return out;
}

StateFractions state_fractions(const GroupAssignments& groups, const UserStore& store,
                               std::uint64_t min_state_users) {
  std::map<std::string, std::map<IdeologyGroup, std::uint64_t>> counts;
  std::map<std::string, std::uint64_t> totals;
  for (const auto& user : store.users) {
    if (!user.state) continue;
    auto git = groups.group_of.find(user.user_id);
    if (git == groups.group_of.end()) continue;
    ++counts[*user.state][git->second];
    ++totals[*user.state];
  }
  StateFractions out;
  for (const auto& [state, total] : totals) {
    if (total < min_state_users) {
      out.suppressed.push_back(state);
      continue;
    }
    StateRow row;
    row.state = state;
    row.n_classified = total;
    for (const auto& [g, c] : counts[state])
      row.fraction[g] = static_cast<double>(c) / static_cast<double>(total);
    out.rows.push_back(std::move(row));
  }
  return out;
}

HeatmapGrid score_heatmap(const std::vector<CrossDimensionRow>& table, std::uint32_t bins,
                          Dimension x_dim, Dimension y_dim) {
  if (bins == 0) throw ValidationError("heatmap needs at least one bin");
  HeatmapGrid grid;
  grid.x_dim = x_dim;
  grid.y_dim = y_dim;
  grid.bins = bins;
  grid.counts.assign(bins, std::vector<std::uint64_t>(bins, 0));

  auto pick = [](const CrossDimensionRow& row, Dimension dim) {
    switch (dim) {
      case Dimension::Science: return row.science;
      case Dimension::Political: return row.political;
      default: return row.moderacy;
    }
  };
  auto bin_of = [bins](double v) {
    auto b = static_cast<std::int64_t>(std::floor((v + 1.0) / 2.0 * bins));
    if (b < 0) b = 0;
    if (b >= static_cast<std::int64_t>(bins)) b = bins - 1;  // +1 joins the top bin
    return static_cast<std::size_t>(b);
  };
  for (const auto& row : table) {
    ++grid.counts[bin_of(pick(row, y_dim))][bin_of(pick(row, x_dim))];
    ++grid.total;
  }
  return grid;
}

// --- writers -------------------------------------------------------------------

void write_delta_series_csv(const std::vector<DeltaSeries>& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "dimension,from_bucket,to_bucket,delta_bar,n_users\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.delta_bar.size(); ++i)
      out << to_string(s.dimension) << ',' << (i + 1) << ',' << (i + 2) << ','
          << format_double(s.delta_bar[i]) << ',' << s.n_users << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_activity_csv(const std::vector<ActivityRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "bucket,group,fraction,active_total,empty\n";
  for (const auto& row : rows) {
    if (row.empty) {
      out << row.bucket << ",,,0,1\n";
      continue;
    }
    for (IdeologyGroup g : kAllGroups) {
      auto it = row.fraction.find(g);
      double f = it == row.fraction.end() ? 0.0 : it->second;
      out << row.bucket << ',' << to_string(g) << ',' << format_double(f) << ','
          << row.active_total << ",0\n";
    }
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_group_hashtags_csv(const std::vector<GroupHashtags>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "group,rank,hashtag,count\n";
  for (const auto& gh : rows)
    for (std::size_t i = 0; i < gh.top.size(); ++i)
      out << to_string(gh.group) << ',' << (i + 1) << ',' << gh.top[i].first << ','
          << gh.top[i].second << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_state_fractions_csv(const StateFractions& fractions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "state,group,fraction,n_classified\n";
  for (const auto& row : fractions.rows)
    for (IdeologyGroup g : kAllGroups) {
      auto it = row.fraction.find(g);
      double f = it == row.fraction.end() ? 0.0 : it->second;
      out << row.state << ',' << to_string(g) << ',' << format_double(f) << ','
          << row.n_classified << '\n';
    }
  for (const auto& s : fractions.suppressed) out << s << ",suppressed,,0\n";
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_heatmaps_json(const std::vector<HeatmapGrid>& grids, const std::string& path) {
  json j = json::array();
  for (const auto& g : grids) {
    json entry;
    entry["x_dim"] = std::string(to_string(g.x_dim));
    entry["y_dim"] = std::string(to_string(g.y_dim));
    entry["bins"] = g.bins;
    entry["total"] = g.total;
    entry["counts"] = g.counts;
    j.push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

void write_groups_csv(const GroupAssignments& groups, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "user_id,group\n";
  for (const auto& [uid, g] : groups.group_of) out << uid << ',' << to_string(g) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

GroupAssignments read_groups_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open groups '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,group", 0) != 0)
    throw ValidationError("'" + path + "' is not a groups file");
  GroupAssignments out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
    auto g = group_from_string(f[1]);
    if (!g) throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown group");
    out.group_of[f[0]] = *g;
  }
  return out;
}

}  // namespace polarlens
