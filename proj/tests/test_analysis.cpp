#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "polarlens/analysis.hpp"

using namespace polarlens;
using namespace polarlens::testing;

namespace {

DomainCatalog sign_catalog(Dimension dim = Dimension::Science) {
  DomainCatalog cat;
  cat.dimension = dim;
  cat.pole_of = {{"minus.org", -1}, {"plus.org", 1}};
  return cat;
}

// store with hand-set per-bucket (plus, minus) share counts per user
UserStore store_with_paths(
    const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& paths) {
  UserStore store;
  store.window = WindowSpec::paper_default();
  store.buckets = BiweeklySpec::for_window(store.window);
  store.domains = {"minus.org", "plus.org"};  // ids 0 and 1
  for (std::size_t u = 0; u < paths.size(); ++u) {
    UserAggregate agg;
    agg.user_id = "u" + std::to_string(u);
    for (std::size_t b = 0; b < paths[u].size(); ++b) {
      auto [plus, minus] = paths[u][b];
      int bucket = static_cast<int>(b) + 1;
      if (plus) agg.per_bucket_domains[bucket][1] = plus;
      if (minus) agg.per_bucket_domains[bucket][0] = minus;
      agg.shared_domains[1] += plus;
      agg.shared_domains[0] += minus;
      agg.per_bucket_tweets[bucket] = plus + minus;
    }
    store.users.push_back(std::move(agg));
  }
  return store;
}

// direct evaluation oracle for the drift formula
std::vector<double> oracle_delta_bar(
    const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& paths) {
  const std::size_t buckets = paths[0].size();
  std::vector<double> result(buckets - 1, 0.0);
  for (const auto& path : paths) {
    double cum_sum = 0, cum_n = 0, prev = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
      cum_sum += static_cast<double>(path[b].first) - static_cast<double>(path[b].second);
      cum_n += path[b].first + path[b].second;
      double cur = cum_sum / cum_n;
      if (b > 0) result[b - 1] += std::abs(cur - prev);
      prev = cur;
    }
  }
  for (double& v : result) v /= static_cast<double>(paths.size());
  return result;
}

GroupAssignments six_users_one_per_group() {
  GroupAssignments g;
  g.group_of["u0"] = IdeologyGroup::ProSciLeft;
  g.group_of["u1"] = IdeologyGroup::ProSciModerate;
  g.group_of["u2"] = IdeologyGroup::ProSciRight;
  g.group_of["u3"] = IdeologyGroup::AntiSciLeft;
  g.group_of["u4"] = IdeologyGroup::AntiSciModerate;
  g.group_of["u5"] = IdeologyGroup::AntiSciRight;
  return g;
}

}  // namespace

TEST_CASE("constant score paths have zero drift") {
  // every bucket adds one +1 share: cumulative score stays 1.0
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> paths(
      3, std::vector<std::pair<std::uint32_t, std::uint32_t>>(7, {1, 0}));
  UserStore store = store_with_paths(paths);
  DeltaSeries series = delta_series(store, sign_catalog());
  CHECK(series.n_users == 3);
  REQUIRE(series.delta_bar.size() == 6);
  for (double v : series.delta_bar) CHECK(v == 0.0);
}

TEST_CASE("two hand-set paths match the direct evaluation oracle") {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> paths = {
      {{2, 0}, {1, 1}, {0, 2}, {1, 0}, {3, 1}, {2, 2}, {1, 0}},
      {{1, 1}, {2, 0}, {1, 0}, {0, 1}, {1, 1}, {4, 0}, {0, 2}},
  };
  UserStore store = store_with_paths(paths);
  DeltaSeries series = delta_series(store, sign_catalog());
  std::vector<double> expected = oracle_delta_bar(paths);
  REQUIRE(series.delta_bar.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(series.delta_bar[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("users missing a bucket are not eligible") {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> paths = {
      {{1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}},
      {{1, 0}, {0, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}},  // bucket 2 empty
  };
  UserStore store = store_with_paths(paths);
  DeltaSeries series = delta_series(store, sign_catalog());
  CHECK(series.n_users == 1);

  SUBCASE("no eligible user is an error") {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> none = {
        {{1, 0}, {0, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}},
    };
    UserStore s2 = store_with_paths(none);
    CHECK_THROWS_AS(delta_series(s2, sign_catalog()), ValidationError);
  }
}

TEST_CASE("drift respects the cumulative contraction bound") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> path(1);
    for (int b = 0; b < 7; ++b) {
      std::uint32_t plus = 1 + static_cast<std::uint32_t>(rng() % 4);
      std::uint32_t minus = static_cast<std::uint32_t>(rng() % 4);
      path[0].push_back({plus, minus});
    }
    UserStore store = store_with_paths(path);
    DeltaSeries series = delta_series(store, sign_catalog());
    std::uint64_t n_prev = path[0][0].first + path[0][0].second;
    for (std::size_t t = 1; t < 7; ++t) {
      std::uint64_t m = path[0][t].first + path[0][t].second;
      double bound = 2.0 * static_cast<double>(m) / static_cast<double>(n_prev + m);
      CHECK(series.delta_bar[t - 1] >= 0.0);
      CHECK(series.delta_bar[t - 1] <= bound + 1e-12);
      n_prev += m;
    }
  }
}

TEST_CASE("assign_group covers the six categories") {
  using G = IdeologyGroup;
  CHECK(assign_group(+1, -1, -1) == G::ProSciLeft);       // pro, hardline, liberal
  CHECK(assign_group(-1, +1, std::nullopt) == G::AntiSciModerate);
  CHECK(assign_group(+1, +1, std::nullopt) == G::ProSciModerate);
  CHECK(assign_group(+1, -1, +1) == G::ProSciRight);
  CHECK(assign_group(-1, -1, -1) == G::AntiSciLeft);
  CHECK(assign_group(-1, -1, +1) == G::AntiSciRight);
  // moderates ignore the political pole entirely
  CHECK(assign_group(+1, +1, +1) == G::ProSciModerate);
  // incomplete inputs
  CHECK_FALSE(assign_group(+1, -1, std::nullopt).has_value());  // hardline needs politics
  CHECK_FALSE(assign_group(std::nullopt, -1, -1).has_value());
  CHECK_FALSE(assign_group(+1, std::nullopt, -1).has_value());
}

TEST_CASE("assign_group is total on complete triples") {
  for (int sci : {-1, 1})
    for (int mod : {-1, 1})
      for (int pol : {-1, 1}) {
        auto g = assign_group(sci, mod, pol);
        REQUIRE(g.has_value());
        bool is_moderate = *g == IdeologyGroup::ProSciModerate ||
                           *g == IdeologyGroup::AntiSciModerate;
        CHECK(is_moderate == (mod > 0));
      }
}

TEST_CASE("group activity fractions") {
  GroupAssignments groups = six_users_one_per_group();
  // all six active in bucket 1, only u0/u1 in bucket 2, nobody in bucket 3+
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> paths(6);
  for (int u = 0; u < 6; ++u) {
    paths[u].assign(7, {0, 0});
    paths[u][0] = {1, 0};
    if (u < 2) paths[u][1] = {2, 0};
  }
  UserStore store = store_with_paths(paths);
  auto rows = group_activity_series(groups, store);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].active_total == 6);
  for (IdeologyGroup g : kAllGroups)
    CHECK(rows[0].fraction.at(g) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(rows[1].active_total == 2);
  CHECK(rows[1].fraction.at(IdeologyGroup::ProSciLeft) == 0.5);
  CHECK(rows[2].empty);

  double sum = 0;
  for (auto& [g, f] : rows[0].fraction) sum += f;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("top group hashtags drop tags common to all six groups") {
  GroupAssignments groups = six_users_one_per_group();
  std::vector<TweetRecord> records;
  int seq = 0;
  for (int u = 0; u < 6; ++u) {
    std::string uid = "u" + std::to_string(u);
    records.push_back(RecordBuilder(uid, "t" + std::to_string(seq++), ts(2020, 2, 5))
                          .tags({"everywhere", "own" + std::to_string(u)}));
    records.push_back(RecordBuilder(uid, "t" + std::to_string(seq++), ts(2020, 2, 6))
                          .tags({"own" + std::to_string(u)}));
  }
  UserStore store = store_from(records);
  auto rows = top_group_hashtags(groups, store, 50);
  REQUIRE(rows.size() == 6);
  for (const auto& gh : rows) {
    REQUIRE(gh.top.size() == 1);  // "everywhere" was filtered out
    CHECK(gh.top[0].first.rfind("own", 0) == 0);
    CHECK(gh.top[0].second == 2);
  }
}

TEST_CASE("hashtag unique to one group is retained even at low count") {
  GroupAssignments groups = six_users_one_per_group();
  std::vector<TweetRecord> records;
  records.push_back(RecordBuilder("u0", "t0", ts(2020, 2, 5)).tags({"rare"}));
  for (int u = 0; u < 6; ++u)
    records.push_back(RecordBuilder("u" + std::to_string(u), "x" + std::to_string(u),
                                    ts(2020, 2, 6))
                          .tags({"shared"}));
  UserStore store = store_from(records);
  auto rows = top_group_hashtags(groups, store, 50);
  auto& psl = rows[0];  // ProSciLeft = u0
  bool has_rare = false;
  for (auto& [tag, count] : psl.top) has_rare = has_rare || tag == "rare";
  CHECK(has_rare);
  for (const auto& gh : rows)
    for (auto& [tag, count] : gh.top) CHECK(tag != "shared");
}

TEST_CASE("state fractions") {
  GroupAssignments groups;
  UserStore store;
  store.window = WindowSpec::paper_default();
  store.buckets = BiweeklySpec::for_window(store.window);
  // 40 classified users in TX: 10 ProSciModerate, 30 AntiSciRight; 2 in WY
  for (int i = 0; i < 42; ++i) {
    UserAggregate agg;
    agg.user_id = "u" + std::to_string(i + 10);  // keep ids sorted
    agg.state = i < 40 ? "TX" : "WY";
    store.users.push_back(std::move(agg));
    groups.group_of["u" + std::to_string(i + 10)] =
        i < 10 ? IdeologyGroup::ProSciModerate : IdeologyGroup::AntiSciRight;
  }
  StateFractions out = state_fractions(groups, store, 10);
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].state == "TX");
  CHECK(out.rows[0].n_classified == 40);
  CHECK(out.rows[0].fraction.at(IdeologyGroup::ProSciModerate) == doctest::Approx(0.25));
  CHECK(out.rows[0].fraction.at(IdeologyGroup::AntiSciRight) == doctest::Approx(0.75));
  double sum = 0;
  for (auto& [g, f] : out.rows[0].fraction) sum += f;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(out.suppressed.size() == 1);
  CHECK(out.suppressed[0] == "WY");
}

TEST_CASE("score heatmap") {
  SUBCASE("corner mass") {
    std::vector<CrossDimensionRow> table(17, {"u", 1.0, -1.0, 0.0});
    HeatmapGrid grid = score_heatmap(table, 20, Dimension::Science, Dimension::Political);
    CHECK(grid.total == 17);
    CHECK(grid.counts[0][19] == 17);  // y=pol=-1 is the bottom row, x=sci=+1 the last column
    std::uint64_t mass = 0;
    for (const auto& row : grid.counts)
      for (auto c : row) mass += c;
    CHECK(mass == 17);
  }
  SUBCASE("five-user toy grid by hand binning") {
    std::vector<CrossDimensionRow> table = {
        {"a", -1.0, -1.0, 0.0}, {"b", -0.5, 0.0, 0.0}, {"c", 0.0, 0.0, 0.0},
        {"d", 0.49, 0.51, 0.0}, {"e", 1.0, 1.0, 0.0},
    };
    HeatmapGrid grid = score_heatmap(table, 4, Dimension::Science, Dimension::Political);
    // bin edges at -1, -0.5, 0, 0.5, 1; bin = floor((v+1)/2*4), clamped
    CHECK(grid.counts[0][0] == 1);  // a
    CHECK(grid.counts[2][1] == 1);  // b: x=-0.5 -> bin 1, y=0 -> bin 2
    CHECK(grid.counts[2][2] == 1);  // c
    CHECK(grid.counts[3][2] == 1);  // d: x=0.49 -> bin 2, y=0.51 -> bin 3
    CHECK(grid.counts[3][3] == 1);  // e clamps into the top bin
    CHECK(grid.total == 5);
  }
}

TEST_CASE("analysis csv writers emit well-formed files") {
  std::string dir = temp_dir("analysis");
  GroupAssignments groups = six_users_one_per_group();
  write_groups_csv(groups, dir + "/groups.csv");
  GroupAssignments loaded = read_groups_csv(dir + "/groups.csv");
  CHECK(loaded.group_of == groups.group_of);
}
