#pragma once
// Downstream analyses over classified users: biweekly score drift, the six
// ideological groups, activity composition over time, distinguishing
// hashtags, per-state fractions and cross-dimension heatmaps.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarlens/catalog.hpp"
#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"
#include "polarlens/dates.hpp"

namespace polarlens {

struct DeltaSeries {
  Dimension dimension = Dimension::Science;
  std::size_t n_users = 0;            // users eligible in every bucket
  std::vector<double> delta_bar;      // one value per consecutive bucket pair
};

// Mean absolute change of cumulative domain scores between consecutive
// buckets. A user is eligible for a dimension when every bucket contains at
// least one catalog-matched share of that dimension. Throws ValidationError
// when no user qualifies.
DeltaSeries delta_series(const UserStore& store, const DomainCatalog& catalog);

// Moderates fold the political axis away; hardliners split into Left/Right.
// Missing science or moderacy, or a hardliner without a political pole,
// yields nullopt. Poles are +1/-1 as in the catalogs.
std::optional<IdeologyGroup> assign_group(std::optional<int> science_pole,
                                          std::optional<int> moderacy_pole,
                                          std::optional<int> political_pole);

struct GroupAssignments {
  std::map<std::string, IdeologyGroup> group_of;
};

// Per-dimension pole labels (from classifiers or score bins) joined into
// group assignments.
GroupAssignments assign_groups(const std::map<std::string, int>& science,
                               const std::map<std::string, int>& moderacy,
                               const std::map<std::string, int>& political);

struct ActivityRow {
  int bucket = 0;
  std::uint64_t active_total = 0;                // classified users active in the bucket
  std::map<IdeologyGroup, double> fraction;      // sums to 1 unless empty
  bool empty = false;                            // no active classified user
};

// A user is active in a bucket when they tweeted in it; fractions are over
// active classified users and sum to 1 per non-empty bucket.
std::vector<ActivityRow> group_activity_series(const GroupAssignments& groups,
                                               const UserStore& store);

struct GroupHashtags {
  IdeologyGroup group = IdeologyGroup::ProSciLeft;
  std::vector<std::pair<std::string, std::uint64_t>> top;  // tag, count
};

// Top-k hashtags per group after removing tags that appear in all six
// groups' pre-filter top-k sets.
std::vector<GroupHashtags> top_group_hashtags(const GroupAssignments& groups,
                                              const UserStore& store, std::uint32_t k = 50);

struct StateRow {
  std::string state;
  std::uint64_t n_classified = 0;
  std::map<IdeologyGroup, double> fraction;  // sums to 1
};

struct StateFractions {
  std::vector<StateRow> rows;
  std::vector<std::string> suppressed;  // states under the user floor
};

StateFractions state_fractions(const GroupAssignments& groups, const UserStore& store,
                               std::uint64_t min_state_users = 50);

struct HeatmapGrid {
  Dimension x_dim = Dimension::Science;
  Dimension y_dim = Dimension::Political;
  std::uint32_t bins = 20;
  std::vector<std::vector<std::uint64_t>> counts;  // [y][x]
  std::uint64_t total = 0;
};

// bins x bins histogram over [-1,1]^2; +1 lands in the last bin.
HeatmapGrid score_heatmap(const std::vector<CrossDimensionRow>& table, std::uint32_t bins,
                          Dimension x_dim, Dimension y_dim);

// CSV/JSON writers for the analysis bundle.
void write_delta_series_csv(const std::vector<DeltaSeries>& series, const std::string& path);
void write_activity_csv(const std::vector<ActivityRow>& rows, const std::string& path);
void write_group_hashtags_csv(const std::vector<GroupHashtags>& rows, const std::string& path);
void write_state_fractions_csv(const StateFractions& fractions, const std::string& path);
void write_heatmaps_json(const std::vector<HeatmapGrid>& grids, const std::string& path);
void write_groups_csv(const GroupAssignments& groups, const std::string& path);
GroupAssignments read_groups_csv(const std::string& path);

}  // namespace polarlens
