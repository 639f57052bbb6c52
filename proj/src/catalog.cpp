#include "polarlens/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "polarlens/io_util.hpp"

namespace polarlens {

DomainCatalog load_catalog(const std::string& path, Dimension dimension) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open catalog '" + path + "'");
  DomainCatalog cat;
  cat.dimension = dimension;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (lineno == 1 && fields.size() >= 2 && fields[0] == "domain") continue;  // header
    if (fields.size() != 2)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected domain,label");
    auto dom = extract_domain(fields[0]);
    if (!dom)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": bad domain '" + fields[0] +
                            "'");
    auto pole = pole_from_label(dimension, fields[1]);
    if (!pole)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": label '" + fields[1] +
                            "' is not a " + std::string(to_string(dimension)) + " pole");
    auto [it, inserted] = cat.pole_of.emplace(*dom, *pole);
    if (!inserted && it->second != *pole)
      throw ValidationError("catalog '" + path + "': domain '" + *dom +
                            "' listed with conflicting poles");
  }
  if (cat.pole_of.empty()) throw ValidationError("catalog '" + path + "' has no entries");
  return cat;
}

CatalogFamily load_catalog_dir(const std::string& dir) {
  CatalogFamily fam;
  fam.science = load_catalog(dir + "/science.csv", Dimension::Science);
  fam.political = load_catalog(dir + "/political.csv", Dimension::Political);
  fam.moderacy = load_catalog(dir + "/moderacy.csv", Dimension::Moderacy);
  // hardline is built as the union of the political poles plus extras, so
  // every political domain must appear in moderacy as hardline
  for (const auto& [dom, pole] : fam.political.pole_of) {
    auto it = fam.moderacy.pole_of.find(dom);
    if (it == fam.moderacy.pole_of.end() || it->second != -1)
      throw ValidationError("moderacy catalog must list political domain '" + dom +
                            "' as hardline");
  }
  return fam;
}

DimScore domain_score(const UserAggregate& agg, const DomainCatalog& catalog,
                      const UserStore& store, std::uint32_t /*min_domains: binning only*/) {
  DimScore score;
  score.user_id = agg.user_id;
  score.dimension = catalog.dimension;
  std::int64_t sum = 0;
  std::uint64_t count = 0;
  for (const auto& [dom_id, shares] : agg.shared_domains) {
    if (auto pole = catalog.pole(store.domains[dom_id])) {
      sum += static_cast<std::int64_t>(*pole) * shares;
      count += shares;
    }
  }
  score.n_domains = static_cast<std::uint32_t>(count);
  if (count > 0) score.delta = static_cast<double>(sum) / static_cast<double>(count);
  score.bin = Bin::Unbinned;  // poles are assigned by bin_scores
  return score;
}

std::vector<DimScore> score_all(const UserStore& store, const DomainCatalog& catalog,
                                std::uint32_t min_domains) {
  std::vector<DimScore> scores;
  scores.reserve(store.users.size());
  for (const auto& agg : store.users) {
    DimScore s = domain_score(agg, catalog, store, min_domains);
    if (s.n_domains > 0) scores.push_back(std::move(s));
  }
  return scores;
}

double nearest_rank_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of empty list");
  std::sort(values.begin(), values.end());
  double n = static_cast<double>(values.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * n));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

BinCutoffs bin_scores(std::vector<DimScore>& scores, double q, std::uint32_t min_domains,
                      std::optional<std::pair<double, double>> fixed_cutoffs) {
  std::vector<double> eligible;
  for (const auto& s : scores)
    if (s.delta && s.n_domains >= min_domains) eligible.push_back(*s.delta);
  if (eligible.empty()) throw ValidationError("no scores eligible for binning");

  BinCutoffs cut;
  cut.q = q;
  cut.n_eligible = eligible.size();
  if (fixed_cutoffs) {
    cut.lo = fixed_cutoffs->first;
    cut.hi = fixed_cutoffs->second;
  } else {
    cut.lo = nearest_rank_quantile(eligible, q);
    cut.hi = nearest_rank_quantile(eligible, 1.0 - q);
  }

  for (auto& s : scores) {
    if (!s.delta || s.n_domains < min_domains) {
      s.bin = Bin::Unbinned;
      continue;
    }
    if (*s.delta >= cut.hi)
      s.bin = Bin::PosPole;
    else if (*s.delta <= cut.lo)
      s.bin = Bin::NegPole;
    else
      s.bin = Bin::Unbinned;
  }
  return cut;
}

std::vector<CrossDimensionRow> cross_dimension_table(const std::vector<DimScore>& science,
                                                     const std::vector<DimScore>& political,
                                                     const std::vector<DimScore>& moderacy,
                                                     std::uint32_t min_domains) {
  auto eligible_map = [&](const std::vector<DimScore>& scores) {
    std::map<std::string, double> m;
    for (const auto& s : scores)
      if (s.delta && s.n_domains >= min_domains) m[s.user_id] = *s.delta;
    return m;
  };
  auto sci = eligible_map(science);
  auto pol = eligible_map(political);
  auto mod = eligible_map(moderacy);
  std::vector<CrossDimensionRow> rows;
  for (const auto& [uid, sdelta] : sci) {
    auto pit = pol.find(uid);
    auto mit = mod.find(uid);
    if (pit == pol.end() || mit == mod.end()) continue;
    rows.push_back({uid, sdelta, pit->second, mit->second});
  }
  return rows;
}

void write_scores_csv(const std::vector<std::vector<DimScore>>& per_dimension,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "user_id,dim,delta,n,bin\n";
  for (const auto& scores : per_dimension)
    for (const auto& s : scores) {
      out << s.user_id << ',' << to_string(s.dimension) << ',';
      if (s.delta) out << format_double(*s.delta);
      out << ',' << s.n_domains << ',' << to_string(s.bin) << '\n';
    }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<std::vector<DimScore>> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scores '" + path + "'");
  std::vector<std::vector<DimScore>> per_dim(3);
  std::string line;
  if (!std::getline(in, line) || line.rfind("user_id,dim,delta,n,bin", 0) != 0)
    throw ValidationError("'" + path + "' is not a scores file");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 5) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
    auto dim = dimension_from_string(f[1]);
    if (!dim) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad dimension");
    DimScore s;
    s.user_id = f[0];
    s.dimension = *dim;
    if (!f[2].empty()) s.delta = parse_double_field(path, lineno, f[2]);
    s.n_domains = static_cast<std::uint32_t>(parse_count_field(path, lineno, f[3]));
    if (f[4] == "pos")
      s.bin = Bin::PosPole;
    else if (f[4] == "neg")
      s.bin = Bin::NegPole;
    else
      s.bin = Bin::Unbinned;
    per_dim[static_cast<std::size_t>(*dim)].push_back(std::move(s));
  }
  return per_dim;
}

}  // namespace polarlens
