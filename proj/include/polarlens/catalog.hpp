#pragma once
// Curated domain catalogs and per-user domain scores: delta is the mean of
// the +-1 pole values of a user's catalog-matched shared domains, binned by
// 30% quantile cutoffs into the two poles.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarlens/common.hpp"
#include "polarlens/corpus.hpp"

namespace polarlens {

struct DomainCatalog {
  Dimension dimension = Dimension::Science;
  std::map<std::string, int> pole_of;  // domain -> +1 / -1

  std::optional<int> pole(const std::string& domain) const {
    auto it = pole_of.find(domain);
    if (it == pole_of.end()) return std::nullopt;
    return it->second;
  }
};

struct CatalogFamily {
  DomainCatalog science;
  DomainCatalog political;
  DomainCatalog moderacy;

  const DomainCatalog& of(Dimension dim) const {
    switch (dim) {
      case Dimension::Science: return science;
      case Dimension::Political: return political;
      default: return moderacy;
    }
  }
};

struct DimScore {
  std::string user_id;
  Dimension dimension = Dimension::Science;
  std::optional<double> delta;  // undefined when no catalog domain matched
  std::uint32_t n_domains = 0;  // matched shares, with multiplicity
  Bin bin = Bin::Unbinned;
};

struct BinCutoffs {
  double lo = 0.0;  // q-quantile; delta <= lo -> NegPole
  double hi = 0.0;  // (1-q)-quantile; delta >= hi -> PosPole
  double q = 0.0;
  std::size_t n_eligible = 0;  // scores the quantiles were taken over
};

// CSV of `domain,label` rows. Labels must belong to `dimension`'s pole
// vocabulary; a domain listed with two different poles is a hard error.
DomainCatalog load_catalog(const std::string& path, Dimension dimension);

// Loads <dir>/science.csv, political.csv, moderacy.csv and enforces the
// construction rule that the moderacy hardline set contains every political
// domain.
CatalogFamily load_catalog_dir(const std::string& dir);

// Mean pole value over the user's catalog-matched shared domains, counted
// with share multiplicity. Fewer than min_domains matches leaves the score
// unbinnable (bin stays Unbinned after bin_scores too).
DimScore domain_score(const UserAggregate& agg, const DomainCatalog& catalog,
                      const UserStore& store, std::uint32_t min_domains = 3);

std::vector<DimScore> score_all(const UserStore& store, const DomainCatalog& catalog,
                                std::uint32_t min_domains = 3);

// Fills bins over the eligible scores (defined delta, n_domains >= min) using
// nearest-rank quantiles; ties at a cutoff fall into the pole. Scores below
// the domain floor keep Bin::Unbinned. Throws ValidationError when nothing is
// eligible. Cutoffs may be pinned from config instead of estimated.
BinCutoffs bin_scores(std::vector<DimScore>& scores, double q = 0.30,
                      std::uint32_t min_domains = 3,
                      std::optional<std::pair<double, double>> fixed_cutoffs = std::nullopt);

// Nearest-rank p-quantile of an unsorted copy: x[ceil(p*n)] in 1-based rank.
double nearest_rank_quantile(std::vector<double> values, double p);

struct CrossDimensionRow {
  std::string user_id;
  double science = 0.0;
  double political = 0.0;
  double moderacy = 0.0;
};

// Inner join on user_id over the three dimensions, keeping users whose score
// is defined with n_domains >= min_domains in every dimension.
std::vector<CrossDimensionRow> cross_dimension_table(const std::vector<DimScore>& science,
                                                     const std::vector<DimScore>& political,
                                                     const std::vector<DimScore>& moderacy,
                                                     std::uint32_t min_domains = 3);

// scores.csv: user_id,dim,delta,n,bin (delta empty when undefined)
void write_scores_csv(const std::vector<std::vector<DimScore>>& per_dimension,
                      const std::string& path);
std::vector<std::vector<DimScore>> read_scores_csv(const std::string& path);

}  // namespace polarlens
