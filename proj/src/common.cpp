#include "polarlens/common.hpp"

namespace polarlens {

std::string_view to_string(Dimension dim) {
  switch (dim) {
    case Dimension::Science: return "science";
    case Dimension::Political: return "political";
    case Dimension::Moderacy: return "moderacy";
  }
  return "?";
}

std::string_view to_string(Bin bin) {
  switch (bin) {
    case Bin::NegPole: return "neg";
    case Bin::Unbinned: return "unbinned";
    case Bin::PosPole: return "pos";
  }
  return "?";
}

std::string_view to_string(IdeologyGroup g) {
  switch (g) {
    case IdeologyGroup::ProSciLeft: return "prosci_left";
    case IdeologyGroup::ProSciModerate: return "prosci_moderate";
    case IdeologyGroup::ProSciRight: return "prosci_right";
    case IdeologyGroup::AntiSciLeft: return "antisci_left";
    case IdeologyGroup::AntiSciModerate: return "antisci_moderate";
    case IdeologyGroup::AntiSciRight: return "antisci_right";
  }
  return "?";
}

std::optional<Dimension> dimension_from_string(std::string_view s) {
  if (s == "science") return Dimension::Science;
  if (s == "political") return Dimension::Political;
  if (s == "moderacy") return Dimension::Moderacy;
  return std::nullopt;
}

std::optional<IdeologyGroup> group_from_string(std::string_view s) {
  for (IdeologyGroup g : kAllGroups)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

std::string_view pos_pole_name(Dimension dim) {
  switch (dim) {
    case Dimension::Science: return "pro_science";
    case Dimension::Political: return "conservative";
    case Dimension::Moderacy: return "moderate";
  }
  return "?";
}

std::string_view neg_pole_name(Dimension dim) {
  switch (dim) {
    case Dimension::Science: return "anti_science";
    case Dimension::Political: return "liberal";
    case Dimension::Moderacy: return "hardline";
  }
  return "?";
}

std::optional<int> pole_from_label(Dimension dim, std::string_view label) {
  if (label == pos_pole_name(dim)) return +1;
  if (label == neg_pole_name(dim)) return -1;
  return std::nullopt;
}

}  // namespace polarlens
