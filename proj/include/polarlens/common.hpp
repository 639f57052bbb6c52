#pragma once
// Shared enums, pole-label vocabulary and error types used across the library.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polarlens {

// Input or configuration problem. Maps to exit code 2 at the CLI boundary;
// anything else thrown is a runtime failure and maps to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Dimension { Science, Political, Moderacy };

inline constexpr Dimension kAllDimensions[] = {Dimension::Science, Dimension::Political,
                                               Dimension::Moderacy};

// Binned position along one dimension. PosPole carries pole value +1,
// NegPole carries -1 (science: pro/anti, political: conservative/liberal,
// moderacy: moderate/hardline).
enum class Bin { NegPole, Unbinned, PosPole };

// The six ideological groups. Left/Right only apply to hardline users;
// moderates collapse the political axis.
enum class IdeologyGroup {
  ProSciLeft,
  ProSciModerate,
  ProSciRight,
  AntiSciLeft,
  AntiSciModerate,
  AntiSciRight,
};

inline constexpr IdeologyGroup kAllGroups[] = {
    IdeologyGroup::ProSciLeft,     IdeologyGroup::ProSciModerate, IdeologyGroup::ProSciRight,
    IdeologyGroup::AntiSciLeft,    IdeologyGroup::AntiSciModerate, IdeologyGroup::AntiSciRight,
};

std::string_view to_string(Dimension dim);
std::string_view to_string(Bin bin);
std::string_view to_string(IdeologyGroup g);

std::optional<Dimension> dimension_from_string(std::string_view s);
std::optional<IdeologyGroup> group_from_string(std::string_view s);

// Pole label vocabulary, e.g. science: pro_science (+1) / anti_science (-1).
std::string_view pos_pole_name(Dimension dim);
std::string_view neg_pole_name(Dimension dim);

// Maps a catalog/seed label to its pole value (+1 or -1) along `dim`.
// Unknown labels yield nullopt.
std::optional<int> pole_from_label(Dimension dim, std::string_view label);

inline std::string_view pole_name(Dimension dim, int pole) {
  return pole > 0 ? pos_pole_name(dim) : neg_pole_name(dim);
}

// Binary confusion counts with the positive pole as the positive class.
struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t total() const { return tp + fp + tn + fn; }
};

}  // namespace polarlens
