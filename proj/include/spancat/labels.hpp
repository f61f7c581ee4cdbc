#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace spancat {

// The first ten values are the experiment scheme, in report order. The four
// raw categories exist only before collapse_labels. Empty is the evaluation
// sentinel and Other carries labels outside the guideline (lenient import).
enum class Label : std::uint8_t {
  Attribution,
  Counter,
  Deny,
  Entertain,
  Monogloss,
  Proclaim,
  Citation,
  Endophoric,
  Justifying,
  Sources,
  Attribute,
  Endorse,
  Concur,
  Pronounce,
  Empty,
  Other,
};

inline constexpr std::size_t kNumLabels = 10;
inline constexpr std::size_t kNumLabelValues = 16;

inline constexpr std::array<Label, kNumLabels> kSchemeLabels = {
    Label::Attribution, Label::Counter,  Label::Deny,       Label::Entertain,
    Label::Monogloss,   Label::Proclaim, Label::Citation,   Label::Endophoric,
    Label::Justifying,  Label::Sources,
};

inline constexpr std::array<std::string_view, kNumLabelValues> kLabelNames = {
    "ATTRIBUTION", "COUNTER",    "DENY",       "ENTERTAIN", "MONOGLOSS", "PROCLAIM",
    "CITATION",    "ENDOPHORIC", "JUSTIFYING", "SOURCES",   "ATTRIBUTE", "ENDORSE",
    "CONCUR",      "PRONOUNCE",  "EMPTY",      "OTHER",
};

constexpr std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

constexpr bool is_scheme_label(Label l) { return label_index(l) < kNumLabels; }

constexpr bool is_raw_label(Label l) {
  return l == Label::Attribute || l == Label::Endorse || l == Label::Concur ||
         l == Label::Pronounce;
}

constexpr std::string_view label_name(Label l) { return kLabelNames[label_index(l)]; }

// Case-insensitive. CONTRIBUTION is accepted as an alias for ATTRIBUTION.
// Returns nullopt for anything unrecognised, including EMPTY and OTHER,
// which are never valid on input.
inline std::optional<Label> parse_label(std::string_view text) {
  std::string up(text);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "CONTRIBUTION") return Label::Attribution;
  for (std::size_t i = 0; i < label_index(Label::Empty); ++i)
    if (kLabelNames[i] == up) return static_cast<Label>(i);
  return std::nullopt;
}

constexpr Label collapse(Label l) {
  switch (l) {
    case Label::Concur:
    case Label::Pronounce:
      return Label::Proclaim;
    case Label::Attribute:
    case Label::Endorse:
      return Label::Attribution;
    default:
      return l;
  }
}

// Short tags used by the highlight renderer.
inline constexpr std::array<std::string_view, kNumLabels> kLabelAbbrev = {
    "ATT", "CTR", "DEN", "ENT", "MON", "PRO", "CIT", "END", "JUS", "SRC",
};

// ANSI SGR background colours, one per scheme label.
inline constexpr std::array<std::string_view, kNumLabels> kLabelAnsi = {
    "45", "41", "101", "44", "100", "42", "46", "43", "105", "106",
};

inline constexpr std::array<std::string_view, kNumLabels> kLabelCss = {
    "#d9b3ff", "#ff9999", "#ff6666", "#99c2ff", "#cccccc",
    "#99e699", "#99e6e6", "#ffe066", "#ffb3e6", "#b3ffff",
};

}  // namespace spancat
