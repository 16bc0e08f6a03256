#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace dmt {

// Canonical face-parsing part IDs. On-disk encodings are mapped onto these
// through a LabelMapping.
enum class Part : std::uint8_t {
  background = 0,
  face = 1,
  left_brow = 2,
  right_brow = 3,
  left_eye = 4,
  right_eye = 5,
  nose = 6,
  upper_lip = 7,
  lower_lip = 8,
  mouth = 9,
  hair = 10,
  left_ear = 11,
  right_ear = 12,
  neck = 13,
};

inline constexpr int kNumParts = 14;
inline constexpr std::uint8_t kUnmapped = 0xFF;

constexpr std::uint8_t id(Part p) { return static_cast<std::uint8_t>(p); }

std::string_view part_name(Part p);

/// Lookup table from on-disk label value to canonical part ID.
///
/// The default table is the identity on 0..13 and rejects every other value.
/// An override string such as "7:8,9:7" overrides individual entries; "x:-" marks
/// a value as unmapped.
class LabelMapping {
 public:
  LabelMapping();

  static LabelMapping identity() { return LabelMapping{}; }
  static LabelMapping parse(std::string_view spec);

  std::uint8_t operator()(std::uint8_t raw) const { return table_[raw]; }
  void set(std::uint8_t raw, std::uint8_t canonical) { table_[raw] = canonical; }
  std::string to_string() const;

  bool operator==(const LabelMapping&) const = default;

 private:
  std::array<std::uint8_t, 256> table_{};
};

}  // namespace dmt
