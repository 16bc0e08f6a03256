#include "dmt/labels.hpp"

#include <cctype>

#include <charconv>
#include <stdexcept>
#include <vector>

namespace dmt {

namespace {

constexpr std::array<std::string_view, kNumParts> kPartNames = {
    "background", "face",      "left_brow", "right_brow", "left_eye", "right_eye", "nose",
    "upper_lip",  "lower_lip", "mouth",     "hair",       "left_ear", "right_ear", "neck"};

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("label mapping: not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view part_name(Part p) { return kPartNames.at(id(p)); }

LabelMapping::LabelMapping() {
  table_.fill(kUnmapped);
  for (int i = 0; i < kNumParts; ++i) table_[i] = static_cast<std::uint8_t>(i);
}

LabelMapping LabelMapping::parse(std::string_view spec) {
  LabelMapping mapping;
  while (!spec.empty()) {
    auto comma = spec.find(',');
    auto item = trim(spec.substr(0, comma));
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("label mapping entry needs 'raw:canonical': " + std::string(item));
    }
    int raw = parse_int(trim(item.substr(0, colon)));
    auto rhs = trim(item.substr(colon + 1));
    if (raw < 0 || raw > 255) throw std::invalid_argument("label mapping: raw value out of range");
    if (rhs == "-") {
      mapping.set(static_cast<std::uint8_t>(raw), kUnmapped);
      continue;
    }
    int canonical = parse_int(rhs);
    if (canonical < 0 || canonical >= kNumParts) {
      throw std::invalid_argument("label mapping: canonical id out of range: " + std::string(rhs));
    }
    mapping.set(static_cast<std::uint8_t>(raw), static_cast<std::uint8_t>(canonical));
  }
  return mapping;
}

std::string LabelMapping::to_string() const {
  LabelMapping base;
  std::string out;
  for (int raw = 0; raw < 256; ++raw) {
    if (table_[raw] == base.table_[raw]) continue;
    if (!out.empty()) out += ',';
    out += std::to_string(raw) + ':' +
           (table_[raw] == kUnmapped ? std::string("-") : std::to_string(table_[raw]));
  }
  return out;
}

}  // namespace dmt
