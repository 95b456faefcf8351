#include "gridsense/fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

struct Alias {
  std::string_view name;
  std::string_view stem;
};

// IEEE-30 maps to MATPOWER's case_ieee30 (the original IEEE data); MATPOWER's
// case30 is a modified variant.
constexpr Alias kAliases[] = {
    {"ieee9", "case9"},   {"ieee14", "case14"}, {"ieee30", "case_ieee30"},
    {"ieee39", "case39"}, {"ieee57", "case57"}, {"ieee118", "case118"},
};

}  // namespace

const std::vector<std::string>& bundled_case_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& a : kAliases) out.emplace_back(a.name);
    return out;
  }();
  return names;
}

std::string_view bundled_case_text(std::string_view name) {
  std::string_view stem = name;
  for (const auto& a : kAliases)
    if (a.name == name) stem = a.stem;
  for (const auto& [key, text] : detail::embedded_fixtures())
    if (key == stem) return text;
  return {};
}

GridCase load_case(const std::string& name_or_path) {
  if (auto text = bundled_case_text(name_or_path); !text.empty()) {
    GridCase grid = validate_case(parse_case(text));
    for (const auto& a : kAliases)
      if (a.name == name_or_path || a.stem == name_or_path) grid.name = std::string(a.name);
    return grid;
  }
  std::ifstream in(name_or_path);
  if (!in)
    throw Error(ErrorKind::Config, "case '" + name_or_path + "' is neither a bundled fixture nor a readable file");
  std::ostringstream buf;
  buf << in.rdbuf();
  GridCase grid = validate_case(parse_case(buf.str()));
  if (grid.name.empty()) grid.name = std::filesystem::path(name_or_path).stem().string();
  return grid;
}

}  // namespace gridsense
