#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsense/matpower.hpp"

namespace gridsense {

/// Short names of the bundled IEEE cases, smallest first.
const std::vector<std::string>& bundled_case_names();

/// Case text for a bundled name ("ieee14", or the MATPOWER stem "case14").
/// Returns an empty view when the name is unknown.
std::string_view bundled_case_text(std::string_view name);

/// Resolves a bundled name or a filesystem path to a validated case.
/// Throws Error{Config} if neither exists.
GridCase load_case(const std::string& name_or_path);

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_fixtures();
}

}  // namespace gridsense
