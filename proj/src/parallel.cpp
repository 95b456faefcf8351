#include "gridsense/parallel.hpp"

namespace gridsense {

std::string_view to_string(ExecutionPolicy policy) {
  return policy == ExecutionPolicy::Serial ? "serial" : "parallel";
}

}  // namespace gridsense
