#pragma once

#include <string>

#include "gridsense/matpower.hpp"

namespace gridsense::test {

// Slack at bus 1, loads elsewhere, one branch row per line of `branches`.
inline std::string small_case_text(const std::string& buses, const std::string& branches,
                                   const std::string& gens = "\t1\t0\t0\t300\t-300\t1\t100\t1\t250\t10;\n") {
  return "function mpc = small\n"
         "mpc.version = '2';\n"
         "mpc.baseMVA = 100;\n"
         "mpc.bus = [\n" + buses + "];\n"
         "mpc.gen = [\n" + gens + "];\n"
         "mpc.branch = [\n" + branches + "];\n";
}

// 1 -- 2 with series r + jx and no charging.
inline std::string two_bus_text(double r, double x) {
  return small_case_text(
      "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t2\t1\t50\t10\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n",
      "\t1\t2\t" + std::to_string(r) + "\t" + std::to_string(x) + "\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n");
}

// 1 -- 2 -- 3 chain.
inline std::string chain_text() {
  return small_case_text(
      "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t2\t1\t40\t10\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t3\t1\t30\t5\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n",
      "\t1\t2\t0.01\t0.1\t0.02\t0\t0\t0\t0\t0\t1\t-360\t360;\n"
      "\t2\t3\t0.02\t0.2\t0.01\t0\t0\t0\t0\t0\t1\t-360\t360;\n");
}

inline GridCase from_text(const std::string& text) { return validate_case(parse_case(text)); }

}  // namespace gridsense::test
