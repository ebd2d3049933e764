#pragma once

#include <filesystem>
#include <string>

namespace accept {

struct Options {
  int jobs = 2;
  std::filesystem::path scratch = "acceptance_scratch";
};

// Each criterion prints one "CRITERION <n> PASS/FAIL - <detail>" line and
// returns pass/fail.
bool criterion_gradients(const Options&);          // 1
bool criterion_tabular_oracle(const Options&);     // 2
bool criterion_reductions(const Options&);         // 3
bool criterion_safety(const Options&);             // 4
bool criterion_ordering(const Options&);           // 5
bool criterion_naive_sag(const Options&);          // 6
bool criterion_pag_robustness(const Options&);     // 7
bool criterion_metric_suite(const Options&);       // 8
bool smoke_point_mass_learning(const Options&);    // 9 (long-run example)

}  // namespace accept
