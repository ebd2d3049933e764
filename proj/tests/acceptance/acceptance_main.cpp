#include "acceptance.hpp"

#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
  accept::Options opt;
  int criterion = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc)
      criterion = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc)
      opt.jobs = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--scratch") && i + 1 < argc)
      opt.scratch = argv[++i];
    else {
      std::cerr << "usage: rllg_acceptance --criterion N [--jobs N] [--scratch DIR]\n";
      return 2;
    }
  }
  using Fn = bool (*)(const accept::Options&);
  const Fn criteria[] = {accept::criterion_gradients,
                         accept::criterion_tabular_oracle,
                         accept::criterion_reductions,
                         accept::criterion_safety,
                         accept::criterion_ordering,
                         accept::criterion_naive_sag,
                         accept::criterion_pag_robustness,
                         accept::criterion_metric_suite,
                         accept::smoke_point_mass_learning};
  bool ok = true;
  if (criterion >= 1 && criterion <= 9) {
    ok = criteria[criterion - 1](opt);
  } else {
    for (int c = 1; c <= 8; ++c) ok = criteria[c - 1](opt) && ok;
  }
  return ok ? 0 : 1;
}
