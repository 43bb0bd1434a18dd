#pragma once

#include <string>
#include <vector>

#include "dfaprint/features.hpp"
#include "dfaprint/synth.hpp"

namespace fixtures {

// Families that differ only in their DFA exponents.
inline std::vector<dfaprint::FamilySpec> dfa_only_families() {
  const std::vector<std::vector<double>> alphas{{0.5, 1.2, 0.8, 1.0}, {1.1, 0.6, 1.3, 0.7}, {0.8, 0.9, 0.5, 1.4}};
  const char* names[] = {"fa", "fb", "fc"};
  std::vector<dfaprint::FamilySpec> out;
  for (std::size_t f = 0; f < alphas.size(); ++f) {
    dfaprint::FamilySpec s;
    s.name = names[f];
    s.alpha_targets = alphas[f];
    s.correlation = Eigen::MatrixXd::Identity(4, 4);
    s.amplitudes.assign(4, 1.0);
    s.offsets.assign(4, 0.0);
    out.push_back(s);
  }
  return out;
}

struct Dataset {
  std::vector<dfaprint::FeatureVector> fingerprints;
  std::vector<dfaprint::FamilyLabel> labels;
  std::vector<std::string> groups;
};

inline Dataset make_dataset(const std::vector<dfaprint::FamilySpec>& specs, std::size_t per_family,
                            std::size_t runs, std::size_t length, std::uint64_t seed = 1000) {
  Dataset d;
  for (const auto& spec : specs)
    for (std::size_t s = 0; s < per_family; ++s)
      for (std::size_t r = 0; r < runs; ++r) {
        d.fingerprints.push_back(dfaprint::fingerprint(dfaprint::generate_synthetic_trace(spec, seed++, length)));
        d.labels.push_back(spec.name);
        d.groups.push_back(spec.name + "/" + std::to_string(s));
      }
  return d;
}

}  // namespace fixtures
