#pragma once

#include <cstdint>
#include <vector>

#include "pathcast/hin.hpp"
#include "pathcast/ingest.hpp"
#include "pathcast/similarity.hpp"

namespace pathcast {

/// Seeded generator for planted-signal experiments. Regions are assigned
/// income bins; the signal crime category spreads within a bin — a region's
/// occurrence probability on day t is
///     base_rate + contagion_gain * (same-bin peer occurrence fraction, day t-1)
/// so peers raise the rate and the bin activity is strongly autocorrelated.
/// Every other factor kind draws uninformative random profiles, and every
/// other crime category is iid noise.
struct SyntheticConfig {
  int regions = 20;
  int days = 200;
  int categories = 3;
  int quantile_bins = 3;
  std::uint64_t seed = 7;
  int signal_category = 0;
  double base_rate = 0.03;
  double contagion_gain = 0.85;
  double noise_rate = 0.12;
};

struct SyntheticData {
  DatasetBundle bundle;
  Hin hin;
  std::array<SimilarityMatrix, kFactorKindCount> sims;
  std::vector<int> planted_bin;  // per region: the income bin carrying the signal
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace pathcast
