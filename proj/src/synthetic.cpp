#include "pathcast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

FeatureTaxonomy synthetic_taxonomy() {
  FeatureTaxonomy t;
  t.kind(FactorKind::kEthnics) = {{
      {"population_share", {"group_a", "group_b", "group_c"}},
  }};
  t.kind(FactorKind::kIncome) = {{
      {"household_income", {"mean", "median", "variance"}},
  }};
  t.kind(FactorKind::kJob) = {{
      {"occupation", {"professional", "service"}},
      {"class_of_worker", {"private_work", "public_work"}},
  }};
  t.kind(FactorKind::kCommuting) = {{
      {"mode", {"drive", "transit", "walk"}},
  }};
  t.kind(FactorKind::kUrbanization) = {{
      {"educational", {"elementary_school", "high_school"}},
      {"recreational", {"zoo", "pool"}},
  }};
  return t;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  if (config.regions < config.quantile_bins || config.days < 4 || config.categories < 1) {
    throw InputError("generate_synthetic: degenerate configuration");
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticData data;
  data.bundle.taxonomy = synthetic_taxonomy();

  const int n = config.regions;

  // Planted income bins mirror the sort-and-split quantile arithmetic, so
  // the network build recovers exactly these groups.
  data.planted_bin.resize(n);
  {
    int start = 0;
    for (int b = 0; b < config.quantile_bins; ++b) {
      int cut = static_cast<int>(
          std::llround(static_cast<double>(n) * (b + 1) / config.quantile_bins));
      if (b == config.quantile_bins - 1) cut = n;
      for (int r = start; r < cut; ++r) data.planted_bin[r] = b;
      start = cut;
    }
  }

  // Jittered grid of centroids, shuffled so that geography carries no
  // information about the planted bins.
  const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::vector<int> cells(n);
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);

  std::uniform_real_distribution<double> jitter(-0.002, 0.002);
  std::uniform_int_distribution<int> count_dist(10, 100);
  for (int r = 0; r < n; ++r) {
    RegionProfile profile;
    char name[16];
    std::snprintf(name, sizeof name, "R%02d", r);
    profile.region_id = name;
    profile.lat = 40.60 + 0.02 * (cells[r] / grid_cols) + jitter(rng);
    profile.lon = -74.00 + 0.02 * (cells[r] % grid_cols) + jitter(rng);

    const double bin_income = 30000.0 * (1 + data.planted_bin[r]);
    const double mean = bin_income + 4000.0 * (unit(rng) - 0.5);
    Eigen::VectorXd income(3);
    income << mean, 0.93 * mean + 500.0 * (unit(rng) - 0.5), 40.0 * mean + 1e5 * unit(rng);
    profile.vector(FactorKind::kIncome) = income;

    for (FactorKind kind : {FactorKind::kEthnics, FactorKind::kJob, FactorKind::kCommuting,
                            FactorKind::kUrbanization}) {
      const auto features = data.bundle.taxonomy.kind(kind).feature_count();
      Eigen::VectorXd vec(static_cast<Eigen::Index>(features));
      for (Eigen::Index f = 0; f < vec.size(); ++f) vec[f] = count_dist(rng);
      profile.vector(kind) = vec;
    }
    data.bundle.profiles.push_back(std::move(profile));
  }

  data.bundle.geography = compute_geography(data.bundle.profiles, 0.0);
  apply_geography(data.bundle.profiles, data.bundle.geography, data.bundle.taxonomy);

  // Crime process.
  std::vector<std::string> region_ids;
  std::vector<std::string> categories;
  for (const auto& p : data.bundle.profiles) region_ids.push_back(p.region_id);
  for (int c = 0; c < config.categories; ++c) categories.push_back("cat" + std::to_string(c));
  StudyPeriod period{parse_date("2015-01-01"),
                     add_days(parse_date("2015-01-01"), config.days - 1)};
  CrimeTensor tensor(period, region_ids, categories);

  std::vector<std::vector<int>> bin_members(config.quantile_bins);
  for (int r = 0; r < n; ++r) bin_members[data.planted_bin[r]].push_back(r);

  std::vector<int> occurred(n, 0), previous(n, 0);
  for (int t = 0; t < config.days; ++t) {
    for (int r = 0; r < n; ++r) {
      double peer_fraction;
      if (t == 0) {
        // Half the bins start active, igniting the contagion.
        peer_fraction = (data.planted_bin[r] % 2 == 0) ? 0.5 : 0.0;
      } else {
        int peers = 0, active = 0;
        for (int peer : bin_members[data.planted_bin[r]]) {
          if (peer == r) continue;
          ++peers;
          active += previous[peer];
        }
        peer_fraction = peers > 0 ? static_cast<double>(active) / peers : 0.0;
      }
      const double rate =
          std::min(0.95, config.base_rate + config.contagion_gain * peer_fraction);
      occurred[r] = unit(rng) < rate ? 1 : 0;
      if (occurred[r]) tensor.add(t, r, config.signal_category, 1);

      for (int c = 0; c < config.categories; ++c) {
        if (c == config.signal_category) continue;
        if (unit(rng) < config.noise_rate) tensor.add(t, r, c, 1);
      }
    }
    previous = occurred;
  }
  data.bundle.tensor = std::move(tensor);

  BinConfig bins{config.quantile_bins};
  data.hin = Hin::build(data.bundle.profiles, data.bundle.taxonomy, bins);
  data.sims = all_similarity_matrices(data.bundle.profiles, data.bundle.taxonomy, data.hin);
  return data;
}

}  // namespace pathcast
