#include "pathcast/hin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

/// Scalar summary for the quantile-binned kinds.
double summary_statistic(const RegionProfile& profile, FactorKind kind) {
  const auto& vec = profile.vector(kind);
  if (vec.size() == 0) throw InputError(profile.region_id + ": missing vector for quantile bin");
  if (kind == FactorKind::kIncome) {
    return vec[0];  // mean income is the leading income feature
  }
  // Ethnics: majority-group share.
  const double total = vec.sum();
  return total > 0.0 ? vec.maxCoeff() / total : 0.0;
}

/// Sort-and-split quantile assignment. Cuts shift forward past ties so that
/// equal summaries always land in the same bin; empty bins are dropped.
std::vector<FactorBinNode> quantile_bins(std::span<const RegionProfile> profiles,
                                         FactorKind kind, int bin_count) {
  const int n = static_cast<int>(profiles.size());
  if (n < bin_count) {
    throw InputError(std::string(factor_name(kind)) + ": fewer regions (" + std::to_string(n) +
                     ") than requested bins (" + std::to_string(bin_count) + ")");
  }
  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i) order[i] = {summary_statistic(profiles[i], kind), i};
  std::sort(order.begin(), order.end());

  std::vector<FactorBinNode> bins;
  int start = 0;
  for (int b = 0; b < bin_count && start < n; ++b) {
    int cut = static_cast<int>(std::llround(static_cast<double>(n) * (b + 1) / bin_count));
    cut = std::max(cut, start + 1);
    while (cut < n && order[cut].first == order[cut - 1].first) ++cut;
    if (b == bin_count - 1) cut = n;
    FactorBinNode bin;
    bin.kind = kind;
    bin.label = std::string(factor_name(kind)) + "_q" + std::to_string(bins.size());
    for (int i = start; i < cut; ++i) bin.members.push_back(order[i].second);
    std::sort(bin.members.begin(), bin.members.end());
    bins.push_back(std::move(bin));
    start = cut;
  }
  return bins;
}

/// One bin per dominant subcategory; regions share a bin iff their largest
/// subcategory count sum has the same index.
std::vector<FactorBinNode> dominant_subcategory_bins(std::span<const RegionProfile> profiles,
                                                     FactorKind kind,
                                                     const FeatureTaxonomy& taxonomy) {
  const auto& kt = taxonomy.kind(kind);
  const auto offsets = kt.subcategory_offsets();
  const int sub_count = static_cast<int>(kt.subcategories.size());

  std::vector<std::vector<int>> members(sub_count);
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const auto& vec = profiles[r].vector(kind);
    if (static_cast<std::size_t>(vec.size()) != kt.feature_count()) {
      throw InputError(profiles[r].region_id + ": vector/taxonomy mismatch for " +
                       std::string(factor_name(kind)));
    }
    int best = 0;
    double best_sum = -1.0;
    for (int s = 0; s < sub_count; ++s) {
      const auto len = static_cast<Eigen::Index>(kt.subcategories[s].features.size());
      const double sum = vec.segment(static_cast<Eigen::Index>(offsets[s]), len).sum();
      if (sum > best_sum) {
        best_sum = sum;
        best = s;
      }
    }
    members[best].push_back(static_cast<int>(r));
  }

  std::vector<FactorBinNode> bins;
  for (int s = 0; s < sub_count; ++s) {
    if (members[s].empty()) continue;
    FactorBinNode bin;
    bin.kind = kind;
    bin.label = std::string(factor_name(kind)) + "_dom_" + kt.subcategories[s].name;
    bin.members = std::move(members[s]);
    bins.push_back(std::move(bin));
  }
  return bins;
}

/// One link node per adjacent pair, read off the stored adjacency rows.
std::vector<FactorBinNode> geographic_bins(std::span<const RegionProfile> profiles) {
  const int n = static_cast<int>(profiles.size());
  std::vector<FactorBinNode> bins;
  for (int i = 0; i < n; ++i) {
    const auto& row = profiles[i].vector(FactorKind::kGeographic);
    if (row.size() != n) {
      throw InputError(profiles[i].region_id +
                       ": Geographic vector must be the adjacency indicator over all regions");
    }
    for (int j = i + 1; j < n; ++j) {
      if (row[j] > 0.0) {
        FactorBinNode bin;
        bin.kind = FactorKind::kGeographic;
        bin.label = "Geographic_link_" + std::to_string(i) + "_" + std::to_string(j);
        bin.members = {i, j};
        bins.push_back(std::move(bin));
      }
    }
  }
  return bins;
}

}  // namespace

std::vector<FactorBinNode> bin_regions(std::span<const RegionProfile> profiles, FactorKind kind,
                                       const FeatureTaxonomy& taxonomy,
                                       const BinConfig& config) {
  switch (kind) {
    case FactorKind::kIncome:
    case FactorKind::kEthnics:
      return quantile_bins(profiles, kind, config.quantile_bins);
    case FactorKind::kJob:
    case FactorKind::kCommuting:
    case FactorKind::kUrbanization:
      return dominant_subcategory_bins(profiles, kind, taxonomy);
    case FactorKind::kGeographic:
      return geographic_bins(profiles);
  }
  throw std::logic_error("unreachable factor kind");
}

Hin Hin::build(std::span<const RegionProfile> profiles, const FeatureTaxonomy& taxonomy,
               const BinConfig& config) {
  Hin hin;
  hin.region_ids_.reserve(profiles.size());
  for (const auto& p : profiles) hin.region_ids_.push_back(p.region_id);

  for (FactorKind kind : kAllFactorKinds) {
    auto bins = bin_regions(profiles, kind, taxonomy, config);
    auto& region_bins = hin.region_bins_[kind_index(kind)];
    region_bins.assign(profiles.size(), {});
    for (std::size_t b = 0; b < bins.size(); ++b) {
      for (int member : bins[b].members) {
        region_bins[member].push_back(static_cast<int>(b));
      }
    }
    hin.bins_[kind_index(kind)] = std::move(bins);
  }
  return hin;
}

const std::vector<int>& Hin::bins_of(FactorKind kind, int region) const {
  if (region < 0 || region >= region_count()) {
    throw InputError("unknown region index " + std::to_string(region));
  }
  return region_bins_[kind_index(kind)][region];
}

std::vector<MetaPathInstance> Hin::enumerate_instances(FactorKind kind, int target,
                                                       bool include_self) const {
  if (target < 0 || target >= region_count()) {
    throw InputError("unknown region index " + std::to_string(target));
  }
  const auto& kind_bins = bins_[kind_index(kind)];
  std::vector<MetaPathInstance> instances;
  for (int bin : bins_of(kind, target)) {
    for (int peer : kind_bins[bin].members) {
      if (peer == target && !include_self) continue;
      instances.push_back({target, bin, peer});
    }
  }
  std::sort(instances.begin(), instances.end(),
            [&](const MetaPathInstance& a, const MetaPathInstance& b) {
              if (a.target != b.target) return a.target < b.target;
              return kind_bins[a.bin].label < kind_bins[b.bin].label;
            });
  return instances;
}

void Hin::export_edges(std::ostream& out) const {
  out << "node_type\tnode_id\tnode_type\tnode_id\n";
  for (FactorKind kind : kAllFactorKinds) {
    for (const auto& bin : bins_[kind_index(kind)]) {
      for (int member : bin.members) {
        out << "region\t" << region_ids_[member] << "\t" << factor_name(kind) << "\t"
            << bin.label << "\n";
      }
    }
  }
}

int Hin::entity_type_count() const {
  int types = 1;  // regions
  for (const auto& kind_bins : bins_) {
    if (!kind_bins.empty()) ++types;
  }
  return types;
}

int Hin::relation_type_count() const {
  int types = 0;
  for (const auto& kind_bins : bins_) {
    if (!kind_bins.empty()) ++types;
  }
  return types;
}

}  // namespace pathcast
