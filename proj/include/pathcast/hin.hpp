#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pathcast/feature_model.hpp"

namespace pathcast {

/// Intermediate network node grouping regions that share a factor
/// characteristic. For the Geographic kind a bin is one link node per
/// adjacent region pair.
struct FactorBinNode {
  FactorKind kind;
  std::string label;
  std::vector<int> members;  // region indices, ascending
};

/// Concrete region-factor-region path. `bin` indexes the bin list of the
/// instance's kind.
struct MetaPathInstance {
  int source = 0;
  int bin = 0;
  int target = 0;
};

struct BinConfig {
  /// Quantile bins for the scalar-summary kinds (Income, Ethnics).
  int quantile_bins = 3;
};

/// Groups regions into factor bins:
///   Income      quantile bins over the mean-income feature (first feature),
///   Ethnics     quantile bins over the majority-group share,
///   Job / Commuting / Urbanization
///               one bin per dominant subcategory (argmax of subcategory
///               count sums, ties to the lowest index),
///   Geographic  one link node per adjacent region pair (from the stored
///               adjacency indicator vectors).
/// Quantile binning keeps equal summary values in the same bin, so fully
/// degenerate input collapses to a single bin. Fewer regions than requested
/// bins is an error.
std::vector<FactorBinNode> bin_regions(std::span<const RegionProfile> profiles, FactorKind kind,
                                       const FeatureTaxonomy& taxonomy, const BinConfig& config);

/// Region nodes plus factor-bin nodes with membership edges. Immutable
/// after build; enumeration is read-only.
class Hin {
 public:
  static Hin build(std::span<const RegionProfile> profiles, const FeatureTaxonomy& taxonomy,
                   const BinConfig& config);

  int region_count() const { return static_cast<int>(region_ids_.size()); }
  const std::vector<std::string>& region_ids() const { return region_ids_; }
  const std::vector<FactorBinNode>& bins(FactorKind kind) const {
    return bins_[kind_index(kind)];
  }
  /// Bin indices (into bins(kind)) that contain the region.
  const std::vector<int>& bins_of(FactorKind kind, int region) const;

  /// All instances (target, m, r*) of the kind where r* shares a bin m with
  /// target; the self instance (target, m, target) is included per bin iff
  /// include_self. Deterministic order: by peer region index, then bin label.
  std::vector<MetaPathInstance> enumerate_instances(FactorKind kind, int target,
                                                    bool include_self = true) const;

  /// Edge list export: node_type, node_id, node_type, node_id.
  void export_edges(std::ostream& out) const;

  /// Node and relation type counts over the whole network (regions plus one
  /// node type per populated factor kind; one relation type per kind).
  int entity_type_count() const;
  int relation_type_count() const;

 private:
  std::vector<std::string> region_ids_;
  std::array<std::vector<FactorBinNode>, kFactorKindCount> bins_;
  std::array<std::vector<std::vector<int>>, kFactorKindCount> region_bins_;
};

}  // namespace pathcast
