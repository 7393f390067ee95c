#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathcast/geo.hpp"

#include <nlohmann/json_fwd.hpp>

namespace pathcast {

/// The six social/environmental factor kinds. Each kind backs exactly one
/// region-factor-region meta-path type.
enum class FactorKind : int {
  kEthnics = 0,
  kIncome = 1,
  kJob = 2,
  kCommuting = 3,
  kUrbanization = 4,
  kGeographic = 5,
};

inline constexpr int kFactorKindCount = 6;
inline constexpr std::array<FactorKind, kFactorKindCount> kAllFactorKinds = {
    FactorKind::kEthnics,    FactorKind::kIncome,       FactorKind::kJob,
    FactorKind::kCommuting,  FactorKind::kUrbanization, FactorKind::kGeographic,
};

std::string_view factor_name(FactorKind kind);        // "Ethnics", "Income", ...
std::string_view metapath_name(FactorKind kind);      // "RER", "RIR", "RJR", "RCR", "RUR", "RGR"
std::optional<FactorKind> factor_from_name(std::string_view name);
inline int kind_index(FactorKind kind) { return static_cast<int>(kind); }

/// A named group of count features within a factor kind.
struct Subcategory {
  std::string name;
  std::vector<std::string> features;
};

/// Ordered subcategory structure of one factor kind. The flat feature order
/// is the concatenation of subcategory feature lists, in declaration order.
struct KindTaxonomy {
  std::vector<Subcategory> subcategories;

  std::size_t feature_count() const;
  /// Start offset of each subcategory within the flat feature vector.
  std::vector<std::size_t> subcategory_offsets() const;
  std::vector<std::string> flat_feature_names() const;
};

/// Factor kind -> subcategories -> named count features.
class FeatureTaxonomy {
 public:
  KindTaxonomy& kind(FactorKind k) { return kinds_[kind_index(k)]; }
  const KindTaxonomy& kind(FactorKind k) const { return kinds_[kind_index(k)]; }

  /// Structural invariants: every kind has at least one subcategory, every
  /// subcategory is non-empty, and feature names are disjoint within a kind.
  /// Throws InputError on the first violation.
  void validate() const;

  nlohmann::json to_json() const;
  static FeatureTaxonomy from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static FeatureTaxonomy load(const std::filesystem::path& path);

  /// Shipped default derived from the supported census/POI schemas. The
  /// Geographic kind is left empty; ingest derives its adjacency features
  /// from the region list.
  static FeatureTaxonomy default_taxonomy();

  /// Replaces the Geographic kind with one adjacency subcategory whose
  /// features are the given region ids.
  void set_geographic_regions(std::span<const std::string> region_ids);

 private:
  std::array<KindTaxonomy, kFactorKindCount> kinds_;
};

/// Per-region factor count vectors plus centroid/geometry.
struct RegionProfile {
  std::string region_id;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<Polygon> geometry;
  /// Count vector per factor kind, ordered per taxonomy. Size 0 = missing.
  std::array<Eigen::VectorXd, kFactorKindCount> counts;

  bool has_kind(FactorKind k) const { return counts[kind_index(k)].size() > 0; }
  const Eigen::VectorXd& vector(FactorKind k) const { return counts[kind_index(k)]; }
  Eigen::VectorXd& vector(FactorKind k) { return counts[kind_index(k)]; }
};

struct ProfileViolation {
  std::string region_id;
  FactorKind kind;
  std::string message;
};

/// Checks every region/kind pair against the taxonomy: vector present,
/// length matches the taxonomy's feature count, all entries non-negative.
/// Valid input yields an empty report.
std::vector<ProfileViolation> validate_profiles(std::span<const RegionProfile> profiles,
                                                const FeatureTaxonomy& taxonomy);

/// Tabular profile exchange format: one row per region, one column per
/// feature (flat taxonomy order), header row mandatory.
void save_profiles_csv(std::ostream& out, std::span<const RegionProfile> profiles,
                       FactorKind kind, const FeatureTaxonomy& taxonomy);
/// Fills `kind` vectors of matching regions from the table; regions missing
/// from the file are left untouched. Unknown region ids are an error.
void load_profiles_csv(std::istream& in, std::span<RegionProfile> profiles, FactorKind kind,
                       const FeatureTaxonomy& taxonomy);

int region_index(std::span<const RegionProfile> profiles, std::string_view region_id);

}  // namespace pathcast
