#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "pathcast/feature_model.hpp"
#include "pathcast/hin.hpp"

namespace pathcast {

/// Number of length-2 path instances between two regions through shared
/// count features: each feature f contributes counts_i[f] * counts_j[f]
/// paths, so the total is the inner product of the two count vectors.
double path_count(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j);

/// PathSim for a symmetric length-2 meta-path:
///   2 * path_count(i, j) / (path_count(i, i) + path_count(j, j)).
/// Both self-counts zero is defined as 0.
double classic_pathsim(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j);

/// Subcategory-weighted PathSim: the count vectors are partitioned by the
/// kind's subcategories and each subcategory z contributes its restricted
/// PathSim with weight |z|/|Z| (|z| features in z, |Z| features in total).
/// A subcategory empty in both regions contributes 0, without weight
/// renormalization.
double dist_aware_pathsim(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j,
                          const KindTaxonomy& taxonomy);

struct SimilarityMatrix {
  FactorKind kind = FactorKind::kEthnics;
  Eigen::MatrixXd values;  // |I| x |I|, symmetric, entries in [0, 1]

  double at(int i, int j) const { return values(i, j); }
};

/// Similarity matrix for one meta-path type. Entries exist only for region
/// pairs connected by an instance of the kind (shared bin); everything else
/// is 0. The Geographic kind uses exp(-d/sigma) over adjacent pairs with
/// sigma = the median adjacent-pair centroid distance, and 1 on the
/// diagonal; all other kinds use dist_aware_pathsim on the raw count
/// vectors.
SimilarityMatrix similarity_matrix(std::span<const RegionProfile> profiles, FactorKind kind,
                                   const FeatureTaxonomy& taxonomy, const Hin& hin);

/// Dense tabular form with a region-id header row and column.
void save_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix,
                         std::span<const std::string> region_ids);
SimilarityMatrix load_similarity_csv(std::istream& in, FactorKind kind,
                                     std::span<const std::string> region_ids);

std::array<SimilarityMatrix, kFactorKindCount> all_similarity_matrices(
    std::span<const RegionProfile> profiles, const FeatureTaxonomy& taxonomy, const Hin& hin);

}  // namespace pathcast
