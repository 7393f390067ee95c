#include "pathcast/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "pathcast/common.hpp"
#include "pathcast/csv.hpp"
#include "pathcast/geo.hpp"

namespace pathcast {

double path_count(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j) {
  if (counts_i.size() != counts_j.size()) {
    throw InputError("path_count: vector length mismatch (" + std::to_string(counts_i.size()) +
                     " vs " + std::to_string(counts_j.size()) + ")");
  }
  double total = 0.0;
  for (Eigen::Index f = 0; f < counts_i.size(); ++f) total += counts_i[f] * counts_j[f];
  return total;
}

double classic_pathsim(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j) {
  const double self_sum = path_count(counts_i, counts_i) + path_count(counts_j, counts_j);
  if (self_sum == 0.0) return 0.0;
  return 2.0 * path_count(counts_i, counts_j) / self_sum;
}

double dist_aware_pathsim(const Eigen::VectorXd& counts_i, const Eigen::VectorXd& counts_j,
                          const KindTaxonomy& taxonomy) {
  const auto total_features = taxonomy.feature_count();
  if (static_cast<std::size_t>(counts_i.size()) != total_features ||
      static_cast<std::size_t>(counts_j.size()) != total_features) {
    throw InputError("dist_aware_pathsim: vectors do not match the taxonomy feature count");
  }
  const auto offsets = taxonomy.subcategory_offsets();
  double similarity = 0.0;
  for (std::size_t s = 0; s < taxonomy.subcategories.size(); ++s) {
    const auto len = static_cast<Eigen::Index>(taxonomy.subcategories[s].features.size());
    const auto off = static_cast<Eigen::Index>(offsets[s]);
    const Eigen::VectorXd slice_i = counts_i.segment(off, len);
    const Eigen::VectorXd slice_j = counts_j.segment(off, len);
    const double weight = static_cast<double>(len) / static_cast<double>(total_features);
    // classic_pathsim already maps the both-empty subcategory to 0.
    similarity += weight * classic_pathsim(slice_i, slice_j);
  }
  return similarity;
}

namespace {

SimilarityMatrix geographic_similarity(std::span<const RegionProfile> profiles, const Hin& hin) {
  const int n = static_cast<int>(profiles.size());
  SimilarityMatrix matrix;
  matrix.kind = FactorKind::kGeographic;
  matrix.values = Eigen::MatrixXd::Zero(n, n);

  std::vector<double> adjacent_distances;
  const auto& links = hin.bins(FactorKind::kGeographic);
  for (const auto& link : links) {
    const auto& a = profiles[link.members[0]];
    const auto& b = profiles[link.members[1]];
    adjacent_distances.push_back(haversine_km(a.lat, a.lon, b.lat, b.lon));
  }
  double sigma = 1.0;
  if (!adjacent_distances.empty()) {
    std::vector<double> sorted = adjacent_distances;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    sigma = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (sigma <= 0.0) sigma = 1.0;
  }

  for (std::size_t l = 0; l < links.size(); ++l) {
    const int i = links[l].members[0];
    const int j = links[l].members[1];
    const double s = std::exp(-adjacent_distances[l] / sigma);
    matrix.values(i, j) = s;
    matrix.values(j, i) = s;
  }
  matrix.values.diagonal().setOnes();
  return matrix;
}

}  // namespace

SimilarityMatrix similarity_matrix(std::span<const RegionProfile> profiles, FactorKind kind,
                                   const FeatureTaxonomy& taxonomy, const Hin& hin) {
  if (kind == FactorKind::kGeographic) return geographic_similarity(profiles, hin);

  const int n = static_cast<int>(profiles.size());
  SimilarityMatrix matrix;
  matrix.kind = kind;
  matrix.values = Eigen::MatrixXd::Zero(n, n);
  const auto& kt = taxonomy.kind(kind);

  for (const auto& bin : hin.bins(kind)) {
    for (std::size_t a = 0; a < bin.members.size(); ++a) {
      const int i = bin.members[a];
      matrix.values(i, i) =
          dist_aware_pathsim(profiles[i].vector(kind), profiles[i].vector(kind), kt);
      for (std::size_t b = a + 1; b < bin.members.size(); ++b) {
        const int j = bin.members[b];
        const double s =
            dist_aware_pathsim(profiles[i].vector(kind), profiles[j].vector(kind), kt);
        matrix.values(i, j) = s;
        matrix.values(j, i) = s;
      }
    }
  }
  return matrix;
}

void save_similarity_csv(std::ostream& out, const SimilarityMatrix& matrix,
                         std::span<const std::string> region_ids) {
  std::vector<std::string> header = {"region_id"};
  header.insert(header.end(), region_ids.begin(), region_ids.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < region_ids.size(); ++i) {
    std::vector<std::string> row = {region_ids[i]};
    for (std::size_t j = 0; j < region_ids.size(); ++j) {
      row.push_back(format_double(matrix.values(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(j))));
    }
    rows.push_back(std::move(row));
  }
  write_csv(out, header, rows);
}

SimilarityMatrix load_similarity_csv(std::istream& in, FactorKind kind,
                                     std::span<const std::string> region_ids) {
  CsvTable table = read_csv(in);
  const int n = static_cast<int>(region_ids.size());
  if (table.header.size() != static_cast<std::size_t>(n) + 1 ||
      table.rows.size() != static_cast<std::size_t>(n)) {
    throw InputError("similarity matrix shape does not match the region list");
  }
  SimilarityMatrix matrix;
  matrix.kind = kind;
  matrix.values.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (table.rows[i][0] != region_ids[i] || table.header[i + 1] != region_ids[i]) {
      throw InputError("similarity matrix region order does not match the region list");
    }
    for (int j = 0; j < n; ++j) {
      matrix.values(i, j) = std::stod(table.rows[i][j + 1]);
    }
  }
  return matrix;
}

std::array<SimilarityMatrix, kFactorKindCount> all_similarity_matrices(
    std::span<const RegionProfile> profiles, const FeatureTaxonomy& taxonomy, const Hin& hin) {
  std::array<SimilarityMatrix, kFactorKindCount> matrices;
  for (FactorKind kind : kAllFactorKinds) {
    matrices[kind_index(kind)] = similarity_matrix(profiles, kind, taxonomy, hin);
  }
  return matrices;
}

}  // namespace pathcast
