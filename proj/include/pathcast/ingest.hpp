#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pathcast/common.hpp"
#include "pathcast/feature_model.hpp"

namespace pathcast {

/// Inclusive day range [start, end].
struct StudyPeriod {
  CivilDate start;
  CivilDate end;

  int days() const { return days_between(start, end) + 1; }
  bool contains(const CivilDate& d) const;
  /// 0-based day index within the period; the date must be contained.
  int index_of(const CivilDate& d) const;
  CivilDate date_at(int index) const { return add_days(start, index); }
};

struct CrimeEvent {
  CivilDate date;
  std::string region_id;
  int category = 0;  // index into the configured category list
  int count = 1;
};

/// Row-level issues collected by loaders instead of aborting.
struct SkipReport {
  struct Entry {
    long row = 0;  // 1-based data row number (header excluded)
    std::string reason;
  };
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  void add(long row, std::string reason) { entries.push_back({row, std::move(reason)}); }
};

struct CrimeLoadResult {
  std::vector<CrimeEvent> events;
  SkipReport skipped;
};

/// Reads rows with columns date, region, category and an optional count
/// column. Rows with unmapped categories, malformed dates/counts, or dates
/// outside the period are skipped and reported. When `known_regions` is
/// non-empty, rows for other regions are skipped and reported too.
CrimeLoadResult load_crime_events(std::istream& in,
                                  const std::vector<std::string>& categories,
                                  const StudyPeriod& period,
                                  std::span<const std::string> known_regions = {});

/// Daily counts and binary occurrences per (day, region, category).
/// Occurrences are derived: occurred(t, r, c) == counts(t, r, c) >= 1.
class CrimeTensor {
 public:
  CrimeTensor() = default;
  CrimeTensor(StudyPeriod period, std::vector<std::string> regions,
              std::vector<std::string> categories);

  int days() const { return period_.days(); }
  int region_count() const { return static_cast<int>(regions_.size()); }
  int category_count() const { return static_cast<int>(categories_.size()); }
  const StudyPeriod& period() const { return period_; }
  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<std::string>& categories() const { return categories_; }

  std::int32_t count(int day, int region, int category) const {
    return counts_[offset(day, region, category)];
  }
  bool occurred(int day, int region, int category) const {
    return count(day, region, category) >= 1;
  }
  void add(int day, int region, int category, std::int32_t count) {
    counts_[offset(day, region, category)] += count;
  }

  /// Day-major window of raw counts: rows = days [day-rows+1 .. day],
  /// columns = categories, for one region.
  Eigen::MatrixXd window(int region, int last_day, int rows) const;
  /// Binary occurrence row for one (day, region).
  Eigen::VectorXd occurrence_row(int day, int region) const;

  std::int64_t total() const;

 private:
  std::size_t offset(int day, int region, int category) const;

  StudyPeriod period_;
  std::vector<std::string> regions_;
  std::vector<std::string> categories_;
  std::vector<std::int32_t> counts_;
};

/// Sums events per (day, region, category). Every event must fall inside
/// the period and reference a known region; unknown regions throw.
CrimeTensor build_crime_tensor(std::span<const CrimeEvent> events,
                               const std::vector<std::string>& regions,
                               const StudyPeriod& period,
                               const std::vector<std::string>& categories);

struct CensusLoadResult {
  SkipReport skipped;
  long tracts_used = 0;
};

/// Tract-level census table -> district profiles for the Ethnics, Income,
/// Job and Commuting kinds. `tract_map` has columns tract,district. Count
/// features are summed over the district's tracts; the Income kind is the
/// special [mean, median, variance] triple where mean/median aggregate as
/// population-weighted means and variance is the population-weighted
/// between-tract variance of the mean income.
CensusLoadResult load_census(std::istream& census, std::istream& tract_map,
                             std::span<RegionProfile> profiles,
                             const FeatureTaxonomy& taxonomy);

struct PoiLoadResult {
  SkipReport skipped;
  long points_assigned = 0;
};

/// POI table with columns category plus either region or lon,lat. Rows with
/// coordinates are assigned by point-in-polygon against region geometry.
/// Unknown categories and points outside every region are reported.
PoiLoadResult load_poi(std::istream& in, std::span<RegionProfile> profiles,
                       const FeatureTaxonomy& taxonomy);

struct GeographyResult {
  Eigen::MatrixXd distance_km;   // symmetric, zero diagonal
  Eigen::MatrixXi adjacency;     // 0/1, zero diagonal
  double threshold_km = 0.0;     // resolved adjacency threshold
};

/// Haversine distance matrix over region centroids plus the adjacency
/// indicator (centroid distance <= threshold). threshold_km <= 0 picks
/// 1.5 x the median nearest-neighbour distance.
GeographyResult compute_geography(std::span<const RegionProfile> profiles,
                                  double threshold_km = 0.0);

/// Stores each region's adjacency indicator row as its Geographic count
/// vector and declares the matching taxonomy features.
void apply_geography(std::span<RegionProfile> profiles, const GeographyResult& geography,
                     FeatureTaxonomy& taxonomy);

/// Everything the model pipeline consumes, serializable as one directory.
struct DatasetBundle {
  FeatureTaxonomy taxonomy;
  std::vector<RegionProfile> profiles;
  CrimeTensor tensor;
  GeographyResult geography;
};

/// Writes taxonomy.json, regions.csv, profiles_<kind>.csv, crime_counts.csv
/// and manifest.json (period, C, region count, source checksums) into `dir`.
/// Output bytes are deterministic for identical inputs.
void save_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle,
                 const std::map<std::string, std::string>& source_checksums);
DatasetBundle load_bundle(const std::filesystem::path& dir);

}  // namespace pathcast
