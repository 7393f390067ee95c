#include "pathcast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathcast/csv.hpp"
#include "pathcast/geo.hpp"

namespace pathcast {

bool StudyPeriod::contains(const CivilDate& d) const {
  auto sd = std::chrono::sys_days(d);
  return sd >= std::chrono::sys_days(start) && sd <= std::chrono::sys_days(end);
}

int StudyPeriod::index_of(const CivilDate& d) const {
  if (!contains(d)) {
    throw InputError("date " + format_date(d) + " outside study period");
  }
  return days_between(start, d);
}

CrimeLoadResult load_crime_events(std::istream& in,
                                  const std::vector<std::string>& categories,
                                  const StudyPeriod& period,
                                  std::span<const std::string> known_regions) {
  CsvTable table = read_csv(in);
  const int date_col = table.require_column("date");
  const int region_col = table.require_column("region");
  const int category_col = table.require_column("category");
  const int count_col = table.column("count");

  std::map<std::string, int, std::less<>> category_of;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    category_of[categories[i]] = static_cast<int>(i);
  }

  CrimeLoadResult result;
  long row_no = 0;
  for (const auto& row : table.rows) {
    ++row_no;
    auto cat = category_of.find(row[category_col]);
    if (cat == category_of.end()) {
      result.skipped.add(row_no, "unmapped category '" + row[category_col] + "'");
      continue;
    }
    CivilDate date;
    try {
      date = parse_date(row[date_col]);
    } catch (const InputError& e) {
      result.skipped.add(row_no, e.what());
      continue;
    }
    if (!period.contains(date)) {
      result.skipped.add(row_no, "date " + row[date_col] + " outside study period");
      continue;
    }
    if (!known_regions.empty() &&
        std::find(known_regions.begin(), known_regions.end(), row[region_col]) ==
            known_regions.end()) {
      result.skipped.add(row_no, "unknown region '" + row[region_col] + "'");
      continue;
    }
    int count = 1;
    if (count_col >= 0) {
      try {
        count = std::stoi(row[count_col]);
      } catch (const std::exception&) {
        result.skipped.add(row_no, "malformed count '" + row[count_col] + "'");
        continue;
      }
      if (count <= 0) {
        result.skipped.add(row_no, "non-positive count " + row[count_col]);
        continue;
      }
    }
    result.events.push_back({date, row[region_col], cat->second, count});
  }
  return result;
}

CrimeTensor::CrimeTensor(StudyPeriod period, std::vector<std::string> regions,
                         std::vector<std::string> categories)
    : period_(period), regions_(std::move(regions)), categories_(std::move(categories)) {
  counts_.assign(static_cast<std::size_t>(days()) * regions_.size() * categories_.size(), 0);
}

std::size_t CrimeTensor::offset(int day, int region, int category) const {
  if (day < 0 || day >= days() || region < 0 || region >= region_count() || category < 0 ||
      category >= category_count()) {
    throw std::out_of_range("crime tensor index out of range");
  }
  return (static_cast<std::size_t>(day) * regions_.size() + region) * categories_.size() +
         category;
}

Eigen::MatrixXd CrimeTensor::window(int region, int last_day, int rows) const {
  if (rows < 1) throw InputError("window needs at least one day");
  if (last_day - rows + 1 < 0 || last_day >= days()) {
    throw std::out_of_range("window outside the study period");
  }
  Eigen::MatrixXd out(rows, category_count());
  for (int r = 0; r < rows; ++r) {
    const int day = last_day - rows + 1 + r;
    for (int c = 0; c < category_count(); ++c) {
      out(r, c) = static_cast<double>(count(day, region, c));
    }
  }
  return out;
}

Eigen::VectorXd CrimeTensor::occurrence_row(int day, int region) const {
  Eigen::VectorXd out(category_count());
  for (int c = 0; c < category_count(); ++c) {
    out[c] = occurred(day, region, c) ? 1.0 : 0.0;
  }
  return out;
}

std::int64_t CrimeTensor::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

CrimeTensor build_crime_tensor(std::span<const CrimeEvent> events,
                               const std::vector<std::string>& regions,
                               const StudyPeriod& period,
                               const std::vector<std::string>& categories) {
  CrimeTensor tensor(period, regions, categories);
  std::map<std::string, int, std::less<>> region_of;
  for (std::size_t i = 0; i < regions.size(); ++i) region_of[regions[i]] = static_cast<int>(i);

  for (const auto& event : events) {
    auto it = region_of.find(event.region_id);
    if (it == region_of.end()) {
      throw InputError("crime event references region '" + event.region_id +
                       "' not in the region list");
    }
    if (event.category < 0 || event.category >= tensor.category_count()) {
      throw InputError("crime event category index out of range");
    }
    tensor.add(period.index_of(event.date), it->second, event.category, event.count);
  }
  return tensor;
}

namespace {

std::map<std::string, std::string> read_tract_map(std::istream& in) {
  CsvTable table = read_csv(in);
  const int tract_col = table.require_column("tract");
  const int district_col = table.require_column("district");
  std::map<std::string, std::string> mapping;
  for (const auto& row : table.rows) mapping[row[tract_col]] = row[district_col];
  return mapping;
}

}  // namespace

CensusLoadResult load_census(std::istream& census, std::istream& tract_map,
                             std::span<RegionProfile> profiles,
                             const FeatureTaxonomy& taxonomy) {
  const auto mapping = read_tract_map(tract_map);
  CsvTable table = read_csv(census);
  const int tract_col = table.require_column("tract");
  const int pop_col = table.require_column("population");
  const int mean_col = table.require_column("income_mean");
  const int median_col = table.require_column("income_median");

  // Count kinds aggregate by plain summation.
  const std::array<FactorKind, 3> count_kinds = {FactorKind::kEthnics, FactorKind::kJob,
                                                 FactorKind::kCommuting};
  std::array<std::vector<int>, 3> feature_cols;
  for (std::size_t k = 0; k < count_kinds.size(); ++k) {
    for (const auto& name : taxonomy.kind(count_kinds[k]).flat_feature_names()) {
      feature_cols[k].push_back(table.require_column(name));
    }
  }

  const int n = static_cast<int>(profiles.size());
  std::array<Eigen::MatrixXd, 3> sums;
  for (std::size_t k = 0; k < count_kinds.size(); ++k) {
    sums[k] = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(feature_cols[k].size()));
  }
  // Per-tract income observations grouped by district, for the weighted
  // mean/median/variance aggregation.
  struct TractIncome {
    double weight, mean, median;
  };
  std::vector<std::vector<TractIncome>> incomes(n);

  CensusLoadResult result;
  long row_no = 0;
  for (const auto& row : table.rows) {
    ++row_no;
    auto district = mapping.find(row[tract_col]);
    if (district == mapping.end()) {
      result.skipped.add(row_no, "tract '" + row[tract_col] + "' has no district mapping");
      continue;
    }
    const int region = region_index(profiles, district->second);
    if (region < 0) {
      result.skipped.add(row_no,
                         "tract '" + row[tract_col] + "' maps to unknown district '" +
                             district->second + "'");
      continue;
    }
    try {
      for (std::size_t k = 0; k < count_kinds.size(); ++k) {
        for (std::size_t f = 0; f < feature_cols[k].size(); ++f) {
          sums[k](region, static_cast<Eigen::Index>(f)) += std::stod(row[feature_cols[k][f]]);
        }
      }
      incomes[region].push_back(
          {std::stod(row[pop_col]), std::stod(row[mean_col]), std::stod(row[median_col])});
    } catch (const std::exception&) {
      result.skipped.add(row_no, "malformed numeric cell in tract '" + row[tract_col] + "'");
      continue;
    }
    ++result.tracts_used;
  }

  for (int r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < count_kinds.size(); ++k) {
      profiles[r].vector(count_kinds[k]) = sums[k].row(r).transpose();
    }
    double total_weight = 0.0;
    for (const auto& t : incomes[r]) total_weight += t.weight;
    Eigen::VectorXd income = Eigen::VectorXd::Zero(3);
    if (total_weight > 0.0) {
      double mean = 0.0, median = 0.0;
      for (const auto& t : incomes[r]) {
        mean += t.weight * t.mean;
        median += t.weight * t.median;
      }
      mean /= total_weight;
      median /= total_weight;
      double variance = 0.0;
      for (const auto& t : incomes[r]) {
        variance += t.weight * (t.mean - mean) * (t.mean - mean);
      }
      variance /= total_weight;
      income << mean, median, variance;
    }
    profiles[r].vector(FactorKind::kIncome) = income;
  }
  return result;
}

PoiLoadResult load_poi(std::istream& in, std::span<RegionProfile> profiles,
                       const FeatureTaxonomy& taxonomy) {
  CsvTable table = read_csv(in);
  const int category_col = table.require_column("category");
  const int region_col = table.column("region");
  const int lon_col = table.column("lon");
  const int lat_col = table.column("lat");
  if (region_col < 0 && (lon_col < 0 || lat_col < 0)) {
    throw InputError("POI table needs either a region column or lon/lat columns");
  }

  const auto names = taxonomy.kind(FactorKind::kUrbanization).flat_feature_names();
  std::map<std::string, int, std::less<>> feature_of;
  for (std::size_t i = 0; i < names.size(); ++i) feature_of[names[i]] = static_cast<int>(i);

  const int n = static_cast<int>(profiles.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));

  PoiLoadResult result;
  long row_no = 0;
  for (const auto& row : table.rows) {
    ++row_no;
    auto feature = feature_of.find(row[category_col]);
    if (feature == feature_of.end()) {
      result.skipped.add(row_no, "unknown facility category '" + row[category_col] + "'");
      continue;
    }
    int region = -1;
    if (region_col >= 0 && !row[region_col].empty()) {
      region = region_index(profiles, row[region_col]);
      if (region < 0) {
        result.skipped.add(row_no, "unknown region '" + row[region_col] + "'");
        continue;
      }
    } else {
      double lon, lat;
      try {
        lon = std::stod(row[lon_col]);
        lat = std::stod(row[lat_col]);
      } catch (const std::exception&) {
        result.skipped.add(row_no, "malformed coordinates");
        continue;
      }
      for (int r = 0; r < n; ++r) {
        if (profiles[r].geometry && point_in_polygon(*profiles[r].geometry, lon, lat)) {
          region = r;
          break;
        }
      }
      if (region < 0) {
        result.skipped.add(row_no, "point outside every region");
        continue;
      }
    }
    counts(region, feature->second) += 1.0;
    ++result.points_assigned;
  }

  for (int r = 0; r < n; ++r) {
    profiles[r].vector(FactorKind::kUrbanization) = counts.row(r).transpose();
  }
  return result;
}

GeographyResult compute_geography(std::span<const RegionProfile> profiles,
                                  double threshold_km) {
  const int n = static_cast<int>(profiles.size());
  GeographyResult geo;
  geo.distance_km = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = haversine_km(profiles[i].lat, profiles[i].lon, profiles[j].lat,
                                    profiles[j].lon);
      geo.distance_km(i, j) = d;
      geo.distance_km(j, i) = d;
    }
  }

  if (threshold_km > 0.0) {
    geo.threshold_km = threshold_km;
  } else if (n >= 2) {
    // Auto threshold: 1.5 x median nearest-neighbour distance.
    std::vector<double> nearest(n);
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j != i) best = std::min(best, geo.distance_km(i, j));
      }
      nearest[i] = best;
    }
    std::sort(nearest.begin(), nearest.end());
    const double median = (n % 2 == 1) ? nearest[n / 2]
                                       : 0.5 * (nearest[n / 2 - 1] + nearest[n / 2]);
    geo.threshold_km = 1.5 * median;
  }

  geo.adjacency = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && geo.distance_km(i, j) <= geo.threshold_km) geo.adjacency(i, j) = 1;
    }
  }
  return geo;
}

void apply_geography(std::span<RegionProfile> profiles, const GeographyResult& geography,
                     FeatureTaxonomy& taxonomy) {
  const int n = static_cast<int>(profiles.size());
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& p : profiles) ids.push_back(p.region_id);
  taxonomy.set_geographic_regions(ids);
  for (int r = 0; r < n; ++r) {
    profiles[r].vector(FactorKind::kGeographic) = geography.adjacency.row(r).cast<double>();
  }
}

namespace {

constexpr const char* kManifestName = "manifest.json";

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << body;
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle,
                 const std::map<std::string, std::string>& source_checksums) {
  std::filesystem::create_directories(dir);

  bundle.taxonomy.save(dir / "taxonomy.json");

  {
    std::ostringstream out;
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : bundle.profiles) {
      std::vector<std::string> row = {p.region_id, format_double(p.lat), format_double(p.lon),
                                      p.geometry ? to_wkt(*p.geometry) : ""};
      rows.push_back(std::move(row));
    }
    write_csv(out, {"region_id", "lat", "lon", "geometry"}, rows);
    write_text_file(dir / "regions.csv", out.str());
  }

  for (FactorKind kind : kAllFactorKinds) {
    std::ostringstream out;
    save_profiles_csv(out, bundle.profiles, kind, bundle.taxonomy);
    write_text_file(dir / ("profiles_" + std::string(factor_name(kind)) + ".csv"), out.str());
  }

  {
    std::ostringstream out;
    std::vector<std::vector<std::string>> rows;
    const auto& tensor = bundle.tensor;
    for (int t = 0; t < tensor.days(); ++t) {
      for (int r = 0; r < tensor.region_count(); ++r) {
        for (int c = 0; c < tensor.category_count(); ++c) {
          const auto count = tensor.count(t, r, c);
          if (count > 0) {
            rows.push_back({format_date(tensor.period().date_at(t)), tensor.regions()[r],
                            tensor.categories()[c], std::to_string(count)});
          }
        }
      }
    }
    write_csv(out, {"date", "region", "category", "count"}, rows);
    write_text_file(dir / "crime_counts.csv", out.str());
  }

  nlohmann::json manifest;
  manifest["period_start"] = format_date(bundle.tensor.period().start);
  manifest["period_end"] = format_date(bundle.tensor.period().end);
  manifest["days"] = bundle.tensor.days();
  manifest["categories"] = bundle.tensor.categories();
  manifest["category_count"] = bundle.tensor.category_count();
  manifest["region_count"] = static_cast<int>(bundle.profiles.size());
  manifest["geo_threshold_km"] = bundle.geography.threshold_km;
  manifest["source_checksums"] = source_checksums;
  write_text_file(dir / kManifestName, manifest.dump(2) + "\n");
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream manifest_in(dir / kManifestName);
  if (!manifest_in) {
    throw InputError("not a dataset bundle: missing " + (dir / kManifestName).string());
  }
  nlohmann::json manifest;
  manifest_in >> manifest;

  DatasetBundle bundle;
  bundle.taxonomy = FeatureTaxonomy::load(dir / "taxonomy.json");

  CsvTable regions = read_csv_file(dir / "regions.csv");
  const int id_col = regions.require_column("region_id");
  const int lat_col = regions.require_column("lat");
  const int lon_col = regions.require_column("lon");
  const int geom_col = regions.column("geometry");
  for (const auto& row : regions.rows) {
    RegionProfile p;
    p.region_id = row[id_col];
    p.lat = std::stod(row[lat_col]);
    p.lon = std::stod(row[lon_col]);
    if (geom_col >= 0 && !row[geom_col].empty()) p.geometry = parse_wkt_polygon(row[geom_col]);
    bundle.profiles.push_back(std::move(p));
  }

  for (FactorKind kind : kAllFactorKinds) {
    std::ifstream in(dir / ("profiles_" + std::string(factor_name(kind)) + ".csv"));
    if (!in) continue;
    load_profiles_csv(in, bundle.profiles, kind, bundle.taxonomy);
  }

  StudyPeriod period{parse_date(manifest.at("period_start").get<std::string>()),
                     parse_date(manifest.at("period_end").get<std::string>())};
  std::vector<std::string> categories = manifest.at("categories").get<std::vector<std::string>>();
  std::vector<std::string> region_ids;
  region_ids.reserve(bundle.profiles.size());
  for (const auto& p : bundle.profiles) region_ids.push_back(p.region_id);

  std::ifstream crime_in(dir / "crime_counts.csv");
  if (!crime_in) throw InputError("bundle missing crime_counts.csv");
  auto loaded = load_crime_events(crime_in, categories, period, region_ids);
  if (!loaded.skipped.empty()) {
    throw InputError("bundle crime_counts.csv has " + std::to_string(loaded.skipped.size()) +
                     " unreadable rows; bundle is corrupt");
  }
  bundle.tensor = build_crime_tensor(loaded.events, region_ids, period, categories);

  bundle.geography = compute_geography(bundle.profiles,
                                       manifest.value("geo_threshold_km", 0.0));
  return bundle;
}

}  // namespace pathcast
