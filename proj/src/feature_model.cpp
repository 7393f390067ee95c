#include "pathcast/feature_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathcast/common.hpp"
#include "pathcast/csv.hpp"

namespace pathcast {

namespace {
constexpr std::array<std::string_view, kFactorKindCount> kFactorNames = {
    "Ethnics", "Income", "Job", "Commuting", "Urbanization", "Geographic"};
constexpr std::array<std::string_view, kFactorKindCount> kMetaPathNames = {
    "RER", "RIR", "RJR", "RCR", "RUR", "RGR"};
}  // namespace

std::string_view factor_name(FactorKind kind) { return kFactorNames[kind_index(kind)]; }
std::string_view metapath_name(FactorKind kind) { return kMetaPathNames[kind_index(kind)]; }

std::optional<FactorKind> factor_from_name(std::string_view name) {
  for (int i = 0; i < kFactorKindCount; ++i) {
    if (kFactorNames[i] == name) return static_cast<FactorKind>(i);
  }
  return std::nullopt;
}

std::size_t KindTaxonomy::feature_count() const {
  std::size_t total = 0;
  for (const auto& sub : subcategories) total += sub.features.size();
  return total;
}

std::vector<std::size_t> KindTaxonomy::subcategory_offsets() const {
  std::vector<std::size_t> offsets;
  offsets.reserve(subcategories.size());
  std::size_t at = 0;
  for (const auto& sub : subcategories) {
    offsets.push_back(at);
    at += sub.features.size();
  }
  return offsets;
}

std::vector<std::string> KindTaxonomy::flat_feature_names() const {
  std::vector<std::string> names;
  names.reserve(feature_count());
  for (const auto& sub : subcategories) {
    names.insert(names.end(), sub.features.begin(), sub.features.end());
  }
  return names;
}

void FeatureTaxonomy::validate() const {
  for (FactorKind kind : kAllFactorKinds) {
    const auto& kt = this->kind(kind);
    if (kt.subcategories.empty()) {
      throw InputError(std::string(factor_name(kind)) + ": taxonomy has no subcategories");
    }
    std::set<std::string> seen;
    for (const auto& sub : kt.subcategories) {
      if (sub.features.empty()) {
        throw InputError(std::string(factor_name(kind)) + "/" + sub.name +
                         ": empty subcategory");
      }
      for (const auto& f : sub.features) {
        if (!seen.insert(f).second) {
          throw InputError(std::string(factor_name(kind)) + ": duplicate feature name '" + f +
                           "'");
        }
      }
    }
  }
}

nlohmann::json FeatureTaxonomy::to_json() const {
  nlohmann::json j;
  for (FactorKind kind : kAllFactorKinds) {
    nlohmann::json subs;
    for (const auto& sub : this->kind(kind).subcategories) {
      subs[sub.name] = sub.features;
    }
    j[std::string(factor_name(kind))] = subs;
  }
  return j;
}

FeatureTaxonomy FeatureTaxonomy::from_json(const nlohmann::json& j) {
  FeatureTaxonomy taxonomy;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto kind = factor_from_name(it.key());
    if (!kind) throw InputError("unknown factor kind '" + it.key() + "' in taxonomy");
    KindTaxonomy kt;
    for (auto sub = it.value().begin(); sub != it.value().end(); ++sub) {
      Subcategory s;
      s.name = sub.key();
      for (const auto& f : sub.value()) s.features.push_back(f.get<std::string>());
      kt.subcategories.push_back(std::move(s));
    }
    taxonomy.kind(*kind) = std::move(kt);
  }
  return taxonomy;
}

void FeatureTaxonomy::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

FeatureTaxonomy FeatureTaxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open taxonomy file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed taxonomy file '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

FeatureTaxonomy FeatureTaxonomy::default_taxonomy() {
  FeatureTaxonomy t;
  t.kind(FactorKind::kEthnics) = {{
      {"population_share",
       {"hispanic", "white", "black", "native", "asian", "pacific"}},
  }};
  t.kind(FactorKind::kIncome) = {{
      {"household_income", {"mean", "median", "variance"}},
  }};
  t.kind(FactorKind::kJob) = {{
      {"occupation", {"professional", "service", "office", "construction", "production"}},
      {"class_of_worker", {"private_work", "public_work", "self_employed", "family_work"}},
  }};
  t.kind(FactorKind::kCommuting) = {{
      {"private_vehicle", {"drive", "carpool"}},
      {"transit_active", {"transit", "walk", "other_transp"}},
      {"home", {"work_at_home"}},
  }};
  t.kind(FactorKind::kUrbanization) = {{
      {"civic_services", {"Government", "Public Safety", "Health Services", "Social Services"}},
      {"culture_education", {"Education", "Cultural", "Religious"}},
      {"commerce_transport", {"Commercial", "Transportation", "Miscellaneous"}},
      {"residential_recreation", {"Residential", "Recreational", "Water"}},
  }};
  // Geographic adjacency features depend on the region list; see
  // set_geographic_regions.
  t.kind(FactorKind::kGeographic) = {};
  return t;
}

void FeatureTaxonomy::set_geographic_regions(std::span<const std::string> region_ids) {
  Subcategory adjacency;
  adjacency.name = "adjacency";
  adjacency.features.assign(region_ids.begin(), region_ids.end());
  kind(FactorKind::kGeographic).subcategories = {std::move(adjacency)};
}

std::vector<ProfileViolation> validate_profiles(std::span<const RegionProfile> profiles,
                                                const FeatureTaxonomy& taxonomy) {
  std::vector<ProfileViolation> report;
  for (const auto& profile : profiles) {
    for (FactorKind kind : kAllFactorKinds) {
      const auto expected = taxonomy.kind(kind).feature_count();
      if (expected == 0) continue;  // kind not declared (e.g. Geographic before ingest)
      const auto& vec = profile.vector(kind);
      if (vec.size() == 0) {
        report.push_back({profile.region_id, kind, "missing count vector"});
        continue;
      }
      if (static_cast<std::size_t>(vec.size()) != expected) {
        std::ostringstream msg;
        msg << "vector length " << vec.size() << " != taxonomy feature count " << expected;
        report.push_back({profile.region_id, kind, msg.str()});
        continue;
      }
      for (Eigen::Index i = 0; i < vec.size(); ++i) {
        if (vec[i] < 0.0 || !std::isfinite(vec[i])) {
          std::ostringstream msg;
          msg << "negative or non-finite count at feature " << i << " (" << vec[i] << ")";
          report.push_back({profile.region_id, kind, msg.str()});
          break;
        }
      }
    }
  }
  return report;
}

void save_profiles_csv(std::ostream& out, std::span<const RegionProfile> profiles,
                       FactorKind kind, const FeatureTaxonomy& taxonomy) {
  std::vector<std::string> header = {"region_id"};
  for (auto& name : taxonomy.kind(kind).flat_feature_names()) header.push_back(name);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(profiles.size());
  for (const auto& profile : profiles) {
    std::vector<std::string> row = {profile.region_id};
    const auto& vec = profile.vector(kind);
    for (Eigen::Index i = 0; i < vec.size(); ++i) row.push_back(format_double(vec[i]));
    rows.push_back(std::move(row));
  }
  write_csv(out, header, rows);
}

void load_profiles_csv(std::istream& in, std::span<RegionProfile> profiles, FactorKind kind,
                       const FeatureTaxonomy& taxonomy) {
  CsvTable table = read_csv(in);
  int id_col = table.require_column("region_id");
  const auto names = taxonomy.kind(kind).flat_feature_names();
  std::vector<int> cols;
  cols.reserve(names.size());
  for (const auto& name : names) cols.push_back(table.require_column(name));

  for (const auto& row : table.rows) {
    int region = region_index(profiles, row[id_col]);
    if (region < 0) {
      throw InputError("profile row for unknown region '" + row[id_col] + "'");
    }
    Eigen::VectorXd vec(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      vec[static_cast<Eigen::Index>(i)] = std::stod(row[cols[i]]);
    }
    profiles[region].vector(kind) = std::move(vec);
  }
}

int region_index(std::span<const RegionProfile> profiles, std::string_view region_id) {
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].region_id == region_id) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace pathcast
