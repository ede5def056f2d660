#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sums/sampler.hpp"
#include "sums/simulate.hpp"

namespace sums {

std::string format_double(double x);  // 17 significant digits, round-trip exact
std::string sha256_file(const std::string& path);

// centring/scaling applied to a covariate column at ingestion:
// stored = (raw - center) / scale
struct Transform {
  double center = 0.0;
  double scale = 1.0;
};

struct LoadedData {
  PanelDataset data;
  std::vector<long> subject_ids;  // original ids, ascending
  std::vector<std::string> x_names;
  std::vector<Transform> x_transforms;
  std::vector<std::vector<std::string>> z_names;      // per process
  std::vector<std::vector<Transform>> z_transforms;   // per process
};

// Reads design.json, panel.csv, covariates.csv and covariates_tv.csv from
// `dir`. Continuous covariate columns (more than two distinct values) are
// centred and scaled when `standardize` is set; the transforms are recorded
// so coefficients can be reported on the original scale.
LoadedData load_dataset(const std::string& dir, bool standardize);

struct CliConfig {
  ChainConfig chain;
  bool standardize = true;
};

// flat key=value file; '#' comments; unknown keys are errors
CliConfig parse_config_file(const std::string& path);

// files produced by the simulate command
void write_dataset(const std::string& dir, const SimResult& sim);

// sample records: coefficients are reported on the original covariate scale
nlohmann::json record_to_json(const SampleRecord& rec,
                              const std::vector<Transform>& x_transforms,
                              const std::vector<std::vector<Transform>>& z_transforms);
SampleRecord record_from_json(const nlohmann::json& j);

PosteriorChain read_samples_file(const std::string& path);

nlohmann::json make_manifest(const CliConfig& config, std::uint64_t seed, int n_chains,
                             const std::string& data_dir, const LoadedData& loaded);
void write_json_atomic(const nlohmann::json& j, const std::string& path);

std::string version_string();

}  // namespace sums
