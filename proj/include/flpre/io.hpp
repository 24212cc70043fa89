#pragma once

#include "flpre/lpre.hpp"
#include "flpre/subsampling.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flpre {

/// Curves read from the long-format CSV (`id,t,x`), in first-appearance order.
struct FunctionalDataset {
  std::vector<std::string> ids;
  std::vector<FunctionalSample> samples;

  Vector responses() const;  // requires every sample to carry a response
  bool has_responses() const;
};

FunctionalDataset read_functional_csv(const std::filesystem::path& path);
/// Reads `id,y` and attaches responses by id. With `required`, every curve
/// must have one.
void read_responses_csv(const std::filesystem::path& path, FunctionalDataset& dataset, bool required = true);

void write_functional_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                          const CurveBatch& curves);
void write_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                         const Vector& responses);
void write_scheme_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const SubsampleScheme& scheme);
void write_beta_csv(const std::filesystem::path& path, const BetaCurve& curve);

/// Persisted model: basis plus the fitted coefficients.
struct ModelRecord {
  BasisConfig basis;
  FitResult fit;
};

inline constexpr int kModelVersion = 1;

std::string model_to_json(const ModelRecord& model);
ModelRecord model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const ModelRecord& model);
ModelRecord load_model(const std::filesystem::path& path);

/// Sequential ids "0", "1", ...
std::vector<std::string> sequential_ids(Eigen::Index n);

}  // namespace flpre
