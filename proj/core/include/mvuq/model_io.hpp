#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "mvuq/bayes.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/ridge.hpp"

namespace mvuq::model_io {

/// Conjugate posterior together with the feature standardization it was
/// fitted under (identity when means are 0 and sds are 1).
struct ConjugateModel {
  bayes::GaussianPosterior posterior;
  Eigen::RowVectorXd column_means;
  Eigen::RowVectorXd column_sds;
};

using Model = std::variant<regress::RidgeModel, hetero::HeteroModel, ConjugateModel>;

/// JSON with a "kind" field: ridge, hetero or blr_conjugate. Doubles are
/// written with round-trip precision.
std::string to_json(const Model& model);
Model from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace mvuq::model_io
