#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvuq/raster.hpp"

namespace mvuq::features {

enum class Provenance { RandomConv, Imported };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Column range [begin, end) that one view occupies inside a fused matrix.
struct ViewBlock {
  std::string view;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Rows are locations (in manifest order), columns are features.
class FeatureMatrix {
 public:
  FeatureMatrix(Eigen::MatrixXd values, std::vector<std::string> row_ids, std::string view_name,
                Provenance provenance, std::vector<ViewBlock> blocks = {});

  std::size_t n() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::string& view_name() const { return view_name_; }
  Provenance provenance() const { return provenance_; }
  const std::vector<ViewBlock>& blocks() const { return blocks_; }

  /// Row subset in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix with_values(Eigen::MatrixXd values) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> row_ids_;
  std::string view_name_;
  Provenance provenance_;
  std::vector<ViewBlock> blocks_;
};

struct ConvParams {
  std::size_t n_filters = 512;
  std::size_t patch_size = 3;
  std::size_t stride = 0;  // 0 means stride == patch_size (non-overlapping)
  std::uint64_t seed = 0;
};

/// Random convolutional featurizer: unit-Gaussian filters scaled by
/// 1/sqrt(3 * patch^2); each filter yields the average positive and negative
/// rectified response over all valid patches, so d = 2 * n_filters.
class RandomConvFeaturizer {
 public:
  /// Filters are a pure function of params.seed. With a calibration image the
  /// bias of each filter is the median response over that image's patches,
  /// otherwise zero.
  explicit RandomConvFeaturizer(const ConvParams& params, const raster::ViewImage* calibration = nullptr);

  /// Explicit weights: filters is n_filters x (3 * patch^2), channel-major.
  RandomConvFeaturizer(std::size_t patch_size, std::size_t stride, Eigen::MatrixXd filters,
                       Eigen::VectorXd biases);

  std::size_t n_filters() const { return static_cast<std::size_t>(filters_.rows()); }
  std::size_t patch_size() const { return patch_; }
  std::size_t stride() const { return stride_; }
  std::size_t dim() const { return 2 * n_filters(); }
  const Eigen::MatrixXd& filters() const { return filters_; }
  const Eigen::VectorXd& biases() const { return biases_; }

  /// Feature row laid out as (pos_0, neg_0, pos_1, neg_1, ...).
  Eigen::VectorXd extract(const raster::ViewImage& image) const;

 private:
  Eigen::MatrixXd patch_matrix(const raster::ViewImage& image) const;

  std::size_t patch_;
  std::size_t stride_;
  Eigen::MatrixXd filters_;
  Eigen::VectorXd biases_;
};

/// Featurizes one view across locations (parallel over rows).
FeatureMatrix extract_features(std::span<const raster::ViewImage> images, const std::vector<std::string>& row_ids,
                               const RandomConvFeaturizer& featurizer);

enum class HeadLoss { L1, L2 };

struct HeadOptions {
  HeadLoss loss = HeadLoss::L2;
  double lr = 1e-2;
  std::size_t epochs = 500;
};

/// Linear map from features to auxiliary targets, s_hat = z W + b.
struct LinearHead {
  Eigen::MatrixXd weights;  // d x m
  Eigen::RowVectorXd bias;  // m
  HeadLoss loss = HeadLoss::L2;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;

  Eigen::MatrixXd predict(const Eigen::MatrixXd& z) const;
};

/// Mean over rows of the per-row L1 norm or squared L2 norm of the residual.
double head_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& s, const Eigen::MatrixXd& w,
                 const Eigen::RowVectorXd& b, HeadLoss loss);

/// Full-batch gradient descent from W = 0, b = 0. Returns the parameters with
/// the lowest loss seen; throws Diverged on a non-finite loss or ten
/// consecutive increases.
LinearHead fit_linear_head(const Eigen::MatrixXd& z, const Eigen::MatrixXd& s, const HeadOptions& options = {});

/// Per-column standardization fitted on training rows; zero-variance columns
/// are only centred.
class ColumnStandardizer {
 public:
  static ColumnStandardizer fit(const Eigen::MatrixXd& train);
  ColumnStandardizer(Eigen::RowVectorXd means, Eigen::RowVectorXd sds);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  const Eigen::RowVectorXd& means() const { return means_; }
  const Eigen::RowVectorXd& sds() const { return sds_; }

 private:
  Eigen::RowVectorXd means_;
  Eigen::RowVectorXd sds_;
};

/// Refined representation handed to the regressors: standardized with the
/// given training statistics, or unchanged when standardizer is null.
FeatureMatrix refine_features(const FeatureMatrix& z, const ColumnStandardizer* standardizer);

/// Column-wise concatenation in argument order.
FeatureMatrix fuse_views(std::span<const FeatureMatrix> views);

}  // namespace mvuq::features
