#include "mvuq/features.hpp"

#include <algorithm>
#include <cmath>

#include "mvuq/error.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/random.hpp"

namespace mvuq::features {

std::string to_string(Provenance p) { return p == Provenance::RandomConv ? "random_conv" : "imported"; }

Provenance provenance_from_string(const std::string& s) {
  if (s == "random_conv") return Provenance::RandomConv;
  if (s == "imported") return Provenance::Imported;
  throw Error(Errc::InvalidArgument, "unknown provenance '" + s + "'");
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values, std::vector<std::string> row_ids, std::string view_name,
                             Provenance provenance, std::vector<ViewBlock> blocks)
    : values_(std::move(values)),
      row_ids_(std::move(row_ids)),
      view_name_(std::move(view_name)),
      provenance_(provenance),
      blocks_(std::move(blocks)) {
  if (values_.cols() == 0) throw Error(Errc::InvalidArgument, "feature matrix needs d > 0");
  if (row_ids_.size() != n()) {
    throw Error(Errc::RowCountMismatch, "manifest lists " + std::to_string(row_ids_.size()) + " rows, matrix has " +
                                            std::to_string(n()));
  }
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      if (!std::isfinite(values_(r, c))) {
        throw NonFiniteValueError(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      }
    }
  }
  if (blocks_.empty()) blocks_.push_back({view_name_, 0, d()});
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    ids.push_back(row_ids_.at(rows[i]));
  }
  return FeatureMatrix(std::move(sub), std::move(ids), view_name_, provenance_, blocks_);
}

FeatureMatrix FeatureMatrix::with_values(Eigen::MatrixXd values) const {
  return FeatureMatrix(std::move(values), row_ids_, view_name_, provenance_, blocks_);
}

RandomConvFeaturizer::RandomConvFeaturizer(const ConvParams& params, const raster::ViewImage* calibration)
    : patch_(params.patch_size), stride_(params.stride == 0 ? params.patch_size : params.stride) {
  if (params.n_filters == 0 || patch_ == 0) throw Error(Errc::InvalidArgument, "n_filters and patch_size must be > 0");
  const auto width = static_cast<Eigen::Index>(3 * patch_ * patch_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(width));
  Rng rng(params.seed);
  filters_.resize(static_cast<Eigen::Index>(params.n_filters), width);
  for (Eigen::Index k = 0; k < filters_.rows(); ++k) {
    for (Eigen::Index j = 0; j < width; ++j) filters_(k, j) = rng.normal() * scale;
  }
  biases_ = Eigen::VectorXd::Zero(filters_.rows());
  if (calibration != nullptr) {
    const Eigen::MatrixXd responses = patch_matrix(*calibration) * filters_.transpose();
    std::vector<double> col(static_cast<std::size_t>(responses.rows()));
    for (Eigen::Index k = 0; k < responses.cols(); ++k) {
      for (Eigen::Index r = 0; r < responses.rows(); ++r) col[static_cast<std::size_t>(r)] = responses(r, k);
      const auto mid = col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2);
      std::nth_element(col.begin(), mid, col.end());
      biases_(k) = *mid;
    }
  }
}

RandomConvFeaturizer::RandomConvFeaturizer(std::size_t patch_size, std::size_t stride, Eigen::MatrixXd filters,
                                           Eigen::VectorXd biases)
    : patch_(patch_size), stride_(stride == 0 ? patch_size : stride), filters_(std::move(filters)),
      biases_(std::move(biases)) {
  if (patch_ == 0 || filters_.rows() == 0) throw Error(Errc::InvalidArgument, "empty featurizer");
  if (filters_.cols() != static_cast<Eigen::Index>(3 * patch_ * patch_) || biases_.size() != filters_.rows()) {
    throw Error(Errc::DimensionMismatch, "filters must be n_filters x 3*patch^2 with one bias per filter");
  }
}

Eigen::MatrixXd RandomConvFeaturizer::patch_matrix(const raster::ViewImage& image) const {
  if (image.height < patch_ || image.width < patch_) {
    throw Error(Errc::ImageTooSmall, std::to_string(image.width) + "x" + std::to_string(image.height) +
                                         " image is smaller than the " + std::to_string(patch_) + "px patch");
  }
  const std::size_t rows = (image.height - patch_) / stride_ + 1;
  const std::size_t cols = (image.width - patch_) / stride_ + 1;
  Eigen::MatrixXd patches(static_cast<Eigen::Index>(rows * cols), static_cast<Eigen::Index>(3 * patch_ * patch_));
  Eigen::Index p = 0;
  for (std::size_t pr = 0; pr < rows; ++pr) {
    for (std::size_t pc = 0; pc < cols; ++pc, ++p) {
      Eigen::Index j = 0;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t i = 0; i < patch_; ++i) {
          for (std::size_t k = 0; k < patch_; ++k) {
            patches(p, j++) = image.at(ch, pr * stride_ + i, pc * stride_ + k);
          }
        }
      }
    }
  }
  return patches;
}

Eigen::VectorXd RandomConvFeaturizer::extract(const raster::ViewImage& image) const {
  const Eigen::MatrixXd responses = patch_matrix(image) * filters_.transpose();
  const auto count = static_cast<double>(responses.rows());
  Eigen::VectorXd out(2 * filters_.rows());
  for (Eigen::Index k = 0; k < filters_.rows(); ++k) {
    double pos = 0.0, neg = 0.0;
    for (Eigen::Index r = 0; r < responses.rows(); ++r) {
      const double x = responses(r, k) - biases_(k);
      if (x > 0.0) pos += x; else neg -= x;
    }
    out(2 * k) = pos / count;
    out(2 * k + 1) = neg / count;
  }
  return out;
}

FeatureMatrix extract_features(std::span<const raster::ViewImage> images, const std::vector<std::string>& row_ids,
                               const RandomConvFeaturizer& featurizer) {
  if (images.size() != row_ids.size()) throw Error(Errc::RowCountMismatch, "one row id per image required");
  if (images.empty()) throw Error(Errc::InvalidArgument, "no images to featurize");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(featurizer.dim()));
  parallel_for(images.size(), [&](std::size_t i) {
    values.row(static_cast<Eigen::Index>(i)) = featurizer.extract(images[i]).transpose();
  });
  return FeatureMatrix(std::move(values), row_ids, images.front().spec.name, Provenance::RandomConv);
}

Eigen::MatrixXd LinearHead::predict(const Eigen::MatrixXd& z) const {
  return (z * weights).rowwise() + bias;
}

double head_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& s, const Eigen::MatrixXd& w,
                 const Eigen::RowVectorXd& b, HeadLoss loss) {
  const Eigen::MatrixXd r = ((z * w).rowwise() + b) - s;
  const double total = loss == HeadLoss::L2 ? r.squaredNorm() : r.cwiseAbs().sum();
  return total / static_cast<double>(z.rows());
}

LinearHead fit_linear_head(const Eigen::MatrixXd& z, const Eigen::MatrixXd& s, const HeadOptions& options) {
  if (z.rows() != s.rows()) throw Error(Errc::RowCountMismatch, "features and auxiliary targets differ in rows");
  if (z.rows() == 0) throw Error(Errc::EmptyTraining, "no rows");
  if (!(options.lr > 0.0)) throw Error(Errc::InvalidArgument, "learning rate must be positive");

  const double n = static_cast<double>(z.rows());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(z.cols(), s.cols());
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(s.cols());

  LinearHead best;
  best.loss = options.loss;
  best.weights = w;
  best.bias = b;
  double loss = head_loss(z, s, w, b, options.loss);
  best.initial_loss = best.final_loss = loss;
  best.loss_history.push_back(loss);

  std::size_t increases = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const Eigen::MatrixXd r = ((z * w).rowwise() + b) - s;
    Eigen::MatrixXd g = options.loss == HeadLoss::L2 ? Eigen::MatrixXd(2.0 * r)
                                                      : Eigen::MatrixXd(r.unaryExpr([](double v) {
                                                          return static_cast<double>((v > 0.0) - (v < 0.0));
                                                        }));
    g /= n;
    w -= options.lr * (z.transpose() * g);
    b -= options.lr * g.colwise().sum();

    const double next = head_loss(z, s, w, b, options.loss);
    best.loss_history.push_back(next);
    if (!std::isfinite(next)) throw Error(Errc::Diverged, "head loss became non-finite at epoch " + std::to_string(epoch + 1));
    increases = next > loss ? increases + 1 : 0;
    if (increases >= 10) throw Error(Errc::Diverged, "head loss increased for 10 consecutive epochs");
    loss = next;
    if (loss < best.final_loss) {
      best.final_loss = loss;
      best.weights = w;
      best.bias = b;
    }
  }
  return best;
}

ColumnStandardizer ColumnStandardizer::fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw Error(Errc::EmptyTraining, "cannot standardize zero rows");
  const Eigen::RowVectorXd means = train.colwise().mean();
  const Eigen::RowVectorXd sds =
      ((train.rowwise() - means).array().square().colwise().sum() / static_cast<double>(train.rows())).sqrt().matrix();
  return ColumnStandardizer(means, sds.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; }));
}

ColumnStandardizer::ColumnStandardizer(Eigen::RowVectorXd means, Eigen::RowVectorXd sds)
    : means_(std::move(means)), sds_(std::move(sds)) {
  if (means_.size() != sds_.size()) throw Error(Errc::DimensionMismatch, "means and sds differ in length");
}

Eigen::MatrixXd ColumnStandardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != means_.size()) throw Error(Errc::DimensionMismatch, "standardizer fitted on a different width");
  return (x.rowwise() - means_).array().rowwise() / sds_.array();
}

FeatureMatrix refine_features(const FeatureMatrix& z, const ColumnStandardizer* standardizer) {
  if (standardizer == nullptr) return z;
  return z.with_values(standardizer->apply(z.values()));
}

FeatureMatrix fuse_views(std::span<const FeatureMatrix> views) {
  if (views.empty()) throw Error(Errc::InvalidArgument, "nothing to fuse");
  const auto& first = views.front();
  Eigen::Index total = 0;
  for (const auto& v : views) {
    if (v.n() != first.n()) {
      throw Error(Errc::RowCountMismatch, "view " + v.view_name() + " has " + std::to_string(v.n()) + " rows, expected " +
                                              std::to_string(first.n()));
    }
    if (v.row_ids() != first.row_ids()) {
      throw Error(Errc::ManifestMismatch, "view " + v.view_name() + " lists locations in a different order");
    }
    total += static_cast<Eigen::Index>(v.d());
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(first.n()), total);
  std::vector<ViewBlock> blocks;
  bool all_imported = true;
  Eigen::Index offset = 0;
  for (const auto& v : views) {
    values.middleCols(offset, static_cast<Eigen::Index>(v.d())) = v.values();
    blocks.push_back({v.view_name(), static_cast<std::size_t>(offset), static_cast<std::size_t>(offset) + v.d()});
    offset += static_cast<Eigen::Index>(v.d());
    all_imported = all_imported && v.provenance() == Provenance::Imported;
  }
  return FeatureMatrix(std::move(values), first.row_ids(), "fused",
                       all_imported ? Provenance::Imported : Provenance::RandomConv, std::move(blocks));
}

}  // namespace mvuq::features
