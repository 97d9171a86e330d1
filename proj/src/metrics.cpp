#include "structnet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "structnet/io.hpp"

namespace structnet {

void EyeSpec::validate(Index n_points) const {
  if (left.empty() || right.empty()) {
    throw ConfigError("eye spec: index groups must be non-empty");
  }
  for (int i : left) {
    if (i < 0 || i >= n_points) {
      throw ConfigError("eye spec: left index out of range");
    }
    if (std::find(right.begin(), right.end(), i) != right.end()) {
      throw ConfigError("eye spec: eye groups must be disjoint");
    }
  }
  for (int i : right) {
    if (i < 0 || i >= n_points) {
      throw ConfigError("eye spec: right index out of range");
    }
  }
}

EyeSpec EyeSpec::landmarks68() {
  EyeSpec e;
  for (int i = 36; i <= 41; ++i) e.left.push_back(i);
  for (int i = 42; i <= 47; ++i) e.right.push_back(i);
  return e;
}

Shape shape_from_vector(const Vector& points_px) {
  if (points_px.size() % 2 != 0) {
    throw ConfigError("shape: landmark vector length must be even");
  }
  const Index n = points_px.size() / 2;
  Shape s(n, 2);
  for (Index i = 0; i < n; ++i) {
    s(i, 0) = points_px(2 * i);
    s(i, 1) = points_px(2 * i + 1);
  }
  return s;
}

namespace {

Eigen::RowVector2d group_centroid(const Shape& shape,
                                  const std::vector<int>& group) {
  Eigen::RowVector2d c(0.0, 0.0);
  for (int i : group) c += shape.row(i);
  return c / static_cast<Scalar>(group.size());
}

}  // namespace

Scalar interocular(const Shape& ground_truth, const EyeSpec& eyes) {
  eyes.validate(ground_truth.rows());
  const Eigen::RowVector2d left = group_centroid(ground_truth, eyes.left);
  const Eigen::RowVector2d right = group_centroid(ground_truth, eyes.right);
  const Scalar d = (left - right).norm();
  if (!(d > 0.0)) {
    throw DataError("degenerate shape: coincident eye centers");
  }
  return d;
}

Scalar nrmse(const Shape& predicted, const Shape& ground_truth,
             const EyeSpec& eyes) {
  if (predicted.rows() != ground_truth.rows()) {
    throw ConfigError("nrmse: shapes have different point counts");
  }
  const Scalar d = interocular(ground_truth, eyes);
  const Index n = ground_truth.rows();
  Scalar sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    sum += (predicted.row(i) - ground_truth.row(i)).norm();
  }
  return sum / (static_cast<Scalar>(n) * d);
}

Scalar cdf(const std::vector<Scalar>& errors, Scalar x) {
  if (errors.empty()) throw ConfigError("cdf: empty error list");
  std::size_t count = 0;
  for (Scalar e : errors) {
    if (e <= x) ++count;
  }
  return static_cast<Scalar>(count) / static_cast<Scalar>(errors.size());
}

Scalar auc(const std::vector<Scalar>& errors) {
  if (errors.empty()) throw ConfigError("auc: empty error list");
  Scalar sum = 0.0;
  for (int i = 0; i < kAucPoints; ++i) {
    sum += cdf(errors, static_cast<Scalar>(i) * kAucStep);
  }
  return 100.0 * sum / static_cast<Scalar>(kAucPoints);
}

Predictor mean_shape(const Dataset& train) {
  const Partition part = partition(train);
  if (part.with_y.empty()) {
    throw DataError("mean shape: training set has no labels");
  }
  Vector mean = Vector::Zero(train.d_y());
  for (int i : part.with_y) mean += train.samples[i].y;
  mean /= static_cast<Scalar>(part.with_y.size());
  return [mean](const Vector&) { return mean; };
}

EvalReport evaluate(const Predictor& predict, const Dataset& test,
                    const EyeSpec& eyes, Index img_side) {
  const Partition part = partition(test);
  if (part.full.empty()) {
    throw DataError("evaluate: test set has no fully labeled samples");
  }

  EvalReport report;
  report.per_sample_nrmse.reserve(part.full.size());
  for (int i : part.full) {
    const Sample& s = test.samples[i];
    const Shape gt =
        shape_from_vector(denormalize_landmarks(s.y, img_side));
    try {
      const Scalar d_check = interocular(gt, eyes);
      (void)d_check;
    } catch (const DataError&) {
      ++report.skipped_degenerate;
      continue;
    }
    const Vector pred_y = predict(s.x);
    const Shape pred =
        shape_from_vector(denormalize_landmarks(pred_y, img_side));
    report.per_sample_nrmse.push_back(nrmse(pred, gt, eyes));
  }

  if (report.per_sample_nrmse.empty()) {
    throw DataError("evaluate: every test shape was degenerate");
  }

  report.cdf_curve.reserve(kAucPoints);
  for (int i = 0; i < kAucPoints; ++i) {
    const Scalar x = static_cast<Scalar>(i) * kAucStep;
    report.cdf_curve.emplace_back(x, cdf(report.per_sample_nrmse, x));
  }
  report.auc_percent = auc(report.per_sample_nrmse);
  report.cdf_at_0_1_percent = 100.0 * cdf(report.per_sample_nrmse, 0.1);
  return report;
}

std::string EvalReport::per_sample_csv() const {
  std::string out = "sample_id,nrmse\n";
  for (std::size_t i = 0; i < per_sample_nrmse.size(); ++i) {
    out += std::to_string(i) + "," + format_double(per_sample_nrmse[i]) + "\n";
  }
  return out;
}

std::string EvalReport::cdf_csv() const {
  std::string out = "x,cdf\n";
  for (const auto& [x, v] : cdf_curve) {
    out += format_double(x) + "," + format_double(v) + "\n";
  }
  return out;
}

std::string EvalReport::summary() const {
  std::string out = "auc=" + format_double(auc_percent) +
                    " cdf_0.1=" + format_double(cdf_at_0_1_percent);
  if (skipped_degenerate > 0) {
    out += " skipped_degenerate=" + std::to_string(skipped_degenerate);
  }
  return out;
}

}  // namespace structnet
