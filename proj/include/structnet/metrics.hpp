#pragma once

#include <functional>
#include <string>
#include <vector>

#include "structnet/data.hpp"
#include "structnet/numerics.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// Shapes and the inter-ocular distance.
// ---------------------------------------------------------------------------

/// N landmark points in pixel coordinates, row i = (x, y).
using Shape = Matrix;

/// Landmark index groups standing in for the two eye centers. The pupil is
/// approximated by the centroid of each group.
struct EyeSpec {
  std::vector<int> left;
  std::vector<int> right;

  void validate(Index n_points) const;

  /// Zero-based groups 36-41 and 42-47 of the 68-point annotation scheme.
  static EyeSpec landmarks68();
};

/// Interleaved (x1,y1,...) vector in pixels -> N x 2 shape.
Shape shape_from_vector(const Vector& points_px);

/// Distance between the left-eye and right-eye group centroids of the
/// ground truth. Zero distance is a degenerate-shape error.
Scalar interocular(const Shape& ground_truth, const EyeSpec& eyes);

/// Mean per-point Euclidean distance between prediction and ground truth,
/// normalized by the inter-ocular distance:
///   (1 / (N * D)) * sum_i ||pred_i - gt_i||.
Scalar nrmse(const Shape& predicted, const Shape& ground_truth,
             const EyeSpec& eyes);

// ---------------------------------------------------------------------------
// Error distribution summaries.
// ---------------------------------------------------------------------------

/// Fraction of errors less than or equal to x.
Scalar cdf(const std::vector<Scalar>& errors, Scalar x);

/// Grid step and range of the AUC summary: CDF sampled at
/// x in {0, 0.001, ..., 0.5}.
inline constexpr Scalar kAucStep = 1e-3;
inline constexpr int kAucPoints = 501;

/// Mean of the CDF over the grid, as a percentage in [0, 100].
Scalar auc(const std::vector<Scalar>& errors);

// ---------------------------------------------------------------------------
// Whole-test-set evaluation.
// ---------------------------------------------------------------------------

struct EvalReport {
  std::vector<Scalar> per_sample_nrmse;            // one per usable test image
  std::vector<std::pair<Scalar, Scalar>> cdf_curve;  // (x, CDF_x fraction)
  Scalar auc_percent = 0.0;
  Scalar cdf_at_0_1_percent = 0.0;
  Index skipped_degenerate = 0;  // excluded ground-truth shapes

  std::string per_sample_csv() const;  // sample_id,nrmse
  std::string cdf_csv() const;         // x,cdf
  std::string summary() const;
};

/// Maps a normalized input vector to a normalized landmark prediction.
using Predictor = std::function<Vector(const Vector& x)>;

/// Constant predictor returning the coordinate-wise mean of every available
/// label in the training set (all of L).
Predictor mean_shape(const Dataset& train);

/// Runs the predictor over every fully labeled test sample, converts to
/// pixel coordinates and summarizes the NRMSE distribution. Samples with a
/// degenerate ground truth are counted and excluded.
EvalReport evaluate(const Predictor& predict, const Dataset& test,
                    const EyeSpec& eyes, Index img_side);

}  // namespace structnet
