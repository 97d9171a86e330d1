#pragma once

#include <string>
#include <vector>

#include "structnet/numerics.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// Samples and datasets.
//
// A sample is input-only (x,_), label-only (_,y) or fully labeled (x,y).
// x is a flattened grayscale image with values in [0,1]; y is an interleaved
// landmark vector (x1,y1,...,xN,yN) with coordinates normalized to [-1,1].
// ---------------------------------------------------------------------------

enum class SampleKind { InputOnly, LabelOnly, Full };

const char* to_string(SampleKind kind);
SampleKind sample_kind_from_string(const std::string& s);

struct Sample {
  SampleKind kind = SampleKind::Full;
  Vector x;  // empty when absent
  Vector y;  // empty when absent

  bool has_x() const { return x.size() > 0; }
  bool has_y() const { return y.size() > 0; }

  static Sample input_only(Vector x);
  static Sample label_only(Vector y);
  static Sample full(Vector x, Vector y);
};

struct Dataset {
  std::vector<Sample> samples;
  Index d_x = 0;      // input dimension (img_side * img_side)
  Index n_points = 0; // landmarks per shape; y dimension is 2 * n_points

  Index d_y() const { return 2 * n_points; }

  /// Checks kind/payload consistency, dimensions and value ranges.
  void validate() const;
};

/// Index views of the three canonical subsets: F (has features), L (has
/// labels), S (has both). S is a subset of F and of L by construction.
struct Partition {
  std::vector<int> with_x;  // F
  std::vector<int> with_y;  // L
  std::vector<int> full;    // S
};

Partition partition(const Dataset& ds);

/// Column-per-sample batch matrices for the given sample indices.
Matrix gather_x(const Dataset& ds, const std::vector<int>& indices);
Matrix gather_y(const Dataset& ds, const std::vector<int>& indices);

// ---------------------------------------------------------------------------
// Landmark coordinate normalization.
//
// Pixel coordinates in [0, img_side] map affinely onto [-1, 1].
// ---------------------------------------------------------------------------

Scalar normalize_coord(Scalar p, Index img_side);
Scalar denormalize_coord(Scalar y, Index img_side);

/// Elementwise normalization of an interleaved pixel-coordinate vector.
/// Coordinates outside [0, img_side] are an error.
Vector normalize_landmarks(const Vector& points_px, Index img_side);
Vector denormalize_landmarks(const Vector& y, Index img_side);

// ---------------------------------------------------------------------------
// Converting fully labeled samples into partial ones.
// ---------------------------------------------------------------------------

/// Converts a random fraction of the fully labeled samples to input-only
/// (drops y). Surviving payloads are untouched.
Dataset strip_labels(const Dataset& ds, Scalar fraction, Rng& rng);

/// Converts a random fraction of the fully labeled samples to label-only.
Dataset strip_inputs(const Dataset& ds, Scalar fraction, Rng& rng);

/// Applies both conversions to disjoint subsets chosen from the original
/// full-sample population, so the fractions both refer to the same count.
Dataset strip_mixed(const Dataset& ds, Scalar input_only_fraction,
                    Scalar label_only_fraction, Rng& rng);

/// Seeded random split into (first, second) with `second_count` samples in
/// the second part. Used for carving a validation set out of a train set.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          Index second_count, Rng& rng);

// ---------------------------------------------------------------------------
// Synthetic structured-landmark generator.
//
// A rigid point template is mapped through a random similarity transform,
// rendered as Gaussian intensity blobs on a small grayscale canvas, and the
// exact transformed coordinates become the label. Rigidity preserves the
// structural dependencies between the points.
// ---------------------------------------------------------------------------

struct ShapeTemplate {
  // N points in the unit square, row i = (x, y).
  Matrix points;
  std::vector<int> left_eye;
  std::vector<int> right_eye;

  Index n_points() const { return points.rows(); }
  void validate() const;

  /// 10-point face-like template: 5 outline points, 2 eyes, 3 mouth points.
  static ShapeTemplate face10();
};

struct SynthParams {
  Index n = 500;
  Index img_side = 20;
  Scalar rotation_max = 0.3;     // radians, uniform in +-rotation_max
  Scalar scale_min = 0.85;
  Scalar scale_max = 1.15;
  Scalar translate_max = 0.08;   // unit-square units, per axis
  Scalar noise = 0.05;           // additive uniform pixel noise amplitude
  Scalar blob_sigma_frac = 0.05; // blob sigma = img_side * frac
  void validate() const;
};

/// Generates `params.n` fully labeled samples. Deterministic given the rng
/// seed. Throws DataError if a transform cannot keep the shape in frame
/// after a bounded number of retries.
Dataset synth_generate(const ShapeTemplate& tmpl, const SynthParams& params,
                       Rng& rng);

}  // namespace structnet
