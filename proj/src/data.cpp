#include "structnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace structnet {

const char* to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::InputOnly:
      return "input_only";
    case SampleKind::LabelOnly:
      return "label_only";
    case SampleKind::Full:
      return "full";
  }
  return "?";
}

SampleKind sample_kind_from_string(const std::string& s) {
  if (s == "input_only") return SampleKind::InputOnly;
  if (s == "label_only") return SampleKind::LabelOnly;
  if (s == "full") return SampleKind::Full;
  throw DataError("unknown sample kind: '" + s + "'");
}

Sample Sample::input_only(Vector x) {
  Sample s;
  s.kind = SampleKind::InputOnly;
  s.x = std::move(x);
  return s;
}

Sample Sample::label_only(Vector y) {
  Sample s;
  s.kind = SampleKind::LabelOnly;
  s.y = std::move(y);
  return s;
}

Sample Sample::full(Vector x, Vector y) {
  Sample s;
  s.kind = SampleKind::Full;
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

void Dataset::validate() const {
  if (d_x <= 0 || n_points <= 0) {
    throw DataError("dataset: d_x and n_points must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const std::string tag = "sample " + std::to_string(i);
    const bool want_x = s.kind != SampleKind::LabelOnly;
    const bool want_y = s.kind != SampleKind::InputOnly;
    if (s.has_x() != want_x || s.has_y() != want_y) {
      throw DataError(tag + ": payload does not match kind " +
                      to_string(s.kind));
    }
    if (s.has_x()) {
      if (s.x.size() != d_x) throw DataError(tag + ": x dimension mismatch");
      if ((s.x.array() < 0.0).any() || (s.x.array() > 1.0).any()) {
        throw DataError(tag + ": x values outside [0,1]");
      }
    }
    if (s.has_y()) {
      if (s.y.size() != d_y()) throw DataError(tag + ": y dimension mismatch");
      if ((s.y.array() < -1.0).any() || (s.y.array() > 1.0).any()) {
        throw DataError(tag + ": y values outside [-1,1]");
      }
    }
  }
}

Partition partition(const Dataset& ds) {
  Partition p;
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    const Sample& s = ds.samples[i];
    if (s.has_x()) p.with_x.push_back(i);
    if (s.has_y()) p.with_y.push_back(i);
    if (s.has_x() && s.has_y()) p.full.push_back(i);
  }
  return p;
}

Matrix gather_x(const Dataset& ds, const std::vector<int>& indices) {
  Matrix out(ds.d_x, static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Sample& s = ds.samples.at(indices[j]);
    if (!s.has_x()) throw DataError("gather_x: sample has no features");
    out.col(static_cast<Index>(j)) = s.x;
  }
  return out;
}

Matrix gather_y(const Dataset& ds, const std::vector<int>& indices) {
  Matrix out(ds.d_y(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Sample& s = ds.samples.at(indices[j]);
    if (!s.has_y()) throw DataError("gather_y: sample has no labels");
    out.col(static_cast<Index>(j)) = s.y;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

Scalar normalize_coord(Scalar p, Index img_side) {
  return 2.0 * p / static_cast<Scalar>(img_side) - 1.0;
}

Scalar denormalize_coord(Scalar y, Index img_side) {
  return (y + 1.0) * static_cast<Scalar>(img_side) / 2.0;
}

Vector normalize_landmarks(const Vector& points_px, Index img_side) {
  Vector out(points_px.size());
  for (Index i = 0; i < points_px.size(); ++i) {
    const Scalar p = points_px(i);
    if (!(p >= 0.0 && p <= static_cast<Scalar>(img_side))) {
      throw DataError("landmark coordinate " + std::to_string(p) +
                      " outside [0, " + std::to_string(img_side) + "]");
    }
    out(i) = normalize_coord(p, img_side);
  }
  return out;
}

Vector denormalize_landmarks(const Vector& y, Index img_side) {
  Vector out(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    out(i) = denormalize_coord(y(i), img_side);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stripping
// ---------------------------------------------------------------------------

namespace {

// First k indices of a seeded shuffle of `pool`.
std::vector<int> pick_random(const std::vector<int>& pool, std::size_t k,
                             Rng& rng) {
  std::vector<int> shuffled = pool;
  rng.shuffle(shuffled);
  shuffled.resize(k);
  return shuffled;
}

std::size_t fraction_count(std::size_t n, Scalar fraction,
                           const char* what) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError(std::string(what) + ": fraction must lie in [0,1]");
  }
  return static_cast<std::size_t>(
      std::llround(fraction * static_cast<Scalar>(n)));
}

}  // namespace

Dataset strip_mixed(const Dataset& ds, Scalar input_only_fraction,
                    Scalar label_only_fraction, Rng& rng) {
  const Partition part = partition(ds);
  const std::size_t n_full = part.full.size();
  const std::size_t k_in =
      fraction_count(n_full, input_only_fraction, "strip to input-only");
  const std::size_t k_out =
      fraction_count(n_full, label_only_fraction, "strip to label-only");
  if (k_in + k_out > n_full) {
    throw ConfigError("strip fractions exceed the full-sample count");
  }

  std::vector<int> chosen = pick_random(part.full, k_in + k_out, rng);
  Dataset out = ds;
  for (std::size_t j = 0; j < chosen.size(); ++j) {
    Sample& s = out.samples[chosen[j]];
    if (j < k_in) {
      s.kind = SampleKind::InputOnly;
      s.y.resize(0);
    } else {
      s.kind = SampleKind::LabelOnly;
      s.x.resize(0);
    }
  }
  return out;
}

Dataset strip_labels(const Dataset& ds, Scalar fraction, Rng& rng) {
  return strip_mixed(ds, fraction, 0.0, rng);
}

Dataset strip_inputs(const Dataset& ds, Scalar fraction, Rng& rng) {
  return strip_mixed(ds, 0.0, fraction, rng);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          Index second_count, Rng& rng) {
  const Index n = static_cast<Index>(ds.samples.size());
  if (second_count < 0 || second_count > n) {
    throw ConfigError("split: requested count exceeds dataset size");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  Dataset first, second;
  first.d_x = second.d_x = ds.d_x;
  first.n_points = second.n_points = ds.n_points;
  for (Index i = 0; i < n; ++i) {
    (i < n - second_count ? first : second)
        .samples.push_back(ds.samples[order[i]]);
  }
  return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

void ShapeTemplate::validate() const {
  if (points.rows() < 2 || points.cols() != 2) {
    throw ConfigError("shape template needs at least 2 points of (x,y)");
  }
  if (left_eye.empty() || right_eye.empty()) {
    throw ConfigError("shape template: eye index groups must be non-empty");
  }
  for (int i : left_eye) {
    if (std::find(right_eye.begin(), right_eye.end(), i) != right_eye.end()) {
      throw ConfigError("shape template: eye index groups must be disjoint");
    }
  }
  for (int i : left_eye) {
    if (i < 0 || i >= points.rows()) {
      throw ConfigError("shape template: left-eye index out of range");
    }
  }
  for (int i : right_eye) {
    if (i < 0 || i >= points.rows()) {
      throw ConfigError("shape template: right-eye index out of range");
    }
  }
}

ShapeTemplate ShapeTemplate::face10() {
  ShapeTemplate t;
  t.points.resize(10, 2);
  // outline
  t.points.row(0) << 0.12, 0.20;
  t.points.row(1) << 0.88, 0.20;
  t.points.row(2) << 0.92, 0.58;
  t.points.row(3) << 0.50, 0.92;
  t.points.row(4) << 0.08, 0.58;
  // eyes
  t.points.row(5) << 0.33, 0.38;
  t.points.row(6) << 0.67, 0.38;
  // mouth
  t.points.row(7) << 0.36, 0.72;
  t.points.row(8) << 0.50, 0.78;
  t.points.row(9) << 0.64, 0.72;
  t.left_eye = {5};
  t.right_eye = {6};
  return t;
}

void SynthParams::validate() const {
  if (n < 1) throw ConfigError("synth: n must be at least 1");
  if (img_side < 4) throw ConfigError("synth: img_side too small");
  if (!(rotation_max >= 0.0)) throw ConfigError("synth: bad rotation range");
  if (!(scale_min > 0.0 && scale_max >= scale_min)) {
    throw ConfigError("synth: bad scale range");
  }
  if (!(translate_max >= 0.0)) throw ConfigError("synth: bad translation");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("synth: bad noise");
  if (!(blob_sigma_frac > 0.0)) throw ConfigError("synth: bad blob sigma");
}

namespace {

// Similarity transform of template points about the template centroid,
// in unit-square coordinates. Row i = (x, y).
Matrix transform_points(const Matrix& pts, Scalar angle, Scalar scale,
                        Scalar tx, Scalar ty) {
  const Scalar cx = 0.5, cy = 0.5;
  const Scalar c = std::cos(angle), s = std::sin(angle);
  Matrix out(pts.rows(), 2);
  for (Index i = 0; i < pts.rows(); ++i) {
    const Scalar dx = pts(i, 0) - cx;
    const Scalar dy = pts(i, 1) - cy;
    out(i, 0) = scale * (c * dx - s * dy) + cx + tx;
    out(i, 1) = scale * (s * dx + c * dy) + cy + ty;
  }
  return out;
}

}  // namespace

Dataset synth_generate(const ShapeTemplate& tmpl, const SynthParams& params,
                       Rng& rng) {
  tmpl.validate();
  params.validate();

  const Index side = params.img_side;
  const Scalar sigma = params.blob_sigma_frac * static_cast<Scalar>(side);
  const Scalar margin = 0.02;  // keep points this far inside the unit square
  constexpr int kMaxRetries = 100;

  Dataset ds;
  ds.d_x = side * side;
  ds.n_points = tmpl.n_points();
  ds.samples.reserve(params.n);

  for (Index i = 0; i < params.n; ++i) {
    Matrix pts;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      const Scalar angle =
          rng.uniform(-params.rotation_max, params.rotation_max);
      const Scalar scale = rng.uniform(params.scale_min, params.scale_max);
      const Scalar tx = rng.uniform(-params.translate_max, params.translate_max);
      const Scalar ty = rng.uniform(-params.translate_max, params.translate_max);
      pts = transform_points(tmpl.points, angle, scale, tx, ty);
      ok = (pts.array() >= margin).all() &&
           (pts.array() <= 1.0 - margin).all();
    }
    if (!ok) {
      throw DataError("synth: could not keep the shape in frame after " +
                      std::to_string(kMaxRetries) + " draws");
    }

    // Render additive Gaussian blobs, then pixel noise, then clamp.
    Matrix canvas = Matrix::Zero(side, side);
    for (Index p = 0; p < pts.rows(); ++p) {
      const Scalar px = pts(p, 0) * static_cast<Scalar>(side);
      const Scalar py = pts(p, 1) * static_cast<Scalar>(side);
      for (Index r = 0; r < side; ++r) {
        const Scalar dy = (static_cast<Scalar>(r) + 0.5) - py;
        for (Index c = 0; c < side; ++c) {
          const Scalar dx = (static_cast<Scalar>(c) + 0.5) - px;
          canvas(r, c) +=
              std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
      }
    }
    if (params.noise > 0.0) {
      for (Index r = 0; r < side; ++r) {
        for (Index c = 0; c < side; ++c) {
          canvas(r, c) += params.noise * (2.0 * rng.uniform() - 1.0);
        }
      }
    }
    canvas = canvas.cwiseMax(0.0).cwiseMin(1.0);

    // Row-major flatten matches the canvas layout.
    Vector x = Eigen::Map<const Vector>(canvas.data(), canvas.size());

    Vector y(2 * pts.rows());
    for (Index p = 0; p < pts.rows(); ++p) {
      y(2 * p) = normalize_coord(pts(p, 0) * static_cast<Scalar>(side), side);
      y(2 * p + 1) =
          normalize_coord(pts(p, 1) * static_cast<Scalar>(side), side);
    }

    ds.samples.push_back(Sample::full(std::move(x), std::move(y)));
  }
  return ds;
}

}  // namespace structnet
