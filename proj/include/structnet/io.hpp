#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "structnet/data.hpp"
#include "structnet/numerics.hpp"

namespace structnet {

/// Round-trip formatting for doubles in CSV and pts output.
std::string format_double(Scalar v);

// ---------------------------------------------------------------------------
// Landmark annotation files (.pts).
//
// Grammar (text, LF or CRLF):
//   version: 1
//   n_points: <N>
//   {
//   <x> <y>          (N lines, decimal coordinates in pixels)
//   }
// ---------------------------------------------------------------------------

/// Interleaved pixel coordinates (x1,y1,...,xN,yN). Parse errors carry the
/// offending line number.
Vector load_pts(const std::filesystem::path& path);

void save_pts(const std::filesystem::path& path, const Vector& points_px);

// ---------------------------------------------------------------------------
// Images: binary 8-bit portable graymap (P5, maxval 255).
// ---------------------------------------------------------------------------

/// Row-major pixels scaled to [0,1]. The image must be square with the
/// expected side length.
Vector load_pgm(const std::filesystem::path& path, Index expected_side);

/// Writes [0,1] values quantized to 8 bits.
void save_pgm(const std::filesystem::path& path, const Vector& pixels,
              Index img_side);

// ---------------------------------------------------------------------------
// Dataset directories.
//
// A dataset is a directory with a manifest.tsv whose rows are
//   kind<TAB>image_path<TAB>pts_path
// with empty fields for absent payloads. Paths are relative to the
// directory. Landmarks are stored in pixel coordinates and normalized to
// [-1,1] on load using img_side.
// ---------------------------------------------------------------------------

struct ManifestRow {
  SampleKind kind = SampleKind::Full;
  std::string image_path;  // empty when the sample has no features
  std::string pts_path;    // empty when the sample has no labels
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& dir);

Dataset load_dataset_dir(const std::filesystem::path& dir, Index img_side,
                         Index n_points);

/// Writes images, pts files and the manifest. Returns per-kind counts
/// (full, input_only, label_only).
struct DatasetCounts {
  Index full = 0;
  Index input_only = 0;
  Index label_only = 0;
};

DatasetCounts save_dataset_dir(const std::filesystem::path& dir,
                               const Dataset& ds, Index img_side);

}  // namespace structnet
