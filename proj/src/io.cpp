#include "structnet/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace structnet {

namespace fs = std::filesystem;

std::string format_double(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// pts files
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void pts_error(const fs::path& path, int line,
                            const std::string& msg) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::string next_line(std::istream& in, int& line_no) {
  std::string line;
  if (!std::getline(in, line)) return {};
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

Vector load_pts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pts file: " + path.string());

  int line_no = 0;
  std::string line = next_line(in, line_no);
  if (line.rfind("version:", 0) != 0) {
    pts_error(path, line_no, "expected 'version:' header");
  }

  line = next_line(in, line_no);
  if (line.rfind("n_points:", 0) != 0) {
    pts_error(path, line_no, "expected 'n_points:' header");
  }
  long n_points = 0;
  try {
    n_points = std::stol(line.substr(9));
  } catch (const std::exception&) {
    pts_error(path, line_no, "cannot parse point count");
  }
  if (n_points < 1) pts_error(path, line_no, "point count must be >= 1");

  line = next_line(in, line_no);
  if (line != "{") pts_error(path, line_no, "expected '{'");

  Vector out(2 * n_points);
  for (long i = 0; i < n_points; ++i) {
    line = next_line(in, line_no);
    if (line.empty() || line == "}") {
      pts_error(path, line_no,
                "expected " + std::to_string(n_points) + " coordinate lines, " +
                    "got " + std::to_string(i));
    }
    std::istringstream ls(line);
    Scalar x, y;
    if (!(ls >> x >> y)) {
      pts_error(path, line_no, "cannot parse coordinate pair");
    }
    out(2 * i) = x;
    out(2 * i + 1) = y;
  }

  line = next_line(in, line_no);
  if (line != "}") pts_error(path, line_no, "expected '}'");
  return out;
}

void save_pts(const fs::path& path, const Vector& points_px) {
  if (points_px.size() % 2 != 0) {
    throw ConfigError("save_pts: landmark vector length must be even");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pts file: " + path.string());
  const Index n = points_px.size() / 2;
  out << "version: 1\n";
  out << "n_points: " << n << "\n";
  out << "{\n";
  for (Index i = 0; i < n; ++i) {
    out << format_double(points_px(2 * i)) << " "
        << format_double(points_px(2 * i + 1)) << "\n";
  }
  out << "}\n";
  if (!out) throw DataError("failed writing pts file: " + path.string());
}

// ---------------------------------------------------------------------------
// PGM images
// ---------------------------------------------------------------------------

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(in.get()));
      }
      return tok;
    }
  }
  return tok;
}

}  // namespace

Vector load_pgm(const fs::path& path, Index expected_side) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path.string());

  if (pgm_token(in) != "P5") {
    throw DataError(path.string() + ": not a binary PGM (expected P5 magic)");
  }
  long width = 0, height = 0, maxval = 0;
  try {
    width = std::stol(pgm_token(in));
    height = std::stol(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PGM header");
  }
  if (maxval != 255) {
    throw DataError(path.string() + ": only 8-bit PGM (maxval 255) supported");
  }
  if (width != expected_side || height != expected_side) {
    throw DataError(path.string() + ": image is " + std::to_string(width) +
                    "x" + std::to_string(height) + ", expected " +
                    std::to_string(expected_side) + "x" +
                    std::to_string(expected_side));
  }
  in.get();  // single whitespace byte after the header

  std::vector<unsigned char> raw(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw DataError(path.string() + ": truncated pixel data at byte " +
                    std::to_string(in.gcount()));
  }

  Vector out(static_cast<Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out(static_cast<Index>(i)) = static_cast<Scalar>(raw[i]) / 255.0;
  }
  return out;
}

void save_pgm(const fs::path& path, const Vector& pixels, Index img_side) {
  if (pixels.size() != img_side * img_side) {
    throw ConfigError("save_pgm: pixel count does not match img_side");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image: " + path.string());
  out << "P5\n" << img_side << " " << img_side << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(pixels.size()));
  for (Index i = 0; i < pixels.size(); ++i) {
    const Scalar v = std::min(std::max(pixels(i), 0.0), 1.0);
    raw[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("failed writing image: " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset directories
// ---------------------------------------------------------------------------

std::vector<ManifestRow> read_manifest(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.tsv";
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest: " + manifest.string());

  std::vector<ManifestRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (line_no == 1 && fields[0] == "kind") continue;  // header
    if (fields.size() != 3) {
      throw DataError(manifest.string() + ":" + std::to_string(line_no) +
                      ": expected 3 tab-separated fields");
    }
    ManifestRow row;
    row.kind = sample_kind_from_string(fields[0]);
    row.image_path = fields[1];
    row.pts_path = fields[2];
    const bool want_x = row.kind != SampleKind::LabelOnly;
    const bool want_y = row.kind != SampleKind::InputOnly;
    if (want_x == row.image_path.empty() || want_y == row.pts_path.empty()) {
      throw DataError(manifest.string() + ":" + std::to_string(line_no) +
                      ": paths do not match sample kind");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset load_dataset_dir(const fs::path& dir, Index img_side,
                         Index n_points) {
  Dataset ds;
  ds.d_x = img_side * img_side;
  ds.n_points = n_points;

  for (const ManifestRow& row : read_manifest(dir)) {
    Vector x, y;
    if (!row.image_path.empty()) x = load_pgm(dir / row.image_path, img_side);
    if (!row.pts_path.empty()) {
      const Vector px = load_pts(dir / row.pts_path);
      if (px.size() != 2 * n_points) {
        throw DataError(row.pts_path + ": has " + std::to_string(px.size() / 2) +
                        " points, dataset expects " + std::to_string(n_points));
      }
      y = normalize_landmarks(px, img_side);
    }
    switch (row.kind) {
      case SampleKind::Full:
        ds.samples.push_back(Sample::full(std::move(x), std::move(y)));
        break;
      case SampleKind::InputOnly:
        ds.samples.push_back(Sample::input_only(std::move(x)));
        break;
      case SampleKind::LabelOnly:
        ds.samples.push_back(Sample::label_only(std::move(y)));
        break;
    }
  }
  ds.validate();
  return ds;
}

DatasetCounts save_dataset_dir(const fs::path& dir, const Dataset& ds,
                               Index img_side) {
  if (ds.d_x != img_side * img_side) {
    throw ConfigError("save_dataset_dir: d_x does not match img_side");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory: " + dir.string());

  std::ofstream manifest(dir / "manifest.tsv", std::ios::binary);
  if (!manifest) {
    throw DataError("cannot write manifest in: " + dir.string());
  }
  manifest << "kind\timage_path\tpts_path\n";

  DatasetCounts counts;
  char name[64];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    std::string image_path, pts_path;
    if (s.has_x()) {
      std::snprintf(name, sizeof(name), "img_%05zu.pgm", i);
      image_path = name;
      save_pgm(dir / image_path, s.x, img_side);
    }
    if (s.has_y()) {
      std::snprintf(name, sizeof(name), "pts_%05zu.pts", i);
      pts_path = name;
      save_pts(dir / pts_path, denormalize_landmarks(s.y, img_side));
    }
    manifest << to_string(s.kind) << '\t' << image_path << '\t' << pts_path
             << '\n';
    switch (s.kind) {
      case SampleKind::Full: ++counts.full; break;
      case SampleKind::InputOnly: ++counts.input_only; break;
      case SampleKind::LabelOnly: ++counts.label_only; break;
    }
  }
  if (!manifest) throw DataError("failed writing manifest in: " + dir.string());
  return counts;
}

}  // namespace structnet
