#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "structnet/data.hpp"
#include "structnet/io.hpp"

using namespace structnet;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset(int n_full, int n_input_only, int n_label_only) {
  Dataset ds;
  ds.d_x = 4;
  ds.n_points = 2;
  Rng rng(5);
  auto rand_x = [&]() {
    Vector x(4);
    for (Index i = 0; i < 4; ++i) x(i) = rng.uniform();
    return x;
  };
  auto rand_y = [&]() {
    Vector y(4);
    for (Index i = 0; i < 4; ++i) y(i) = rng.uniform(-1.0, 1.0);
    return y;
  };
  for (int i = 0; i < n_full; ++i) {
    ds.samples.push_back(Sample::full(rand_x(), rand_y()));
  }
  for (int i = 0; i < n_input_only; ++i) {
    ds.samples.push_back(Sample::input_only(rand_x()));
  }
  for (int i = 0; i < n_label_only; ++i) {
    ds.samples.push_back(Sample::label_only(rand_y()));
  }
  ds.validate();
  return ds;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

TEST_CASE("partition counts and subset relations") {
  const Dataset ds = tiny_dataset(5, 2, 3);
  const Partition p = partition(ds);
  CHECK(p.with_x.size() == 7);
  CHECK(p.with_y.size() == 8);
  CHECK(p.full.size() == 5);

  // S is contained in F and in L.
  for (int i : p.full) {
    CHECK(std::find(p.with_x.begin(), p.with_x.end(), i) != p.with_x.end());
    CHECK(std::find(p.with_y.begin(), p.with_y.end(), i) != p.with_y.end());
  }

  Dataset all_full = tiny_dataset(4, 0, 0);
  const Partition q = partition(all_full);
  CHECK(q.with_x == q.full);
  CHECK(q.with_y == q.full);

  Dataset empty;
  empty.d_x = 4;
  empty.n_points = 2;
  const Partition e = partition(empty);
  CHECK(e.with_x.empty());
  CHECK(e.with_y.empty());
  CHECK(e.full.empty());
}

TEST_CASE("dataset validation rejects inconsistent samples") {
  Dataset ds = tiny_dataset(1, 0, 0);
  ds.samples[0].x(0) = 1.5;  // outside [0,1]
  CHECK_THROWS_AS(ds.validate(), DataError);

  Dataset ds2 = tiny_dataset(1, 0, 0);
  ds2.samples[0].y(0) = -2.0;  // outside [-1,1]
  CHECK_THROWS_AS(ds2.validate(), DataError);

  Dataset ds3 = tiny_dataset(1, 0, 0);
  ds3.samples[0].kind = SampleKind::InputOnly;  // kind mismatch: y present
  CHECK_THROWS_AS(ds3.validate(), DataError);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

TEST_CASE("landmark normalization endpoints and round trip") {
  CHECK(normalize_coord(10.0, 20) == 0.0);
  CHECK(normalize_coord(0.0, 20) == -1.0);
  CHECK(normalize_coord(20.0, 20) == 1.0);
  CHECK(denormalize_coord(0.0, 20) == 10.0);

  Rng rng(9);
  Vector px(10);
  for (Index i = 0; i < px.size(); ++i) px(i) = rng.uniform(0.0, 20.0);
  const Vector y = normalize_landmarks(px, 20);
  const Vector back = denormalize_landmarks(y, 20);
  CHECK((back - px).cwiseAbs().maxCoeff() < 1e-12);

  Vector bad(2);
  bad << -0.5, 3.0;
  CHECK_THROWS_AS(normalize_landmarks(bad, 20), DataError);
}

// ---------------------------------------------------------------------------
// Stripping
// ---------------------------------------------------------------------------

TEST_CASE("strip_labels converts the exact count") {
  const Dataset ds = tiny_dataset(100, 0, 0);
  Rng rng(3);
  const Dataset half = strip_labels(ds, 0.5, rng);
  const Partition p = partition(half);
  CHECK(p.full.size() == 50);
  CHECK(p.with_x.size() == 100);
  CHECK(p.with_y.size() == 50);

  Rng rng2(4);
  const Dataset none = strip_labels(ds, 0.0, rng2);
  CHECK(partition(none).full.size() == 100);

  Rng rng3(5);
  const Dataset all = strip_labels(ds, 1.0, rng3);
  CHECK(partition(all).full.empty());
  CHECK(partition(all).with_x.size() == 100);
}

TEST_CASE("strip_inputs converts toward label-only") {
  const Dataset ds = tiny_dataset(10, 0, 0);
  Rng rng(6);
  const Dataset stripped = strip_inputs(ds, 0.3, rng);
  const Partition p = partition(stripped);
  CHECK(p.full.size() == 7);
  CHECK(p.with_y.size() == 10);
  CHECK(p.with_x.size() == 7);
}

TEST_CASE("strip_mixed uses disjoint subsets of the original full pool") {
  const Dataset ds = tiny_dataset(100, 0, 0);
  Rng rng(7);
  const Dataset mixed = strip_mixed(ds, 0.3, 0.3, rng);
  const Partition p = partition(mixed);
  CHECK(p.full.size() == 40);
  CHECK(p.with_x.size() == 70);
  CHECK(p.with_y.size() == 70);

  Rng rng2(8);
  CHECK_THROWS_AS(strip_mixed(ds, 0.7, 0.7, rng2), ConfigError);
  Rng rng3(9);
  CHECK_THROWS_AS(strip_mixed(ds, 1.2, 0.0, rng3), ConfigError);
}

TEST_CASE("strip preserves surviving payloads bit-exactly") {
  const Dataset ds = tiny_dataset(40, 0, 0);
  Rng rng(11);
  const Dataset stripped = strip_labels(ds, 0.25, rng);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(stripped.samples[i].x == ds.samples[i].x);
    if (stripped.samples[i].has_y()) {
      CHECK(stripped.samples[i].y == ds.samples[i].y);
    }
  }
  // S subset invariant still holds.
  stripped.validate();
}

TEST_CASE("split_dataset partitions without loss") {
  const Dataset ds = tiny_dataset(20, 0, 0);
  Rng rng(13);
  const auto [a, b] = split_dataset(ds, 6, rng);
  CHECK(a.samples.size() == 14);
  CHECK(b.samples.size() == 6);
  Rng rng2(13);
  CHECK_THROWS_AS(split_dataset(ds, 21, rng2), ConfigError);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

TEST_CASE("synth_generate is deterministic") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 10;
  p.img_side = 16;
  Rng a(21), b(21);
  const Dataset da = synth_generate(tmpl, p, a);
  const Dataset db = synth_generate(tmpl, p, b);
  for (std::size_t i = 0; i < da.samples.size(); ++i) {
    CHECK(da.samples[i].x == db.samples[i].x);
    CHECK(da.samples[i].y == db.samples[i].y);
  }
}

TEST_CASE("degenerate transform ranges reproduce the template") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 3;
  p.img_side = 16;
  p.rotation_max = 0.0;
  p.scale_min = 1.0;
  p.scale_max = 1.0;
  p.translate_max = 0.0;
  p.noise = 0.0;
  Rng rng(22);
  const Dataset ds = synth_generate(tmpl, p, rng);
  for (const Sample& s : ds.samples) {
    for (Index i = 0; i < tmpl.n_points(); ++i) {
      const Scalar expected_x =
          normalize_coord(tmpl.points(i, 0) * 16.0, 16);
      const Scalar expected_y =
          normalize_coord(tmpl.points(i, 1) * 16.0, 16);
      CHECK(s.y(2 * i) == doctest::Approx(expected_x).epsilon(1e-12));
      CHECK(s.y(2 * i + 1) == doctest::Approx(expected_y).epsilon(1e-12));
    }
  }
}

TEST_CASE("synth labels preserve template geometry up to scale") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 50;
  p.img_side = 20;
  Rng rng(23);
  const Dataset ds = synth_generate(tmpl, p, rng);

  for (const Sample& s : ds.samples) {
    const Vector px = denormalize_landmarks(s.y, p.img_side);
    // Rigid similarity: every pairwise distance is template distance x
    // (scale * img_side); estimate the scale from one pair and check the
    // rest.
    auto dist = [&](int i, int j) {
      const Scalar dx = px(2 * i) - px(2 * j);
      const Scalar dy = px(2 * i + 1) - px(2 * j + 1);
      return std::sqrt(dx * dx + dy * dy);
    };
    auto tmpl_dist = [&](int i, int j) {
      return (tmpl.points.row(i) - tmpl.points.row(j)).norm();
    };
    const Scalar k = dist(0, 3) / tmpl_dist(0, 3);
    for (int i = 0; i < 10; ++i) {
      for (int j = i + 1; j < 10; ++j) {
        CHECK(dist(i, j) ==
              doctest::Approx(k * tmpl_dist(i, j)).epsilon(1e-9));
      }
    }
  }

  // Labels vary across samples.
  Scalar var = 0.0;
  Vector mean = Vector::Zero(ds.d_y());
  for (const Sample& s : ds.samples) mean += s.y;
  mean /= static_cast<Scalar>(ds.samples.size());
  for (const Sample& s : ds.samples) var += (s.y - mean).squaredNorm();
  CHECK(var > 0.0);
}

TEST_CASE("synth_generate validates parameters") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 0;
  Rng rng(1);
  CHECK_THROWS_AS(synth_generate(tmpl, p, rng), ConfigError);

  SynthParams q;
  q.translate_max = 5.0;  // shape can never stay in frame
  q.n = 1;
  Rng rng2(2);
  CHECK_THROWS_AS(synth_generate(tmpl, q, rng2), DataError);
}

TEST_CASE("shape template invariants") {
  ShapeTemplate t = ShapeTemplate::face10();
  t.validate();
  t.right_eye = {5};  // same as left eye
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// pts files
// ---------------------------------------------------------------------------

TEST_CASE("pts round trip") {
  TempDir dir("structnet_test_pts");
  Vector px(6);
  px << 1.5, 2.25, 19.0, 3.0, 0.125, 18.75;
  save_pts(dir.path / "a.pts", px);
  const Vector back = load_pts(dir.path / "a.pts");
  CHECK(back == px);
}

TEST_CASE("pts parses the documented 68-point header") {
  TempDir dir("structnet_test_pts68");
  std::ofstream out(dir.path / "face.pts");
  out << "version: 1\nn_points: 68\n{\n";
  for (int i = 0; i < 68; ++i) out << i << ".5 " << i << ".25\n";
  out << "}\n";
  out.close();
  const Vector v = load_pts(dir.path / "face.pts");
  CHECK(v.size() == 136);
  CHECK(v(0) == 0.5);
  CHECK(v(135) == 67.25);
}

TEST_CASE("pts errors carry the line number") {
  TempDir dir("structnet_test_ptsbad");

  {
    std::ofstream out(dir.path / "short.pts");
    out << "version: 1\nn_points: 3\n{\n1 2\n2 3\n}\n";
  }
  CHECK_THROWS_WITH_AS(load_pts(dir.path / "short.pts"),
                       doctest::Contains(":6:"), DataError);

  {
    std::ofstream out(dir.path / "noheader.pts");
    out << "points: 3\n";
  }
  CHECK_THROWS_WITH_AS(load_pts(dir.path / "noheader.pts"),
                       doctest::Contains("version"), DataError);

  {
    std::ofstream out(dir.path / "garbled.pts");
    out << "version: 1\nn_points: 2\n{\n1 2\nx y\n}\n";
  }
  CHECK_THROWS_AS(load_pts(dir.path / "garbled.pts"), DataError);
}

// ---------------------------------------------------------------------------
// PGM images
// ---------------------------------------------------------------------------

TEST_CASE("pgm round trip is exact on the 8-bit grid") {
  TempDir dir("structnet_test_pgm");
  Vector pixels(16);
  for (Index i = 0; i < 16; ++i) {
    pixels(i) = static_cast<Scalar>(i * 17 % 256) / 255.0;
  }
  save_pgm(dir.path / "img.pgm", pixels, 4);
  const Vector back = load_pgm(dir.path / "img.pgm", 4);
  CHECK((back - pixels).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("all-black image loads as zeros") {
  TempDir dir("structnet_test_pgmblack");
  save_pgm(dir.path / "black.pgm", Vector::Zero(25), 5);
  const Vector v = load_pgm(dir.path / "black.pgm", 5);
  CHECK(v.isZero(0.0));
}

TEST_CASE("pgm loader rejects wrong sizes and truncation") {
  TempDir dir("structnet_test_pgmbad");
  save_pgm(dir.path / "img.pgm", Vector::Zero(16), 4);
  CHECK_THROWS_AS(load_pgm(dir.path / "img.pgm", 5), DataError);

  {
    std::ofstream out(dir.path / "trunc.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.write("\0\0\0", 3);
  }
  CHECK_THROWS_WITH_AS(load_pgm(dir.path / "trunc.pgm", 4),
                       doctest::Contains("truncated"), DataError);

  {
    std::ofstream out(dir.path / "notpgm.pgm", std::ios::binary);
    out << "P2\n4 4\n255\n";
  }
  CHECK_THROWS_AS(load_pgm(dir.path / "notpgm.pgm", 4), DataError);
}

// ---------------------------------------------------------------------------
// Dataset directories
// ---------------------------------------------------------------------------

TEST_CASE("dataset directory round trip keeps kinds and geometry") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 12;
  p.img_side = 16;
  Rng rng(31);
  Dataset ds = synth_generate(tmpl, p, rng);
  Rng strip_rng(32);
  ds = strip_mixed(ds, 0.25, 0.25, strip_rng);

  TempDir dir("structnet_test_dsdir");
  const DatasetCounts counts = save_dataset_dir(dir.path, ds, 16);
  CHECK(counts.full == 6);
  CHECK(counts.input_only == 3);
  CHECK(counts.label_only == 3);

  const Dataset back = load_dataset_dir(dir.path, 16, 10);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].kind == ds.samples[i].kind);
    if (ds.samples[i].has_y()) {
      // pts files store full-precision doubles: labels round trip.
      CHECK((back.samples[i].y - ds.samples[i].y).cwiseAbs().maxCoeff() <
            1e-12);
    }
    if (ds.samples[i].has_x()) {
      // images are quantized to 8 bits on save.
      CHECK((back.samples[i].x - ds.samples[i].x).cwiseAbs().maxCoeff() <=
            0.5 / 255.0 + 1e-12);
    }
  }
  back.validate();
}

TEST_CASE("dataset directories are byte-deterministic") {
  const ShapeTemplate tmpl = ShapeTemplate::face10();
  SynthParams p;
  p.n = 6;
  p.img_side = 12;

  auto write_once = [&](const fs::path& dir) {
    Rng rng(7);
    const Dataset ds = synth_generate(tmpl, p, rng);
    save_dataset_dir(dir, ds, 12);
  };
  TempDir a("structnet_test_det_a"), b("structnet_test_det_b");
  write_once(a.path);
  write_once(b.path);

  for (const auto& entry : fs::directory_iterator(a.path)) {
    const fs::path other = b.path / entry.path().filename();
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(other, std::ios::binary);
    REQUIRE(fb.good());
    std::string sa((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
}

TEST_CASE("manifest errors are diagnosed") {
  TempDir dir("structnet_test_manifest");
  {
    std::ofstream out(dir.path / "manifest.tsv", std::ios::binary);
    out << "kind\timage_path\tpts_path\n";
    out << "full\timg.pgm\n";  // missing field
  }
  CHECK_THROWS_AS(read_manifest(dir.path), DataError);

  {
    std::ofstream out(dir.path / "manifest.tsv", std::ios::binary);
    out << "kind\timage_path\tpts_path\n";
    out << "input_only\t\tpts.pts\n";  // path does not match kind
  }
  CHECK_THROWS_AS(read_manifest(dir.path), DataError);

  {
    std::ofstream out(dir.path / "manifest.tsv", std::ios::binary);
    out << "kind\timage_path\tpts_path\n";
    out << "sideways\timg.pgm\t\n";
  }
  CHECK_THROWS_AS(read_manifest(dir.path), DataError);

  CHECK_THROWS_AS(read_manifest(dir.path / "missing"), DataError);
}
