#include "structnet/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "structnet/io.hpp"

namespace structnet {

namespace {

// Serialization is explicitly little-endian so files are portable across
// hosts.

void put_bytes(std::string& out, const void* data, std::size_t n) {
  out.append(static_cast<const char*>(data), n);
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  put_bytes(out, bytes, sizeof(T));
}

void put_f64(std::string& out, Scalar v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_le(out, bits);
}

void put_string(std::string& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

class Reader {
 public:
  Reader(const std::string& data, std::string path)
      : data_(data), path_(std::move(path)) {}

  template <typename T>
  T get_le() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes, bytes + sizeof(T));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  Scalar get_f64() {
    const std::uint64_t bits = get_le<std::uint64_t>();
    Scalar v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string get_string() {
    const std::uint32_t n = get_le<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw DataError(path_ + ": truncated at byte " + std::to_string(pos_));
    }
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelMeta& meta,
                const ParamStore& params) {
  std::string out;
  put_bytes(out, kModelMagic, sizeof(kModelMagic));
  put_le(out, kModelVersion);

  put_le(out, static_cast<std::uint32_t>(meta.spec.dims.size()));
  for (Index d : meta.spec.dims) put_le(out, static_cast<std::int64_t>(d));
  put_le(out, static_cast<std::int32_t>(meta.spec.encoder_depth));
  put_le(out, static_cast<std::int32_t>(meta.spec.decoder_depth));

  put_string(out, meta.prng_algorithm);
  put_le(out, meta.seed);
  put_le(out, static_cast<std::int32_t>(meta.best_epoch));
  put_f64(out, meta.best_valid_mse);

  const auto& blocks = params.blocks();
  put_le(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [id, blk] : blocks) {  // std::map: sorted by id
    put_string(out, id);
    put_le(out, static_cast<std::uint32_t>(blk.W.rows()));
    put_le(out, static_cast<std::uint32_t>(blk.W.cols()));
    for (Index r = 0; r < blk.W.rows(); ++r) {
      for (Index c = 0; c < blk.W.cols(); ++c) put_f64(out, blk.W(r, c));
    }
    for (Index r = 0; r < blk.b.size(); ++r) put_f64(out, blk.b(r));
  }

  put_le(out, fnv1a(out));

  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write model file: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing model file: " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open model file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());

  if (data.size() < sizeof(kModelMagic) + sizeof(std::uint32_t) +
                        sizeof(std::uint64_t)) {
    throw DataError(path.string() + ": truncated model file");
  }

  const std::string body = data.substr(0, data.size() - sizeof(std::uint64_t));

  LoadedModel model;
  Reader in(body, path.string());

  char magic[4];
  in.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": bad magic, not a model file");
  }
  const std::uint32_t version = in.get_le<std::uint32_t>();
  if (version != kModelVersion) {
    throw DataError(path.string() + ": unsupported model version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kModelVersion) + ")");
  }

  const std::uint32_t n_dims = in.get_le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    model.meta.spec.dims.push_back(
        static_cast<Index>(in.get_le<std::int64_t>()));
  }
  model.meta.spec.encoder_depth = in.get_le<std::int32_t>();
  model.meta.spec.decoder_depth = in.get_le<std::int32_t>();
  model.meta.prng_algorithm = in.get_string();
  model.meta.seed = in.get_le<std::uint64_t>();
  model.meta.best_epoch = in.get_le<std::int32_t>();
  model.meta.best_valid_mse = in.get_f64();

  const std::uint32_t n_blocks = in.get_le<std::uint32_t>();
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const std::string id = in.get_string();
    const std::uint32_t rows = in.get_le<std::uint32_t>();
    const std::uint32_t cols = in.get_le<std::uint32_t>();
    const std::uint64_t payload =
        (static_cast<std::uint64_t>(rows) * cols + rows) * sizeof(double);
    if (payload > in.remaining()) {
      throw DataError(path.string() + ": truncated at byte " +
                      std::to_string(in.pos()) + " (block " + id + ")");
    }
    ParamBlock& blk = model.params.add_block(id, rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) blk.W(r, c) = in.get_f64();
    }
    for (std::uint32_t r = 0; r < rows; ++r) blk.b(r) = in.get_f64();
  }

  std::uint64_t stored;
  std::memcpy(&stored, data.data() + data.size() - sizeof(stored),
              sizeof(stored));
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char* p = reinterpret_cast<unsigned char*>(&stored);
    std::reverse(p, p + sizeof(stored));
  }
  if (fnv1a(body) != stored) {
    throw DataError(path.string() + ": checksum mismatch, file corrupted");
  }
  return model;
}

std::string describe_model(const LoadedModel& model) {
  std::string out;
  out += "format: SNMF v" + std::to_string(kModelVersion) + "\n";
  out += "dims:";
  for (Index d : model.meta.spec.dims) out += " " + std::to_string(d);
  out += "\n";
  out += "encoder_depth: " + std::to_string(model.meta.spec.encoder_depth) +
         "\n";
  out += "decoder_depth: " + std::to_string(model.meta.spec.decoder_depth) +
         "\n";
  out += "prng: " + model.meta.prng_algorithm + "\n";
  out += "seed: " + std::to_string(model.meta.seed) + "\n";
  out += "best_epoch: " + std::to_string(model.meta.best_epoch) + "\n";
  out += "best_valid_mse: " + format_double(model.meta.best_valid_mse) + "\n";
  out += "blocks:\n";
  for (const auto& [id, blk] : model.params.blocks()) {
    out += "  " + id + ": " + std::to_string(blk.W.rows()) + "x" +
           std::to_string(blk.W.cols()) + "\n";
  }
  return out;
}

}  // namespace structnet
