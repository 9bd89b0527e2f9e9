#include "lfpp/field_store.hpp"

#include <array>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "lfpp/error.hpp"

namespace lfpp {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'F', 'P', 'P', 'F', 'L', 'D', '1'};

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(buf_[pos_++]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{static_cast<std::uint8_t>(buf_[pos_++])} << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{static_cast<std::uint8_t>(buf_[pos_++])} << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
};

std::string hex_of(double v) {
  std::ostringstream os;
  os << std::hex << std::bit_cast<std::uint64_t>(v);
  return os.str();
}

}  // namespace

void save_field(const Field& field, const std::filesystem::path& path) {
  const GridSpec& spec = field.spec();
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kFieldFormatVersion);
  w.u32(spec.n);
  w.f64(spec.half_width);
  w.u32(spec.pad_factor);
  w.u64(field.seed());
  w.u8(static_cast<std::uint8_t>(field.kind()));
  w.f64(field.kind() == FieldKind::mollified ? field.eps() : 0.0);
  w.f64(field.provenance().calibration);
  for (double v : field.values()) w.f64(v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

Field load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kMagic.size() || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorKind::magic_mismatch, path.string() + " does not start with LFPPFLD1");
  }
  if (buf.size() < kFieldHeaderBytes) {
    throw Error(ErrorKind::length_mismatch, path.string() + ": header needs " +
                                                std::to_string(kFieldHeaderBytes) + " bytes, file has " +
                                                std::to_string(buf.size()));
  }
  Reader r(buf);
  r.skip(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kFieldFormatVersion) {
    throw Error(ErrorKind::version_mismatch, path.string() + ": version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kFieldFormatVersion));
  }
  GridSpec spec;
  spec.n = r.u32();
  spec.half_width = r.f64();
  spec.pad_factor = r.u32();
  const std::uint64_t seed = r.u64();
  const std::uint8_t kind_tag = r.u8();
  const double eps = r.f64();
  const double calibration = r.f64();
  if (kind_tag > 1) throw Error(ErrorKind::data, path.string() + ": unknown kind tag");
  spec.validate();

  const std::size_t expected = std::size_t{spec.n} * spec.n * 8;
  const std::size_t actual = buf.size() - kFieldHeaderBytes;
  if (actual != expected) {
    throw Error(ErrorKind::length_mismatch, path.string() + ": payload expected " +
                                                std::to_string(expected) + " bytes, found " +
                                                std::to_string(actual));
  }
  std::vector<double> values(spec.node_count());
  for (double& v : values) v = r.f64();

  Field::Provenance prov;
  prov.seed = seed;
  prov.calibration = calibration;
  prov.synthetic = calibration == 0.0;
  const auto kind = static_cast<FieldKind>(kind_tag);
  // Sampled fields are normalized before mollification; the flag survives it.
  const bool normalized = kind == FieldKind::raw ? unit_circle_normalized(spec, values)
                                                 : calibration != 0.0;
  return Field(spec, std::move(values), prov, kind, eps, normalized);
}

// ---------------------------------------------------------------------------

FieldCache::FieldCache(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create cache directory " + root_.string());
}

std::optional<FieldCache> FieldCache::from_environment(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("LFPP_CACHE_DIR"); env != nullptr && *env != '\0') {
    return FieldCache(env);
  }
  if (!fallback.empty()) return FieldCache(fallback);
  return std::nullopt;
}

std::filesystem::path FieldCache::path_for(const GridSpec& spec, std::uint64_t seed,
                                           FieldKind kind, double eps) const {
  std::ostringstream name;
  name << "field_n" << spec.n << "_L" << hex_of(spec.half_width) << "_p" << spec.pad_factor << "_s"
       << std::hex << seed << "_k" << static_cast<int>(kind) << "_e"
       << hex_of(kind == FieldKind::mollified ? eps : 0.0) << ".lfpp";
  return root_ / name.str();
}

std::optional<Field> FieldCache::find(const GridSpec& spec, std::uint64_t seed, FieldKind kind,
                                      double eps) const {
  const auto path = path_for(spec, seed, kind, eps);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return load_field(path);
}

void FieldCache::insert(const Field& field) const {
  const auto path = path_for(field.spec(), field.seed(), field.kind(), field.eps());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  save_field(field, tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot move cache file into " + path.string());
  }
}

}  // namespace lfpp
