#include "mvuq/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "mvuq/error.hpp"

namespace mvuq {
namespace {

static_assert(std::endian::native == std::endian::little, "BTSR codec assumes a little-endian host");

constexpr char kMagic[4] = {'B', 'T', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) throw FormatError(pos_, std::string("truncated ") + what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::uint8_t* cursor() const { return bytes_.data() + pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

double Tensor::at(std::size_t flat) const {
  return std::visit([flat](const auto& v) { return static_cast<double>(v[flat]); }, data);
}

std::vector<std::uint8_t> encode_btsr(const Tensor& t) {
  const auto count = t.element_count();
  const std::size_t payload = std::visit([](const auto& v) { return v.size(); }, t.data);
  if (payload != count) throw Error(Errc::ShapeMismatch, "tensor payload does not match dims");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put(out, d);
  put(out, static_cast<std::uint8_t>(t.dtype()));
  std::visit(
      [&out](const auto& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        out.insert(out.end(), p, p + v.size() * sizeof(v[0]));
      },
      t.data);
  return out;
}

Tensor decode_btsr(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    const std::size_t at = r.pos();
    if (r.get<char>("magic") != c) throw FormatError(at, "bad BTSR magic");
  }
  const std::size_t version_at = r.pos();
  if (r.get<std::uint32_t>("version") != kVersion) throw FormatError(version_at, "unsupported BTSR version");
  const std::size_t rank_at = r.pos();
  const auto rank = r.get<std::uint32_t>("rank");
  if (rank == 0 || rank > 16) throw FormatError(rank_at, "implausible rank " + std::to_string(rank));
  Tensor t;
  t.dims.resize(rank);
  for (auto& d : t.dims) d = r.get<std::uint64_t>("dims");
  const std::size_t dtype_at = r.pos();
  const auto dtype = r.get<std::uint8_t>("dtype");
  const std::uint64_t count = t.element_count();
  std::size_t elem = 0;
  if (dtype == static_cast<std::uint8_t>(DType::F64)) {
    elem = sizeof(double);
  } else if (dtype == static_cast<std::uint8_t>(DType::U16)) {
    elem = sizeof(std::uint16_t);
  } else {
    throw FormatError(dtype_at, "unknown dtype " + std::to_string(dtype));
  }
  if (count > r.remaining() / elem || count * elem != r.remaining()) {
    throw FormatError(r.pos(), "payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                                   std::to_string(count * elem));
  }
  if (elem == sizeof(double)) {
    std::vector<double> v(count);
    std::memcpy(v.data(), r.cursor(), count * elem);
    t.data = std::move(v);
  } else {
    std::vector<std::uint16_t> v(count);
    std::memcpy(v.data(), r.cursor(), count * elem);
    t.data = std::move(v);
  }
  return t;
}

void write_btsr(const std::filesystem::path& path, const Tensor& t) { write_file_bytes(path, encode_btsr(t)); }

Tensor read_btsr(const std::filesystem::path& path) { return decode_btsr(read_file_bytes(path)); }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::filesystem::path sidecar_path(const std::filesystem::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

}  // namespace mvuq
