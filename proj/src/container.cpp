#include "arraykit/container.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <limits>

#include "arraykit/error.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

const MatrixD &Container::matrix(const std::string &name) const {
  for (const auto &[n, m] : matrices)
    if (n == name) return m;
  throw DataError("container has no matrix '" + name + "'");
}

bool Container::has_matrix(const std::string &name) const {
  for (const auto &entry : matrices)
    if (entry.first == name) return true;
  return false;
}

std::string canonical_json(const Json &j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

namespace {

constexpr char kMagic[5] = {'M', 'G', 'E', 'S', '1'};

template <typename T>
void put_raw(std::string &out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
public:
  explicit Reader(std::string_view b) : b_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

private:
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) throw DataError("container is truncated");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Container &c) {
  std::string out(kMagic, sizeof(kMagic));
  put_raw<std::uint32_t>(out, kContainerVersion);
  const std::string meta = canonical_json(c.meta);
  put_raw<std::uint64_t>(out, meta.size());
  out += meta;
  put_raw<std::uint32_t>(out, std::uint32_t(c.matrices.size()));
  for (const auto &[name, m] : c.matrices) {
    put_raw<std::uint32_t>(out, std::uint32_t(name.size()));
    out += name;
    put_raw<std::uint64_t>(out, m.rows());
    put_raw<std::uint64_t>(out, m.cols());
    out.append(reinterpret_cast<const char *>(m.data().data()), m.size() * sizeof(double));
  }
  return out;
}

Container deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a dataset container (bad magic; expected MGES1 version " + std::to_string(kContainerVersion) + ")");
  r.bytes(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion)
    throw DataError("unsupported container version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kContainerVersion) + ")");
  Container c;
  const auto metaLen = r.get<std::uint64_t>();
  try {
    c.meta = Json::parse(r.bytes(metaLen));
  } catch (const Json::exception &e) {
    throw DataError(std::string("container metadata is not valid JSON: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto nameLen = r.get<std::uint32_t>();
    std::string name(r.bytes(nameLen));
    const auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>();
    if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / 8 / cols)
      throw DataError("container matrix '" + name + "' has an impossible size");
    const auto raw = r.bytes(rows * cols * sizeof(double));
    MatrixD m(rows, cols);
    std::memcpy(m.data().data(), raw.data(), raw.size());
    c.matrices.emplace_back(std::move(name), std::move(m));
  }
  if (!r.done()) throw DataError("container has trailing bytes");
  return c;
}

void save_container(const std::string &path, const Container &c) { text::write_file(path, serialize(c)); }

Container load_container(const std::string &path) {
  try {
    return deserialize(text::read_file(path));
  } catch (const DataError &e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string content_hash(const Container &c) {
  Container copy;
  copy.meta = c.meta;
  copy.meta.erase("provenance");
  copy.meta.erase("toolVersion");
  copy.matrices = c.matrices;
  return sha256_hex(serialize(copy));
}

}  // namespace arraykit
