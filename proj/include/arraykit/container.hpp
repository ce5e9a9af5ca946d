#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arraykit/matrix.hpp"
#include "json.hpp"

namespace arraykit {

using Json = nlohmann::json;  // std::map backed: keys are always sorted

/// Single-file object store: "MGES1", u32 format version, u64 metadata
/// length, canonical JSON metadata, u32 matrix count, then per matrix
/// u32 name length, name, u64 rows, u64 cols and rows*cols IEEE doubles.
/// All integers and doubles are little-endian.
struct Container {
  Json meta = Json::object();
  std::vector<std::pair<std::string, MatrixD>> matrices;

  const MatrixD &matrix(const std::string &name) const;
  bool has_matrix(const std::string &name) const;
  void put(std::string name, MatrixD m) { matrices.emplace_back(std::move(name), std::move(m)); }
};

inline constexpr std::uint32_t kContainerVersion = 1;

/// Canonical text of a JSON value: sorted keys, no whitespace.
std::string canonical_json(const Json &j);

std::string serialize(const Container &c);
/// Throws DataError on a bad magic, unsupported version or truncation.
Container deserialize(std::string_view bytes);

void save_container(const std::string &path, const Container &c);
Container load_container(const std::string &path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Hash of the stored object: the serialization without the "provenance"
/// and "toolVersion" metadata keys.
std::string content_hash(const Container &c);

}  // namespace arraykit
