#pragma once

// SPVEC1 container for externally computed token vectors:
//   "SPVEC1" | u32 external_dim | u32 count |
//   count x ( u32 id_len | id bytes | u32 token_count | f32[token_count * dim] )
// All integers and floats little-endian; rows are row-major.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/error.hpp"
#include "spancat/tensor.hpp"

namespace spancat {

using ExternalVectors = std::unordered_map<std::string, Matrix<float>>;

namespace binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_floats(std::ostream& out, const float* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
}

inline void need(std::istream& in, const char* what) {
  if (!in) throw DataError(std::string("truncated input while reading ") + what);
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  need(in, what);
  return v;
}

inline std::string get_str(std::istream& in, const char* what, std::uint32_t max_len = 1u << 24) {
  const auto n = get_u32(in, what);
  if (n > max_len) throw DataError(std::string("implausible length while reading ") + what);
  std::string s(n, '\0');
  in.read(s.data(), n);
  need(in, what);
  return s;
}

inline void get_floats(std::istream& in, float* p, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
  need(in, what);
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string buf(magic.size(), '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in || buf != magic) throw DataError("bad magic: expected " + std::string(magic));
}

}  // namespace binio

inline constexpr std::string_view kVectorMagic = "SPVEC1";

// Entries are written in `order` (ids), which must all be present.
inline void write_vectors(std::ostream& out, const ExternalVectors& vecs, int dim,
                          const std::vector<std::string>& order) {
  out.write(kVectorMagic.data(), kVectorMagic.size());
  binio::put_u32(out, static_cast<std::uint32_t>(dim));
  binio::put_u32(out, static_cast<std::uint32_t>(order.size()));
  for (const auto& id : order) {
    const auto& m = vecs.at(id);
    if (m.cols() != dim) throw DataError("vectors for '" + id + "' have wrong dimension");
    binio::put_str(out, id);
    binio::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    binio::put_floats(out, m.data(), static_cast<std::size_t>(m.size()));
  }
  if (!out) throw DataError("failed writing vector container");
}

inline ExternalVectors read_vectors(std::istream& in, int* dim_out = nullptr) {
  binio::expect_magic(in, kVectorMagic);
  const auto dim = binio::get_u32(in, "vector dim");
  const auto count = binio::get_u32(in, "vector count");
  ExternalVectors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string id = binio::get_str(in, "excerpt id");
    const auto rows = binio::get_u32(in, "token count");
    Matrix<float> m(rows, dim);
    binio::get_floats(in, m.data(), static_cast<std::size_t>(m.size()), "vector rows");
    if (!m.allFinite()) throw DataError("non-finite vectors for excerpt '" + id + "'");
    if (!out.emplace(std::move(id), std::move(m)).second) throw DataError("duplicate vector entry");
  }
  if (dim_out) *dim_out = static_cast<int>(dim);
  return out;
}

// Loads vectors for every excerpt of `corpus`, checking dims and token counts.
inline ExternalVectors load_external_vectors(const std::string& path, const Corpus& corpus,
                                             int external_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  int dim = 0;
  ExternalVectors all = read_vectors(in, &dim);
  if (dim != external_dim)
    throw DataError("vector file dim " + std::to_string(dim) + " != configured " + std::to_string(external_dim));
  ExternalVectors out;
  for (const auto& e : corpus) {
    if (out.count(e.id)) continue;
    auto it = all.find(e.id);
    if (it == all.end()) throw DataError("no external vectors for excerpt '" + e.id + "'");
    if (it->second.rows() != e.token_count())
      throw DataError("external vectors for excerpt '" + e.id + "' have " +
                      std::to_string(it->second.rows()) + " rows, excerpt has " +
                      std::to_string(e.token_count()) + " tokens");
    out.emplace(e.id, it->second);
  }
  return out;
}

inline void save_vectors(const std::string& path, const ExternalVectors& vecs, int dim,
                         const std::vector<std::string>& order) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_vectors(out, vecs, dim, order);
}

}  // namespace spancat
