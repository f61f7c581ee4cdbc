#pragma once

// SPANCKPT1 checkpoint container:
//   "SPANCKPT1" | u32 json_len | config JSON |
//   u32 tensor_count | tensor_count x ( u32 name_len | name | u32 ndim |
//   u32 dims[ndim] | f32 data, row-major )
// The hashed embedder stores its materialised rows as two tensors:
// "embed.buckets" (bucket ids, exact in f32 below 2^24) and "embed.rows".

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "spancat/config.hpp"
#include "spancat/model.hpp"
#include "spancat/vectors.hpp"

namespace spancat {

inline constexpr std::string_view kCheckpointMagic = "SPANCKPT1";

struct NamedTensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
};

namespace detail {

inline bool is_embed_row(const std::string& name) { return name.rfind("embed.", 0) == 0; }

}  // namespace detail

inline void write_checkpoint(std::ostream& out, SpanModel<float>& model) {
  const std::string cfg = to_json(model.config()).dump();
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  binio::put_str(out, cfg);

  std::vector<std::pair<std::string, NamedTensor>> tensors;
  if (model.config().encoder.uses_hashed()) {
    const auto& emb = model.encoder().embedder();
    const auto buckets = emb.materialized_buckets();
    NamedTensor ids{{static_cast<std::uint32_t>(buckets.size())}, {}};
    NamedTensor rows{{static_cast<std::uint32_t>(buckets.size()), static_cast<std::uint32_t>(emb.dim())}, {}};
    for (auto b : buckets) {
      ids.data.push_back(static_cast<float>(b));
      const RowVector<float> r = emb.row(b);
      rows.data.insert(rows.data.end(), r.data(), r.data() + r.size());
    }
    tensors.emplace_back("embed.buckets", std::move(ids));
    tensors.emplace_back("embed.rows", std::move(rows));
  }
  for (auto* p : model.parameters()) {
    if (detail::is_embed_row(p->name)) continue;
    NamedTensor t{{static_cast<std::uint32_t>(p->value.rows()), static_cast<std::uint32_t>(p->value.cols())},
                  {p->value.data(), p->value.data() + p->value.size()}};
    tensors.emplace_back(p->name, std::move(t));
  }
  binio::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    binio::put_str(out, name);
    binio::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) binio::put_u32(out, d);
    binio::put_floats(out, t.data.data(), t.data.size());
  }
  if (!out) throw DataError("failed writing checkpoint");
}

inline SpanModel<float> read_checkpoint(std::istream& in) {
  binio::expect_magic(in, kCheckpointMagic);
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(binio::get_str(in, "checkpoint config"));
  } catch (const nlohmann::json::parse_error& ex) {
    throw DataError(std::string("checkpoint config: ") + ex.what());
  }
  SpanModel<float> model(model_config_from_json(cfg_json));

  std::map<std::string, NamedTensor> tensors;
  const auto count = binio::get_u32(in, "tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = binio::get_str(in, "tensor name");
    NamedTensor t;
    const auto ndim = binio::get_u32(in, "tensor rank");
    if (ndim > 4) throw DataError("tensor '" + name + "' has implausible rank");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(binio::get_u32(in, "tensor shape"));
      n *= t.shape.back();
    }
    if (n > (std::size_t{1} << 31)) throw DataError("tensor '" + name + "' is implausibly large");
    t.data.resize(n);
    binio::get_floats(in, t.data.data(), n, "tensor data");
    tensors.emplace(std::move(name), std::move(t));
  }

  auto take = [&](const std::string& name, std::vector<std::uint32_t> shape) -> NamedTensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint lacks tensor '" + name + "'");
    if (it->second.shape != shape) throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    return it->second;
  };

  std::size_t expected = 0;
  if (model.config().encoder.uses_hashed()) {
    auto it = tensors.find("embed.buckets");
    if (it == tensors.end() || it->second.shape.size() != 1) throw DataError("checkpoint lacks 'embed.buckets'");
    const auto n = it->second.shape[0];
    auto& emb = model.encoder().embedder();
    const auto& ids = it->second.data;
    const auto& rows = take("embed.rows", {n, static_cast<std::uint32_t>(emb.dim())}).data;
    for (std::uint32_t i = 0; i < n; ++i) {
      const float f = ids[i];
      if (!(f >= 0.0f) || f >= static_cast<float>(emb.buckets()) || f != std::floor(f))
        throw DataError("checkpoint has an invalid embedding bucket id");
      auto& p = emb.materialize(static_cast<std::uint32_t>(f));
      std::copy(rows.begin() + static_cast<std::ptrdiff_t>(i) * emb.dim(),
                rows.begin() + static_cast<std::ptrdiff_t>(i + 1) * emb.dim(), p.value.data());
    }
    expected += 2;
  }
  for (auto* p : model.parameters()) {
    if (detail::is_embed_row(p->name)) continue;
    const auto& t =
        take(p->name, {static_cast<std::uint32_t>(p->value.rows()), static_cast<std::uint32_t>(p->value.cols())});
    std::copy(t.data.begin(), t.data.end(), p->value.data());
    if (!p->value.allFinite()) throw DataError("checkpoint tensor '" + p->name + "' is not finite");
    ++expected;
  }
  if (expected != tensors.size()) throw DataError("checkpoint has tensors the configuration does not use");
  return model;
}

inline void save_checkpoint(const std::string& path, SpanModel<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_checkpoint(out, model);
}

inline SpanModel<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace spancat
