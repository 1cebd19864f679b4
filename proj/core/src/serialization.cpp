// Copyright 2026 The spectral-adapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "spectral/serialization.hpp"

#include <fstream>
#include <sstream>

#include "spectral/errors.hpp"

namespace spectral {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json vector_json(const std::vector<double>& v) { return to_json(Matrix::row_vector(v)); }

std::vector<double> vector_from(const json& j) {
  Matrix m = matrix_from_json(j);
  if (m.rows() != 1) throw ShapeError("expected a 1xn vector, got " + m.shape_string());
  return {m.data().begin(), m.data().end()};
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw ConfigError(std::string("checkpoint is missing field '") + name + "'");
  }
  return j.at(name);
}

Matrix named(const json& matrices, const char* name) {
  return matrix_from_json(field(matrices, name));
}

LowRankDelta delta_from(const json& matrices, const char* b, const char* a, std::size_t r,
                        double alpha) {
  LowRankDelta d{named(matrices, b), named(matrices, a), r, alpha};
  if (d.b.cols() != r || d.a.rows() != r) {
    throw ShapeError(std::string("checkpoint factors ") + b + "/" + a +
                     " disagree with rank " + std::to_string(r));
  }
  return d;
}

TruncatedSvd truncated_from(const json& matrices, std::size_t k) {
  TruncatedSvd t{k, named(matrices, "U_p"), vector_from(field(matrices, "sigma_p")),
                 named(matrices, "V_p")};
  if (t.u_p.cols() != k || t.v_p.cols() != k || t.sigma_p.size() != k) {
    throw ShapeError("checkpoint truncated SVD disagrees with k=" + std::to_string(k));
  }
  return t;
}

void put_truncated(json& matrices, const TruncatedSvd& t) {
  matrices["U_p"] = to_json(t.u_p);
  matrices["sigma_p"] = vector_json(t.sigma_p);
  matrices["V_p"] = to_json(t.v_p);
}

json slot_json(const LinearSlot& slot) {
  if (const Adapter* a = slot.adapter()) return {{"adapter", to_json(*a)}};
  return {{"dense", to_json(*slot.dense())}};
}

LinearSlot slot_from(const json& j) {
  if (j.contains("adapter")) return LinearSlot(adapter_from_json(j.at("adapter")));
  return LinearSlot(matrix_from_json(field(j, "dense")));
}

}  // namespace

json to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  try {
    const auto rows = field(j, "rows").get<std::size_t>();
    const auto cols = field(j, "cols").get<std::size_t>();
    auto data = field(j, "data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
      throw ConfigError("matrix JSON has " + std::to_string(data.size()) + " values for " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix m(rows, cols, std::move(data));
    require_finite(m, "matrix checkpoint");
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed matrix JSON: ") + e.what());
  }
}

json to_json(const Adapter& a) {
  json j;
  j["tag"] = std::string(to_string(a.kind()));
  j["alpha"] = a.alpha() ? json(*a.alpha()) : json(nullptr);
  j["r"] = a.rank() ? json(*a.rank()) : json(nullptr);
  j["k"] = a.principal_count() ? json(*a.principal_count()) : json(nullptr);
  json mats = json::object();
  std::visit(Overloaded{
                 [&](const LoraAdapter& p) {
                   mats["W0"] = to_json(p.w0);
                   mats["B"] = to_json(p.delta.b);
                   mats["A"] = to_json(p.delta.a);
                 },
                 [&](const DoraAdapter& p) {
                   mats["W0"] = to_json(p.w0);
                   mats["B"] = to_json(p.delta.b);
                   mats["A"] = to_json(p.delta.a);
                   mats["magnitude"] = to_json(p.magnitude);
                 },
                 [&](const SpectralAdapter& p) {
                   put_truncated(mats, p.base);
                   mats["B_U"] = to_json(p.delta_u.b);
                   mats["A_U"] = to_json(p.delta_u.a);
                   mats["B_V"] = to_json(p.delta_v.b);
                   mats["A_V"] = to_json(p.delta_v.a);
                 },
                 [&](const SpectralPlusMinorAdapter& p) {
                   put_truncated(mats, p.spectral.base);
                   mats["B_U"] = to_json(p.spectral.delta_u.b);
                   mats["A_U"] = to_json(p.spectral.delta_u.a);
                   mats["B_V"] = to_json(p.spectral.delta_v.b);
                   mats["A_V"] = to_json(p.spectral.delta_v.a);
                   mats["W_m"] = to_json(p.minor);
                 },
                 [&](const TruncatedFrozenAdapter& p) { put_truncated(mats, p.base); },
                 [&](const FullFrozenAdapter& p) { mats["W0"] = to_json(p.w0); },
             },
             a.payload());
  j["matrices"] = std::move(mats);
  return j;
}

Adapter adapter_from_json(const json& j) {
  const AdapterKind kind = parse_adapter_kind(field(j, "tag").get<std::string>());
  const json& mats = field(j, "matrices");
  auto rank = [&] { return field(j, "r").get<std::size_t>(); };
  auto k = [&] { return field(j, "k").get<std::size_t>(); };
  auto alpha = [&] { return field(j, "alpha").get<double>(); };
  try {
    switch (kind) {
      case AdapterKind::kLora:
        return Adapter(LoraAdapter{named(mats, "W0"), delta_from(mats, "B", "A", rank(), alpha())});
      case AdapterKind::kDora:
        return Adapter(DoraAdapter{named(mats, "W0"), delta_from(mats, "B", "A", rank(), alpha()),
                                   named(mats, "magnitude")});
      case AdapterKind::kSpectral:
        return Adapter(SpectralAdapter{truncated_from(mats, k()),
                                       delta_from(mats, "B_U", "A_U", rank(), alpha()),
                                       delta_from(mats, "B_V", "A_V", rank(), alpha())});
      case AdapterKind::kSpectralPlusMinor:
        return Adapter(SpectralPlusMinorAdapter{
            SpectralAdapter{truncated_from(mats, k()),
                            delta_from(mats, "B_U", "A_U", rank(), alpha()),
                            delta_from(mats, "B_V", "A_V", rank(), alpha())},
            named(mats, "W_m")});
      case AdapterKind::kTruncatedFrozen:
        return Adapter(TruncatedFrozenAdapter{truncated_from(mats, k())});
      case AdapterKind::kFullFrozen:
        return Adapter(FullFrozenAdapter{named(mats, "W0")});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed adapter checkpoint: ") + e.what());
  }
  throw ConfigError("unhandled adapter tag");
}

json to_json(const Model& m) {
  json layers = json::array();
  for (const EncoderLayer& layer : m.layers) {
    layers.push_back({{"wq", slot_json(layer.wq)},
                      {"wk", slot_json(layer.wk)},
                      {"wv", slot_json(layer.wv)},
                      {"wo", to_json(layer.wo)},
                      {"ffn1", to_json(layer.ffn1)},
                      {"ffn2", to_json(layer.ffn2)},
                      {"heads", layer.heads}});
  }
  return {{"d_in", m.dims.d_in},
          {"d", m.dims.d},
          {"hidden", m.dims.hidden},
          {"layer_count", m.dims.layers},
          {"heads", m.dims.heads},
          {"classes", m.dims.classes},
          {"dense_trainable", m.dense_trainable},
          {"classifier_trainable", m.classifier_trainable},
          {"input_proj", to_json(m.input_proj)},
          {"classifier", to_json(m.classifier)},
          {"layers", std::move(layers)}};
}

Model model_from_json(const json& j) {
  try {
    Model m;
    m.dims.d_in = field(j, "d_in").get<std::size_t>();
    m.dims.d = field(j, "d").get<std::size_t>();
    m.dims.hidden = field(j, "hidden").get<std::size_t>();
    m.dims.layers = field(j, "layer_count").get<std::size_t>();
    m.dims.heads = field(j, "heads").get<std::size_t>();
    m.dims.classes = field(j, "classes").get<std::size_t>();
    m.dense_trainable = j.value("dense_trainable", false);
    m.classifier_trainable = j.value("classifier_trainable", true);
    m.input_proj = matrix_from_json(field(j, "input_proj"));
    m.classifier = matrix_from_json(field(j, "classifier"));
    for (const json& lj : field(j, "layers")) {
      EncoderLayer layer;
      layer.wq = slot_from(field(lj, "wq"));
      layer.wk = slot_from(field(lj, "wk"));
      layer.wv = slot_from(field(lj, "wv"));
      layer.wo = matrix_from_json(field(lj, "wo"));
      layer.ffn1 = matrix_from_json(field(lj, "ffn1"));
      layer.ffn2 = matrix_from_json(field(lj, "ffn2"));
      layer.heads = lj.value("heads", m.dims.heads);
      m.layers.push_back(std::move(layer));
    }
    if (m.layers.size() != m.dims.layers) {
      throw ShapeError("model checkpoint lists " + std::to_string(m.layers.size()) +
                       " layers but layer_count=" + std::to_string(m.dims.layers));
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model checkpoint: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw ConfigError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace spectral
