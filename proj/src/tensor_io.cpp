#include "maskvd/tensor_io.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>

#include "byte_io.hpp"

namespace maskvd {

namespace {

void write_tensor(detail::ByteWriter& w, const NamedTensor& t) {
  std::size_t expect = 1;
  for (auto d : t.dims) expect *= d;
  if (expect != t.values.size()) throw std::invalid_argument("tensor " + t.name + " has wrong size");
  w.u32(static_cast<std::uint32_t>(t.name.size()));
  w.str(t.name);
  w.u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) w.u32(d);
  for (float v : t.values) w.f32(v);
}

NamedTensor read_tensor(detail::ByteReader& r) {
  NamedTensor t;
  t.name = r.str(r.u32());
  const std::uint32_t ndims = r.u32();
  if (ndims > 8) throw std::runtime_error("tensor " + t.name + " has too many dimensions");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < ndims; ++i) {
    t.dims.push_back(r.u32());
    count *= t.dims.back();
  }
  t.values.resize(count);
  for (auto& v : t.values) v = r.f32();
  return t;
}

void write_tensor_section(detail::ByteWriter& w, const std::vector<NamedTensor>& tensors) {
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) write_tensor(w, t);
}

std::vector<NamedTensor> read_tensor_section(detail::ByteReader& r) {
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_tensor(r));
  return out;
}

void check_header(detail::ByteReader& r, const char* magic) {
  if (r.str(4) != magic) throw std::runtime_error(std::string("bad magic, expected ") + magic);
  const std::uint32_t version = r.u32();
  if (version != kTensorFormatVersion) {
    throw std::runtime_error("unsupported tensor format version " + std::to_string(version));
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<NamedTensor> model_tensors(const VitModel& m) {
  std::vector<NamedTensor> t;
  t.push_back(to_named("patch.weight", m.patch_weight));
  t.push_back(to_named("patch.bias", m.patch_bias));
  t.push_back(to_named("pos_embed", m.pos_embed));
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& w = m.blocks[b];
    const std::string p = "blocks." + std::to_string(b) + ".";
    t.push_back(to_named(p + "ln1.gamma", w.ln1_gamma));
    t.push_back(to_named(p + "ln1.beta", w.ln1_beta));
    t.push_back(to_named(p + "qkv.weight", w.qkv_weight));
    t.push_back(to_named(p + "qkv.bias", w.qkv_bias));
    t.push_back(to_named(p + "proj.weight", w.proj_weight));
    t.push_back(to_named(p + "proj.bias", w.proj_bias));
    t.push_back(to_named(p + "ln2.gamma", w.ln2_gamma));
    t.push_back(to_named(p + "ln2.beta", w.ln2_beta));
    t.push_back(to_named(p + "fc1.weight", w.fc1_weight));
    t.push_back(to_named(p + "fc1.bias", w.fc1_bias));
    t.push_back(to_named(p + "fc2.weight", w.fc2_weight));
    t.push_back(to_named(p + "fc2.bias", w.fc2_bias));
  }
  return t;
}

}  // namespace

NamedTensor to_named(const std::string& name, const Matrix& m) {
  NamedTensor t{name, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) t.values.push_back(static_cast<float>(m.data()[i]));
  return t;
}

NamedTensor to_named(const std::string& name, const RowVector& v) {
  NamedTensor t{name, {static_cast<std::uint32_t>(v.size())}, {}};
  for (Eigen::Index i = 0; i < v.size(); ++i) t.values.push_back(static_cast<float>(v[i]));
  return t;
}

Matrix to_matrix(const NamedTensor& t) {
  Eigen::Index rows = 1, cols = 1;
  if (t.dims.size() == 1) {
    cols = t.dims[0];
  } else if (t.dims.size() == 2) {
    rows = t.dims[0];
    cols = t.dims[1];
  } else {
    throw std::runtime_error("tensor " + t.name + " is not 1-D or 2-D");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = t.values[static_cast<std::size_t>(i)];
  return m;
}

std::string encode_tensors(const std::vector<NamedTensor>& tensors) {
  detail::ByteWriter w;
  w.str("MVDT");
  w.u32(kTensorFormatVersion);
  write_tensor_section(w, tensors);
  return std::move(w.bytes());
}

std::vector<NamedTensor> decode_tensors(const std::string& bytes) {
  detail::ByteReader r(bytes);
  check_header(r, "MVDT");
  auto out = read_tensor_section(r);
  if (!r.done()) throw std::runtime_error("trailing bytes after tensor file");
  return out;
}

std::string encode_model(const VitModel& model) {
  const ModelConfig& c = model.config;
  detail::ByteWriter w;
  w.str("MVDW");
  w.u32(kTensorFormatVersion);
  for (int v : {c.embed_dim, c.num_heads, c.num_blocks, c.window_side, c.ffn_hidden,
                c.grid.height(), c.grid.width(), c.grid.region_size()}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.global_blocks.size()));
  for (int g : c.global_blocks) w.u32(static_cast<std::uint32_t>(g));
  write_tensor_section(w, model_tensors(model));
  return std::move(w.bytes());
}

VitModel decode_model(const std::string& bytes) {
  detail::ByteReader r(bytes);
  check_header(r, "MVDW");
  ModelConfig c;
  c.embed_dim = static_cast<int>(r.u32());
  c.num_heads = static_cast<int>(r.u32());
  c.num_blocks = static_cast<int>(r.u32());
  c.window_side = static_cast<int>(r.u32());
  c.ffn_hidden = static_cast<int>(r.u32());
  const int h = static_cast<int>(r.u32());
  const int w = static_cast<int>(r.u32());
  const int s = static_cast<int>(r.u32());
  c.grid = GridSpec(h, w, s);
  c.seed = r.u64();
  c.global_blocks.resize(r.u32());
  for (int& g : c.global_blocks) g = static_cast<int>(r.u32());
  c.validate();

  std::map<std::string, Matrix> named;
  for (auto& t : read_tensor_section(r)) named.emplace(t.name, to_matrix(t));
  if (!r.done()) throw std::runtime_error("trailing bytes after weights file");

  auto take = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto it = named.find(name);
    if (it == named.end()) throw std::runtime_error("weights file lacks tensor " + name);
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw std::runtime_error("tensor " + name + " has unexpected shape");
    }
    return it->second;
  };
  auto vec = [&](const std::string& name, Eigen::Index n) -> RowVector {
    return take(name, 1, n).row(0);
  };

  const int L = c.embed_dim, F = c.ffn_hidden;
  VitModel m;
  m.config = c;
  m.patch_weight = take("patch.weight", c.patch_dim(), L);
  m.patch_bias = vec("patch.bias", L);
  m.pos_embed = take("pos_embed", c.tokens(), L);
  for (int b = 0; b < c.num_blocks; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    BlockWeights bw;
    bw.ln1_gamma = vec(p + "ln1.gamma", L);
    bw.ln1_beta = vec(p + "ln1.beta", L);
    bw.qkv_weight = take(p + "qkv.weight", L, 3 * L);
    bw.qkv_bias = vec(p + "qkv.bias", 3 * L);
    bw.proj_weight = take(p + "proj.weight", L, L);
    bw.proj_bias = vec(p + "proj.bias", L);
    bw.ln2_gamma = vec(p + "ln2.gamma", L);
    bw.ln2_beta = vec(p + "ln2.beta", L);
    bw.fc1_weight = take(p + "fc1.weight", L, F);
    bw.fc1_bias = vec(p + "fc1.bias", F);
    bw.fc2_weight = take(p + "fc2.weight", F, L);
    bw.fc2_bias = vec(p + "fc2.bias", L);
    m.blocks.push_back(std::move(bw));
  }
  return m;
}

void save_model(const std::filesystem::path& path, const VitModel& model) {
  spit(path, encode_model(model));
}

VitModel load_model(const std::filesystem::path& path) { return decode_model(slurp(path)); }

void save_feature_map(const std::filesystem::path& path, const Matrix& features) {
  spit(path, encode_tensors({to_named("features", features)}));
}

Matrix load_feature_map(const std::filesystem::path& path) {
  auto tensors = decode_tensors(slurp(path));
  if (tensors.size() != 1 || tensors[0].name != "features") {
    throw std::runtime_error(path.string() + " is not a feature map file");
  }
  return to_matrix(tensors[0]);
}

}  // namespace maskvd
