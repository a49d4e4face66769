#include "maskvd/toy_vit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace maskvd {

namespace {

// Weight scale relative to a unit-variance fan-in init. Blocks are kept
// well below the embedding magnitude so residual features stay tied to
// their own patch, as in a trained backbone.
constexpr double kBlockGain = 0.5;
constexpr double kPosEmbedStd = 0.02;
constexpr double kLayerNormEps = 1e-6;

class WeightInit {
 public:
  explicit WeightInit(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [-sqrt(3) * std, sqrt(3) * std], rounded to float.
  double uniform(double stddev) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double half_width = std::sqrt(3.0) * stddev;
    return static_cast<double>(static_cast<float>((2.0 * u - 1.0) * half_width));
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(stddev);
    return m;
  }

  RowVector vector(Eigen::Index n, double stddev) {
    RowVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(stddev);
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

std::uint64_t macs(std::int64_t rows, std::int64_t in, std::int64_t out) {
  return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(in) *
         static_cast<std::uint64_t>(out);
}

Matrix linear(const Matrix& x, const Matrix& w, const RowVector& b, OpTrace* trace,
              const std::string& label) {
  if (trace) trace->add(OpKind::kLinear, label, macs(x.rows(), w.rows(), w.cols()));
  Matrix y = x * w;
  y.rowwise() += b;
  return y;
}

std::string block_label(int block, const char* op) {
  return "block" + std::to_string(block + 1) + "." + op;
}

// Multi-head attention where each group of row indices attends only within
// itself. A single group spanning all rows is global attention.
Matrix attention_sublayer(const Matrix& x, const std::vector<std::vector<int>>& groups,
                          const BlockWeights& w, const ModelConfig& config, int block,
                          OpTrace* trace) {
  const int L = config.embed_dim;
  const int d = config.head_dim();
  const Matrix normed = layer_norm(x, w.ln1_gamma, w.ln1_beta);
  const Matrix qkv = linear(normed, w.qkv_weight, w.qkv_bias, trace, block_label(block, "qkv"));

  Matrix mixed(x.rows(), L);
  std::uint64_t attn_macs = 0;
  for (const auto& group : groups) {
    const auto n = static_cast<Eigen::Index>(group.size());
    if (n == 0) continue;
    for (int h = 0; h < config.num_heads; ++h) {
      Matrix q(n, d), k(n, d), v(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = qkv.row(group[i]);
        q.row(i) = row.segment(h * d, d);
        k.row(i) = row.segment(L + h * d, d);
        v.row(i) = row.segment(2 * L + h * d, d);
      }
      const Matrix o = attention(q, k, v);
      for (Eigen::Index i = 0; i < n; ++i) mixed.row(group[i]).segment(h * d, d) = o.row(i);
    }
    attn_macs += 2 * macs(n, n, L);
  }
  if (trace) trace->add(OpKind::kAttention, block_label(block, "attention"), attn_macs);

  return x + linear(mixed, w.proj_weight, w.proj_bias, trace, block_label(block, "proj"));
}

Matrix ffn_sublayer(const Matrix& x, const BlockWeights& w, int block, OpTrace* trace) {
  const Matrix normed = layer_norm(x, w.ln2_gamma, w.ln2_beta);
  const Matrix hidden = gelu(linear(normed, w.fc1_weight, w.fc1_bias, trace, block_label(block, "fc1")));
  return x + linear(hidden, w.fc2_weight, w.fc2_bias, trace, block_label(block, "fc2"));
}

std::vector<std::vector<int>> window_groups(const ModelConfig& config) {
  const GridSpec& g = config.grid;
  const int ws = config.window_side;
  std::vector<std::vector<int>> groups;
  for (int wr = 0; wr < g.rows(); wr += ws) {
    for (int wc = 0; wc < g.cols(); wc += ws) {
      std::vector<int> group;
      for (int r = wr; r < std::min(wr + ws, g.rows()); ++r) {
        for (int c = wc; c < std::min(wc + ws, g.cols()); ++c) group.push_back(g.index(r, c));
      }
      groups.push_back(std::move(group));
    }
  }
  return groups;
}

std::vector<std::vector<int>> global_group(Eigen::Index n) {
  std::vector<int> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[i] = static_cast<int>(i);
  return {std::move(all)};
}

TokenSet global_block(const TokenSet& tokens, const BlockWeights& w, const ModelConfig& config,
                      int block, OpTrace* trace) {
  TokenSet out;
  out.locations = tokens.locations;
  if (tokens.size() == 0) {
    out.embeddings.resize(0, tokens.embeddings.cols());
    return out;
  }
  const Matrix y = attention_sublayer(tokens.embeddings, global_group(tokens.embeddings.rows()), w,
                                      config, block, trace);
  out.embeddings = ffn_sublayer(y, w, block, trace);
  return out;
}

void check_block_index(const ModelConfig& config, int block) {
  if (block < 0 || block >= config.num_blocks) throw std::out_of_range("block index out of range");
}

}  // namespace

ModelConfig ModelConfig::vit_b(bool windowed) {
  ModelConfig c;
  c.embed_dim = 768;
  c.num_heads = 12;
  c.num_blocks = 12;
  c.global_blocks = windowed ? std::vector<int>{3, 6, 9, 12}
                             : std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  c.window_side = 14;
  c.ffn_hidden = 3072;
  c.grid = GridSpec(672, 672, 16);
  return c;
}

ModelConfig ModelConfig::toy(bool windowed) {
  ModelConfig c;
  if (!windowed) c.global_blocks = {1, 2, 3, 4};
  return c;
}

bool ModelConfig::is_global(int block) const {
  return std::find(global_blocks.begin(), global_blocks.end(), block + 1) != global_blocks.end();
}

int ModelConfig::num_windowed() const {
  int n = 0;
  for (int b = 0; b < num_blocks; ++b) n += is_global(b) ? 0 : 1;
  return n;
}

void ModelConfig::validate() const {
  if (embed_dim <= 0 || num_heads <= 0 || num_blocks <= 0 || ffn_hidden <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (embed_dim % num_heads != 0) {
    throw std::invalid_argument("embed_dim " + std::to_string(embed_dim) +
                                " is not divisible by num_heads " + std::to_string(num_heads));
  }
  for (int b : global_blocks) {
    if (b < 1 || b > num_blocks) {
      throw std::invalid_argument("global block index " + std::to_string(b) + " outside 1.." +
                                  std::to_string(num_blocks));
    }
  }
  if (windowed()) {
    if (window_side <= 0 || grid.rows() % window_side != 0 || grid.cols() % window_side != 0) {
      throw std::invalid_argument("grid " + std::to_string(grid.rows()) + "x" +
                                  std::to_string(grid.cols()) +
                                  " is not divisible by window side " +
                                  std::to_string(window_side));
    }
  }
}

VitModel VitModel::random(const ModelConfig& config) {
  config.validate();
  const int L = config.embed_dim;
  const int F = config.ffn_hidden;
  const int P = config.patch_dim();
  WeightInit init(config.seed);

  VitModel m;
  m.config = config;
  m.patch_weight = init.matrix(P, L, 1.0 / std::sqrt(static_cast<double>(P)));
  m.patch_bias = init.vector(L, 0.02);
  m.pos_embed = init.matrix(config.tokens(), L, kPosEmbedStd);
  const double sl = kBlockGain / std::sqrt(static_cast<double>(L));
  const double sf = kBlockGain / std::sqrt(static_cast<double>(F));
  for (int b = 0; b < config.num_blocks; ++b) {
    BlockWeights w;
    w.ln1_gamma = RowVector::Ones(L);
    w.ln1_beta = RowVector::Zero(L);
    w.qkv_weight = init.matrix(L, 3 * L, sl);
    w.qkv_bias = init.vector(3 * L, 0.02);
    w.proj_weight = init.matrix(L, L, sl);
    w.proj_bias = init.vector(L, 0.02);
    w.ln2_gamma = RowVector::Ones(L);
    w.ln2_beta = RowVector::Zero(L);
    w.fc1_weight = init.matrix(L, F, sl);
    w.fc1_bias = init.vector(F, 0.02);
    w.fc2_weight = init.matrix(F, L, sf);
    w.fc2_bias = init.vector(L, 0.02);
    m.blocks.push_back(std::move(w));
  }
  return m;
}

std::uint64_t ReferenceState::buffer_bytes() const {
  std::uint64_t elems = static_cast<std::uint64_t>(reference_output.size());
  for (const Matrix& m : block_inputs) elems += static_cast<std::uint64_t>(m.size());
  return elems * 4;
}

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.rows() < 1) throw std::invalid_argument("attention needs at least one query");
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw std::invalid_argument("attention dimension mismatch: Q " + std::to_string(q.rows()) +
                                "x" + std::to_string(q.cols()) + ", K " +
                                std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                                ", V " + std::to_string(v.rows()) + "x" +
                                std::to_string(v.cols()));
  }
  if (k.rows() < 1) throw std::invalid_argument("attention needs at least one key");
  Matrix logits = (q * k.transpose()) / std::sqrt(static_cast<double>(q.cols()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return logits * v;
}

Matrix layer_norm(const Matrix& x, const RowVector& gamma, const RowVector& beta) {
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double mean = row.sum() / n;
    const double var = (row.array() - mean).square().sum() / n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.row(i) = ((row.array() - mean) * inv * gamma.array() + beta.array()).matrix();
  }
  return out;
}

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

RowVector patch_pixels(const Frame& frame, const GridSpec& grid, int token) {
  const int s = grid.region_size();
  const BBox box = grid.region_box(token);
  RowVector p(s * s * 3);
  int k = 0;
  for (int y = box.y1; y < box.y2; ++y) {
    const std::uint8_t* px = frame.pixel(box.x1, y);
    for (int i = 0; i < s * 3; ++i) p[k++] = px[i] / 255.0 - 0.5;
  }
  return p;
}

TokenSet patch_embed(const Frame& frame, const RegionMask& mask, const VitModel& model,
                     OpTrace* trace) {
  const ModelConfig& c = model.config;
  if (frame.width != c.grid.width() || frame.height != c.grid.height()) {
    throw std::invalid_argument("frame is " + std::to_string(frame.width) + "x" +
                                std::to_string(frame.height) + ", model expects " +
                                std::to_string(c.grid.width()) + "x" +
                                std::to_string(c.grid.height()));
  }
  if (!(mask.spec() == c.grid)) throw std::invalid_argument("mask grid does not match the model");

  TokenSet out;
  out.locations = mask.locations();
  const auto n = static_cast<Eigen::Index>(out.locations.size());
  Matrix pixels(n, c.patch_dim());
  for (Eigen::Index i = 0; i < n; ++i) pixels.row(i) = patch_pixels(frame, c.grid, out.locations[i]);
  if (trace) trace->add(OpKind::kPatchEmbed, "patch_embed", macs(n, c.patch_dim(), c.embed_dim));
  out.embeddings = pixels * model.patch_weight;
  out.embeddings.rowwise() += model.patch_bias;
  for (Eigen::Index i = 0; i < n; ++i) out.embeddings.row(i) += model.pos_embed.row(out.locations[i]);
  return out;
}

TokenSet msa_block_global(const TokenSet& tokens, const BlockWeights& weights,
                          const ModelConfig& config, OpTrace* trace) {
  return global_block(tokens, weights, config, 0, trace);
}

Matrix wmsa_block_dense(const Matrix& x, const BlockWeights& weights, const ModelConfig& config,
                        OpTrace* trace) {
  if (x.rows() != config.tokens()) throw std::invalid_argument("windowed block needs all N tokens");
  const Matrix y = attention_sublayer(x, window_groups(config), weights, config, 0, trace);
  return ffn_sublayer(y, weights, 0, trace);
}

namespace {

Matrix windowed_block(const Matrix& x, const BlockWeights& w, const ModelConfig& config, int block,
                      OpTrace* trace) {
  const Matrix y = attention_sublayer(x, window_groups(config), w, config, block, trace);
  return ffn_sublayer(y, w, block, trace);
}

MaskedBlockOutput masked_windowed_block(const TokenSet& tokens, const Matrix& reference,
                                        const BlockWeights& w, const ModelConfig& config,
                                        int block, OpTrace* trace) {
  if (reference.rows() != config.tokens() || reference.cols() != config.embed_dim) {
    throw std::invalid_argument("reference tensor must be N x L");
  }
  MaskedBlockOutput out;
  out.reference = scatter(tokens, reference);
  if (trace) trace->add(OpKind::kScatter, block_label(block, "scatter"));
  const Matrix attended = attention_sublayer(out.reference, window_groups(config), w, config,
                                             block, trace);
  // The FFN is per-token, so applying it after the gather yields the same
  // rows as running it over the full tensor.
  TokenSet gathered = gather(attended, tokens.locations);
  if (trace) trace->add(OpKind::kGather, block_label(block, "gather"));
  if (gathered.size() > 0) gathered.embeddings = ffn_sublayer(gathered.embeddings, w, block, trace);
  out.tokens = std::move(gathered);
  return out;
}

}  // namespace

MaskedBlockOutput wmsa_block_masked(const TokenSet& tokens, const Matrix& reference,
                                    const BlockWeights& weights, const ModelConfig& config,
                                    OpTrace* trace) {
  return masked_windowed_block(tokens, reference, weights, config, 0, trace);
}

Matrix forward_dense(const Frame& frame, const VitModel& model, ReferenceState& state,
                     std::int64_t frame_index, OpTrace* trace) {
  const ModelConfig& c = model.config;
  TokenSet tokens = patch_embed(frame, RegionMask::all(c.grid), model, trace);
  Matrix x = std::move(tokens.embeddings);

  std::vector<Matrix> block_inputs;
  block_inputs.reserve(static_cast<std::size_t>(c.num_windowed()));
  for (int b = 0; b < c.num_blocks; ++b) {
    const BlockWeights& w = model.blocks[static_cast<std::size_t>(b)];
    if (c.is_global(b)) {
      const Matrix y = attention_sublayer(x, global_group(x.rows()), w, c, b, trace);
      x = ffn_sublayer(y, w, b, trace);
    } else {
      block_inputs.push_back(x);
      x = windowed_block(x, w, c, b, trace);
    }
  }

  state.block_inputs = std::move(block_inputs);
  state.reference_output = x;
  state.last_full_frame = frame_index;
  if (trace) {
    trace->masked = false;
    trace->tokens_processed = c.tokens();
    trace->reference_bytes = state.buffer_bytes();
  }
  return x;
}

Matrix forward_masked(const Frame& frame, const RegionMask& mask, const VitModel& model,
                      ReferenceState& state, OpTrace* trace) {
  const ModelConfig& c = model.config;
  if (!state.initialized()) throw StateError("masked frame before any full frame");
  if (state.block_inputs.size() != static_cast<std::size_t>(c.num_windowed())) {
    throw StateError("reference state does not match the model");
  }

  if (trace) {
    trace->masked = true;
    trace->tokens_processed = mask.keep_count();
  }
  if (mask.keep_count() == 0) {
    if (!(mask.spec() == c.grid)) throw std::invalid_argument("mask grid does not match the model");
    if (trace) trace->reference_bytes = state.buffer_bytes();
    return state.reference_output;
  }

  // Patch selection is the input gather.
  TokenSet tokens = patch_embed(frame, mask, model, trace);
  if (trace) trace->add(OpKind::kGather, "input.gather");

  std::size_t windowed = 0;
  for (int b = 0; b < c.num_blocks; ++b) {
    check_block_index(c, b);
    const BlockWeights& w = model.blocks[static_cast<std::size_t>(b)];
    if (c.is_global(b)) {
      tokens = global_block(tokens, w, c, b, trace);
    } else {
      MaskedBlockOutput r = masked_windowed_block(tokens, state.block_inputs[windowed], w, c, b, trace);
      state.block_inputs[windowed] = std::move(r.reference);
      tokens = std::move(r.tokens);
      ++windowed;
    }
  }

  scatter_into(tokens, state.reference_output);
  if (trace) {
    trace->add(OpKind::kScatter, "output.scatter");
    trace->reference_bytes = state.buffer_bytes();
  }
  return state.reference_output;
}

}  // namespace maskvd
