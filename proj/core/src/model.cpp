#include "cognate/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cognate/rng.hpp"

namespace cognate {

using ag::Var;

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("ModelConfig.") + name + " must be >= 1");
  };
  positive(hidden_size, "hidden_size");
  positive(intermediate_size, "intermediate_size");
  positive(attention_heads, "attention_heads");
  positive(pair_projection_size, "pair_projection_size");
  positive(vocab_size, "vocab_size");
  positive(max_rows, "max_rows");
  positive(max_cols, "max_cols");
  if (msa_layers < 0) throw std::invalid_argument("ModelConfig.msa_layers must be >= 0");
  if (pair_layers < 0) throw std::invalid_argument("ModelConfig.pair_layers must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("ModelConfig.dropout must be in [0, 1)");
  if (hidden_size % attention_heads != 0)
    throw std::invalid_argument("ModelConfig.hidden_size must be divisible by attention_heads");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"hidden_size", hidden_size},
          {"intermediate_size", intermediate_size},
          {"msa_layers", msa_layers},
          {"pair_layers", pair_layers},
          {"attention_heads", attention_heads},
          {"pair_projection_size", pair_projection_size},
          {"vocab_size", vocab_size},
          {"max_rows", max_rows},
          {"max_cols", max_cols},
          {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden_size = j.at("hidden_size").get<int>();
  c.intermediate_size = j.at("intermediate_size").get<int>();
  c.msa_layers = j.at("msa_layers").get<int>();
  c.pair_layers = j.at("pair_layers").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.pair_projection_size = j.at("pair_projection_size").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_rows = j.at("max_rows").get<int>();
  c.max_cols = j.at("max_cols").get<int>();
  c.dropout = j.value("dropout", 0.0);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// parameters

std::vector<std::pair<std::string, ag::Shape>> ParameterStore::layout(const ModelConfig& config) {
  config.validate();
  const int d = config.hidden_size, inter = config.intermediate_size;
  const int p = config.pair_projection_size, heads = config.attention_heads;
  std::vector<std::pair<std::string, ag::Shape>> out;
  auto add = [&](std::string name, ag::Shape shape) { out.emplace_back(std::move(name), std::move(shape)); };
  auto norm = [&](const std::string& prefix, int n) {
    add(prefix + ".gamma", {n});
    add(prefix + ".beta", {n});
  };
  auto dense = [&](const std::string& prefix, int in, int o, bool bias = true) {
    add(prefix + ".w", {in, o});
    if (bias) add(prefix + ".b", {o});
  };
  auto attention_block = [&](const std::string& prefix) {
    norm(prefix + ".ln", d);
    dense(prefix + ".q", d, d, false);
    dense(prefix + ".k", d, d, false);
    dense(prefix + ".v", d, d, false);
    dense(prefix + ".o", d, d);
  };
  auto feed_forward = [&](const std::string& prefix) {
    norm(prefix + ".ln", d);
    dense(prefix + ".fc1", d, inter);
    dense(prefix + ".fc2", inter, d);
  };

  add("embed.token", {config.vocab_size, d});
  add("embed.position", {config.max_cols, d});
  for (int l = 0; l < config.msa_layers; ++l) {
    const std::string base = "msa." + std::to_string(l);
    attention_block(base + ".row_attention");
    attention_block(base + ".column_attention");
    feed_forward(base + ".ffn");
  }
  norm("opm.ln", d);
  dense("opm.a", d, p);
  dense("opm.b", d, p);
  dense("opm.out", p * p, d);
  for (int l = 0; l < config.pair_layers; ++l) {
    const std::string base = "pair." + std::to_string(l);
    for (const char* name : {".tri_mul_out", ".tri_mul_in"}) {
      const std::string pre = base + name;
      norm(pre + ".ln_in", d);
      dense(pre + ".left", d, p);
      dense(pre + ".left_gate", d, p);
      dense(pre + ".right", d, p);
      dense(pre + ".right_gate", d, p);
      norm(pre + ".ln_out", p);
      dense(pre + ".out", p, d);
      dense(pre + ".gate", d, d);
    }
    for (const char* name : {".tri_att_start", ".tri_att_end"}) {
      const std::string pre = base + name;
      attention_block(pre);
      dense(pre + ".bias", d, heads, false);
    }
    feed_forward(base + ".transition");
  }
  norm("head.ln", d);
  dense("head.out", d, 2);
  return out;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

ParameterStore ParameterStore::initialize(const ModelConfig& config, std::uint64_t seed) {
  ParameterStore store;
  Rng rng(seed);
  for (auto& [name, shape] : layout(config)) {
    std::vector<double> data(ag::numel(shape), 0.0);
    if (name.starts_with("embed.")) {
      for (auto& v : data) v = rng.normal();
    } else if (ends_with(name, ".w")) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (auto& v : data) v = sd * rng.normal();
    } else if (ends_with(name, ".gamma")) {
      std::fill(data.begin(), data.end(), 1.0);
    }
    store.add(name, shape, std::move(data));
  }
  return store;
}

void ParameterStore::add(std::string name, ag::Shape shape, std::vector<double> data) {
  if (data.size() != ag::numel(shape)) throw std::invalid_argument("parameter " + name + ": data does not match shape");
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(shape), std::move(data)});
}

bool ParameterStore::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParameterStore::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return it->second;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.data.size();
  return n;
}

bool ParameterStore::operator==(const ParameterStore& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = o.entries_[i];
    if (a.name != b.name || a.shape != b.shape || a.data != b.data) return false;
  }
  return true;
}

BoundParams::BoundParams(const ParameterStore& store, ag::Tape& tape)
    : store_(store), tape_(tape), vars_(store.size()) {}

Var BoundParams::operator()(std::string_view name) {
  const std::size_t i = store_.index_of(name);
  if (!vars_[i].valid()) {
    const auto& e = store_.entries()[i];
    vars_[i] = tape_.leaf(e.shape, e.data);
  }
  return vars_[i];
}

void BoundParams::enable_dropout(double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  dropout_ = rate;
  dropout_rng_ = Rng(seed);
}

Var BoundParams::dropout(Var x) {
  if (dropout_ == 0.0) return x;
  const double keep = 1.0 - dropout_;
  std::vector<double> mask(x.value().size());
  for (auto& m : mask) m = dropout_rng_.uniform() < keep ? 1.0 / keep : 0.0;
  return ag::mul(x, tape_.constant(x.shape(), std::move(mask)));
}

std::vector<std::vector<double>> BoundParams::gradients() const {
  std::vector<std::vector<double>> out(store_.size());
  for (std::size_t i = 0; i < store_.size(); ++i) {
    if (vars_[i].valid()) {
      const auto g = vars_[i].grad();
      out[i].assign(g.begin(), g.end());
    } else {
      out[i].assign(store_.entries()[i].data.size(), 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// building blocks

namespace {

std::string join(std::string_view prefix, std::string_view leaf) {
  std::string s(prefix);
  s += '.';
  s += leaf;
  return s;
}

Var norm(Var x, BoundParams& p, std::string_view prefix) {
  return ag::layer_norm(x, p(join(prefix, "gamma")), p(join(prefix, "beta")));
}

Var dense(Var x, BoundParams& p, std::string_view prefix, bool bias = true) {
  return ag::linear(x, p(join(prefix, "w")), bias ? p(join(prefix, "b")) : Var{});
}

// h: [G, N, d]; the mask flags keys within each group.
Var self_attention(Var h, std::span<const std::uint8_t> mask, BoundParams& p, std::string_view prefix,
                   int heads, Var bias = {}) {
  Var q = dense(h, p, join(prefix, "q"), false);
  Var k = dense(h, p, join(prefix, "k"), false);
  Var v = dense(h, p, join(prefix, "v"), false);
  return dense(ag::attention(q, k, v, bias, mask, heads), p, join(prefix, "o"));
}

Var feed_forward(Var x, std::span<const std::uint8_t> mask, BoundParams& p, std::string_view prefix) {
  Var h = norm(x, p, join(prefix, "ln"));
  Var o = p.dropout(dense(ag::gelu(dense(h, p, join(prefix, "fc1"))), p, join(prefix, "fc2")));
  return ag::add(x, ag::mask_vectors(o, mask));
}

std::vector<std::uint8_t> transpose_mask(const std::vector<std::uint8_t>& m, int rows, int cols) {
  std::vector<std::uint8_t> t(m.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t[static_cast<std::size_t>(j) * rows + i] = m[static_cast<std::size_t>(i) * cols + j];
  return t;
}

}  // namespace

std::vector<std::uint8_t> PairRepresentation::pair_mask() const {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(rows) * rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < rows; ++j) m[static_cast<std::size_t>(i) * rows + j] = row_mask[i] && row_mask[j];
  return m;
}

MsaActivation embed(const TokenGrid& tokens, BoundParams& params, const ModelConfig& config) {
  const int r = static_cast<int>(tokens.rows), c = static_cast<int>(tokens.cols);
  if (r < 1 || c < 1) throw std::invalid_argument("embed: empty token grid");
  if (r > config.max_rows || c > config.max_cols)
    throw std::invalid_argument("embed: grid " + std::to_string(r) + "x" + std::to_string(c) +
                                " exceeds " + std::to_string(config.max_rows) + "x" +
                                std::to_string(config.max_cols));
  MsaActivation out;
  out.rows = r;
  out.cols = c;
  out.token_mask.resize(tokens.ids.size());
  out.row_mask.assign(static_cast<std::size_t>(r), 0);
  std::vector<std::int32_t> positions(tokens.ids.size());
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < c; ++k) {
      const std::size_t at = static_cast<std::size_t>(i) * c + k;
      const std::int32_t id = tokens.ids[at];
      if (id < 0 || id >= config.vocab_size)
        throw std::invalid_argument("embed: token id " + std::to_string(id) + " outside vocabulary");
      out.token_mask[at] = id != Vocabulary::kPad;
      out.row_mask[i] = out.row_mask[i] || out.token_mask[at];
      positions[at] = k;
    }
  }
  Var tok = ag::embedding(params("embed.token"), tokens.ids, {r, c});
  Var pos = ag::embedding(params("embed.position"), positions, {r, c});
  out.x = ag::mask_vectors(ag::add(tok, pos), out.token_mask);
  return out;
}

MsaActivation msa_layer(const MsaActivation& in, BoundParams& params, const ModelConfig& config, int layer) {
  const std::string base = "msa." + std::to_string(layer);
  const int heads = config.attention_heads;
  MsaActivation out = in;
  Var x = in.x;

  // Row attention: each row attends across its own columns.
  {
    const std::string pre = base + ".row_attention";
    Var h = norm(x, params, pre + ".ln");
    Var o = params.dropout(self_attention(h, in.token_mask, params, pre, heads));
    x = ag::add(x, ag::mask_vectors(o, in.token_mask));
  }
  // Column attention: each column attends across rows.
  {
    const std::string pre = base + ".column_attention";
    const auto col_mask = transpose_mask(in.token_mask, in.rows, in.cols);
    Var h = ag::permute(norm(x, params, pre + ".ln"), {1, 0, 2});
    Var o = params.dropout(ag::permute(self_attention(h, col_mask, params, pre, heads), {1, 0, 2}));
    x = ag::add(x, ag::mask_vectors(o, in.token_mask));
  }
  out.x = feed_forward(x, in.token_mask, params, base + ".ffn");
  return out;
}

PairRepresentation outer_product_mean(const MsaActivation& x, BoundParams& params, const ModelConfig&) {
  Var h = norm(x.x, params, "opm.ln");
  Var a = dense(h, params, "opm.a");
  Var b = dense(h, params, "opm.b");
  Var o = ag::outer_product_mean(a, b, x.token_mask);
  PairRepresentation out;
  out.rows = x.rows;
  out.row_mask = x.row_mask;
  out.z = ag::mask_vectors(dense(o, params, "opm.out"), out.pair_mask());
  return out;
}

PairRepresentation triangular_multiplication(const PairRepresentation& z, ag::TriangleDirection direction,
                                             BoundParams& params, std::string_view prefix) {
  const auto mask = z.pair_mask();
  Var h = norm(z.z, params, join(prefix, "ln_in"));
  auto edge = [&](const char* side, const char* gate) {
    Var feat = ag::mul(ag::sigmoid(dense(h, params, join(prefix, gate))), dense(h, params, join(prefix, side)));
    return ag::mask_vectors(feat, mask);
  };
  Var left = edge("left", "left_gate");
  Var right = edge("right", "right_gate");
  Var u = norm(ag::triangle_product(left, right, direction), params, join(prefix, "ln_out"));
  Var update = params.dropout(
      ag::mul(ag::sigmoid(dense(h, params, join(prefix, "gate"))), dense(u, params, join(prefix, "out"))));
  PairRepresentation out = z;
  out.z = ag::add(z.z, ag::mask_vectors(update, mask));
  return out;
}

PairRepresentation triangular_attention(const PairRepresentation& z, TriangleOrientation orientation,
                                        BoundParams& params, const ModelConfig& config,
                                        std::string_view prefix) {
  const bool ending = orientation == TriangleOrientation::ending_node;
  const auto mask = z.pair_mask();  // symmetric, so valid for the transposed layout too
  Var zz = ending ? ag::permute(z.z, {1, 0, 2}) : z.z;
  Var h = norm(zz, params, join(prefix, "ln"));
  // bias[head, j, k] comes from the (j, k) edge.
  Var bias = ag::permute(dense(h, params, join(prefix, "bias"), false), {2, 0, 1});
  Var o = ag::mask_vectors(self_attention(h, mask, params, prefix, config.attention_heads, bias), mask);
  if (ending) o = ag::permute(o, {1, 0, 2});
  PairRepresentation out = z;
  out.z = ag::add(z.z, params.dropout(o));
  return out;
}

PairRepresentation pair_layer(const PairRepresentation& z, BoundParams& params, const ModelConfig& config,
                              int layer) {
  const std::string base = "pair." + std::to_string(layer);
  PairRepresentation y = triangular_multiplication(z, ag::TriangleDirection::outgoing, params, base + ".tri_mul_out");
  y = triangular_multiplication(y, ag::TriangleDirection::incoming, params, base + ".tri_mul_in");
  y = triangular_attention(y, TriangleOrientation::starting_node, params, config, base + ".tri_att_start");
  y = triangular_attention(y, TriangleOrientation::ending_node, params, config, base + ".tri_att_end");
  y.z = feed_forward(y.z, y.pair_mask(), params, base + ".transition");
  return y;
}

Var link_logits(const PairRepresentation& z, BoundParams& params) {
  return dense(norm(z.z, params, "head.ln"), params, "head.out");
}

LinkProbabilities link_probabilities(Var logits, const std::vector<std::uint8_t>& row_mask) {
  const int r = static_cast<int>(row_mask.size());
  const auto l = logits.value();
  if (l.size() != static_cast<std::size_t>(r) * r * 2)
    throw std::invalid_argument("link_probabilities: logits do not match row mask");
  std::vector<double> raw(static_cast<std::size_t>(r) * r);
  for (std::size_t e = 0; e < raw.size(); ++e) raw[e] = 1.0 / (1.0 + std::exp(l[2 * e] - l[2 * e + 1]));
  LinkProbabilities out;
  out.rows = r;
  out.p.assign(raw.size(), 0.0);
  for (int i = 0; i < r; ++i) {
    if (!row_mask[i]) continue;
    for (int j = 0; j < r; ++j) {
      if (!row_mask[j]) continue;
      const std::size_t ij = static_cast<std::size_t>(i) * r + j, ji = static_cast<std::size_t>(j) * r + i;
      out.p[ij] = i == j ? 1.0 : (raw[ij] + raw[ji]) / 2.0;
    }
  }
  return out;
}

LinkProbabilities classify_links(const PairRepresentation& z, BoundParams& params) {
  return link_probabilities(link_logits(z, params), z.row_mask);
}

ForwardOutput forward(const TokenGrid& tokens, BoundParams& params, const ModelConfig& config) {
  ForwardOutput out;
  if (tokens.rows == 0) return out;
  MsaActivation x = embed(tokens, params, config);
  for (int l = 0; l < config.msa_layers; ++l) x = msa_layer(x, params, config, l);
  PairRepresentation z = outer_product_mean(x, params, config);
  for (int l = 0; l < config.pair_layers; ++l) z = pair_layer(z, params, config, l);
  out.logits = link_logits(z, params);
  out.row_mask = z.row_mask;
  out.probabilities = link_probabilities(out.logits, z.row_mask);
  return out;
}

LinkProbabilities predict_links(const TokenGrid& tokens, const ParameterStore& params, const ModelConfig& config) {
  ag::Tape tape(false);
  BoundParams bound(params, tape);
  return forward(tokens, bound, config).probabilities;
}

}  // namespace cognate
