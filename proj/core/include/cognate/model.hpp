#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cognate/autograd.hpp"
#include "cognate/phonology.hpp"
#include "cognate/rng.hpp"

namespace cognate {

struct ModelConfig {
  int hidden_size = 128;
  int intermediate_size = 128;
  int msa_layers = 2;
  int pair_layers = 2;
  int attention_heads = 2;
  int pair_projection_size = 32;
  int vocab_size = 768;
  int max_rows = 256;
  int max_cols = 256;
  // Applied to every residual branch while training; inference never drops.
  double dropout = 0.1;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

// Named parameter arrays in a fixed order.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    ag::Shape shape;
    std::vector<double> data;
  };

  // Layout derived from the config; weights drawn from `seed`.
  static ParameterStore initialize(const ModelConfig& config, std::uint64_t seed);
  static std::vector<std::pair<std::string, ag::Shape>> layout(const ModelConfig& config);

  void add(std::string name, ag::Shape shape, std::vector<double> data);
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Entry& at(std::string_view name) { return entries_[index_of(name)]; }
  const Entry& at(std::string_view name) const { return entries_[index_of(name)]; }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  bool operator==(const ParameterStore& o) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parameters placed on one tape. Leaves are created on first use.
class BoundParams {
 public:
  BoundParams(const ParameterStore& store, ag::Tape& tape);

  ag::Var operator()(std::string_view name);
  ag::Tape& tape() { return tape_; }

  // Turns on inverted dropout for this tape; masks are drawn from `seed` in
  // call order.
  void enable_dropout(double rate, std::uint64_t seed);
  ag::Var dropout(ag::Var x);
  const ParameterStore& store() const { return store_; }

  // d(loss)/d(param) after tape.backward(), aligned with store.entries();
  // zero for parameters the forward pass never touched.
  std::vector<std::vector<double>> gradients() const;

 private:
  const ParameterStore& store_;
  ag::Tape& tape_;
  std::vector<ag::Var> vars_;
  double dropout_ = 0.0;
  Rng dropout_rng_{0};
};

struct MsaActivation {
  ag::Var x;                             // [r, c', d]
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> token_mask;  // r * c', false at PAD
  std::vector<std::uint8_t> row_mask;    // r, false for all-PAD rows
};

struct PairRepresentation {
  ag::Var z;  // [r, r, d]
  int rows = 0;
  std::vector<std::uint8_t> row_mask;

  std::vector<std::uint8_t> pair_mask() const;
};

struct LinkProbabilities {
  int rows = 0;
  std::vector<double> p;  // r * r, row-major

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * rows + j]; }
};

enum class TriangleOrientation { starting_node, ending_node };

MsaActivation embed(const TokenGrid& tokens, BoundParams& params, const ModelConfig& config);
MsaActivation msa_layer(const MsaActivation& x, BoundParams& params, const ModelConfig& config,
                        int layer);
PairRepresentation outer_product_mean(const MsaActivation& x, BoundParams& params,
                                      const ModelConfig& config);
// `prefix` names the parameter group, e.g. "pair.0.tri_mul_out".
PairRepresentation triangular_multiplication(const PairRepresentation& z, ag::TriangleDirection direction,
                                             BoundParams& params, std::string_view prefix);
PairRepresentation triangular_attention(const PairRepresentation& z, TriangleOrientation orientation,
                                        BoundParams& params, const ModelConfig& config,
                                        std::string_view prefix);
PairRepresentation pair_layer(const PairRepresentation& z, BoundParams& params, const ModelConfig& config,
                              int layer);

// Raw two-class logits [r, r, 2].
ag::Var link_logits(const PairRepresentation& z, BoundParams& params);
// Softmax class 1, symmetrized, unit diagonal, zero for masked rows.
LinkProbabilities link_probabilities(ag::Var logits, const std::vector<std::uint8_t>& row_mask);
LinkProbabilities classify_links(const PairRepresentation& z, BoundParams& params);

struct ForwardOutput {
  ag::Var logits;
  LinkProbabilities probabilities;
  std::vector<std::uint8_t> row_mask;
};

ForwardOutput forward(const TokenGrid& tokens, BoundParams& params, const ModelConfig& config);

// Inference on a non-recording tape.
LinkProbabilities predict_links(const TokenGrid& tokens, const ParameterStore& params,
                                const ModelConfig& config);

}  // namespace cognate
