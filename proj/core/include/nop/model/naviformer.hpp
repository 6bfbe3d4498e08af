#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nop/autodiff/parameters.hpp"
#include "nop/env.hpp"
#include "nop/instance.hpp"
#include "nop/local_maps.hpp"
#include "nop/model/layers.hpp"
#include "nop/rng.hpp"

namespace nop::model {

struct ModelConfig {
  int hidden = 128;
  int heads = 8;
  int blocks = 3;
  int ff_hidden = 512;
  double tanh_clip = 10.0;
  /// Nearest-obstacle clearances fed to the state embedding (zero padded).
  int obstacle_features = 20;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int direction_hidden = 64;
  LocalMapConfig maps{};

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Encoder output plus per-instance projections reused by every decoding
/// step of an episode.
template <typename T>
struct GraphEmbedding {
  Tensor<T> nodes;   // [n+2, hidden]
  Tensor<T> pooled;  // [hidden], mean of node rows

  typename MultiHeadAttention<T>::KeyValues glimpse_kv;
  Tensor<T> pointer_keys;   // [n+2, hidden]
  Tensor<T> pooled_context; // projection of `pooled` added to every state embedding
};

enum class DecodeMode { Sample, Greedy };

template <typename T>
struct PolicyStep {
  int goal = 0;
  int direction = 0;
  Tensor<T> goal_log_probs;       // [n+2]; -inf at masked nodes
  Tensor<T> direction_log_probs;  // [8]
  Tensor<T> log_prob;             // scalar: log pi(goal) + log pi(direction)
  LocalMaps maps;
};

/// Encoder-decoder policy: combined node/obstacle attention encoder,
/// masked pointer decoder for the next goal, convolutional direction head
/// over local maps, and a critic on the pooled graph embedding.
///
/// Forward passes only read the weights, so one model can serve several
/// threads as long as no thread updates it concurrently.
template <typename T>
class NaviFormer {
 public:
  NaviFormer(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ad::ParameterSet<T>& parameters() { return params_; }
  const ad::ParameterSet<T>& parameters() const { return params_; }

  /// Throws std::invalid_argument for instances without obstacles.
  GraphEmbedding<T> encode(const NopInstance& inst) const;

  /// [hidden] embedding of position, remaining time, obstacle clearances
  /// and the previous goal, plus the pooled graph context.
  Tensor<T> embed_state(const AgentState& state, const NopInstance& inst, const GraphEmbedding<T>& g) const;

  /// Log-probabilities over all n+2 nodes; nodes marked in `visited` get
  /// -inf. The end depot is never masked. Throws std::logic_error if every
  /// node would be masked.
  Tensor<T> decode_goal(const Tensor<T>& state_embedding, const GraphEmbedding<T>& g,
                        std::span<const std::uint8_t> visited) const;

  /// Log-probabilities over the 8 directions.
  Tensor<T> decode_direction(const LocalMaps& maps) const;

  /// Scalar baseline value of the instance.
  Tensor<T> critic_value(const GraphEmbedding<T>& g) const;

  PolicyStep<T> act(const AgentState& state, const NopInstance& inst, const GraphEmbedding<T>& g,
                    DecodeMode mode, Rng& rng) const;

  /// Overwrites this model's weights with `other`'s (same config).
  void copy_weights_from(const NaviFormer& other);

  std::string manifest() const;

 private:
  struct Block {
    MultiHeadAttention<T> node_self, node_obs, obs_node, obs_self, node_mix, obs_mix;
    LayerNorm<T> n11, n12, n21, n22, n1, n2, n_node_ff, n_obs_ff;
    FeedForward<T> node_ff, obs_ff;
    bool last = false;
  };

  Tensor<T> node_features(const NopInstance& inst) const;
  Tensor<T> obstacle_features(const NopInstance& inst) const;

  ModelConfig cfg_;
  ad::ParameterSet<T> params_;
  Linear<T> node_in_, obs_in_;
  std::vector<Block> blocks_;
  Linear<T> state_in_, context_in_;
  MultiHeadAttention<T> glimpse_;
  Linear<T> pointer_q_, pointer_k_;
  Tensor<T> conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  Linear<T> dir_hidden_, dir_out_;
  Linear<T> critic_hidden_, critic_out_;
};

/// Index drawn from a log-probability vector, or its argmax (lowest index
/// on ties) in greedy mode.
int choose_action(std::span<const double> log_probs, DecodeMode mode, Rng& rng);

}  // namespace nop::model
