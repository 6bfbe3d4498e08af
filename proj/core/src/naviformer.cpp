#include "nop/model/naviformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"
#include <stdexcept>

#include "nop/autodiff/ops.hpp"

namespace nop::model {

void ModelConfig::validate() const {
  if (hidden <= 0 || heads <= 0 || hidden % heads != 0) {
    throw std::invalid_argument("hidden size must be a positive multiple of heads");
  }
  if (blocks < 1) throw std::invalid_argument("encoder needs at least one block");
  if (ff_hidden < 1 || obstacle_features < 0 || conv1_channels < 1 || conv2_channels < 1 ||
      direction_hidden < 1) {
    throw std::invalid_argument("layer sizes must be positive");
  }
  if (maps.size < 4 || maps.size % 4 != 0) throw std::invalid_argument("local map size must be a multiple of 4");
  if (!(tanh_clip > 0.0)) throw std::invalid_argument("tanh clip must be positive");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["hidden"] = hidden;
  j["heads"] = heads;
  j["blocks"] = blocks;
  j["ff_hidden"] = ff_hidden;
  j["tanh_clip"] = tanh_clip;
  j["obstacle_features"] = obstacle_features;
  j["conv1_channels"] = conv1_channels;
  j["conv2_channels"] = conv2_channels;
  j["direction_hidden"] = direction_hidden;
  j["map_size"] = maps.size;
  j["map_window"] = maps.window;
  j["map_out_of_bounds"] = maps.mark_out_of_bounds;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.hidden = j.at("hidden");
  c.heads = j.at("heads");
  c.blocks = j.at("blocks");
  c.ff_hidden = j.at("ff_hidden");
  c.tanh_clip = j.at("tanh_clip");
  c.obstacle_features = j.at("obstacle_features");
  c.conv1_channels = j.at("conv1_channels");
  c.conv2_channels = j.at("conv2_channels");
  c.direction_hidden = j.at("direction_hidden");
  c.maps.size = j.at("map_size");
  c.maps.window = j.at("map_window");
  c.maps.mark_out_of_bounds = j.value("map_out_of_bounds", false);
  c.validate();
  return c;
}

int choose_action(std::span<const double> log_probs, DecodeMode mode, Rng& rng) {
  if (log_probs.empty()) throw std::invalid_argument("choose_action: empty distribution");
  if (mode == DecodeMode::Greedy) {
    return static_cast<int>(std::max_element(log_probs.begin(), log_probs.end()) - log_probs.begin());
  }
  const double u = rng.uniform();
  double acc = 0.0;
  int last_valid = -1;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const double p = std::exp(log_probs[i]);
    if (p <= 0.0) continue;
    last_valid = static_cast<int>(i);
    acc += p;
    if (u < acc) return last_valid;
  }
  return last_valid;  // rounding left u above the cumulative sum
}

template <typename T>
NaviFormer<T>::NaviFormer(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const auto H = static_cast<std::size_t>(cfg_.hidden);
  const auto heads = static_cast<std::size_t>(cfg_.heads);
  const auto FF = static_cast<std::size_t>(cfg_.ff_hidden);

  node_in_ = Linear<T>(params_, "encoder.node_in", 3, H, rng);
  obs_in_ = Linear<T>(params_, "encoder.obstacle_in", 3, H, rng);
  for (int b = 0; b < cfg_.blocks; ++b) {
    const std::string p = "encoder.block" + std::to_string(b) + ".";
    Block blk;
    blk.last = b + 1 == cfg_.blocks;
    blk.node_self = MultiHeadAttention<T>(params_, p + "node_self", H, heads, rng);
    blk.node_obs = MultiHeadAttention<T>(params_, p + "node_obs", H, heads, rng);
    blk.n11 = LayerNorm<T>(params_, p + "norm11", H);
    blk.n12 = LayerNorm<T>(params_, p + "norm12", H);
    if (!blk.last) {
      blk.obs_node = MultiHeadAttention<T>(params_, p + "obs_node", H, heads, rng);
      blk.obs_self = MultiHeadAttention<T>(params_, p + "obs_self", H, heads, rng);
      blk.n21 = LayerNorm<T>(params_, p + "norm21", H);
      blk.n22 = LayerNorm<T>(params_, p + "norm22", H);
    }
    blk.node_mix = MultiHeadAttention<T>(params_, p + "node_mix", H, heads, rng);
    blk.n1 = LayerNorm<T>(params_, p + "norm1", H);
    blk.node_ff = FeedForward<T>(params_, p + "node_ff", H, FF, rng);
    blk.n_node_ff = LayerNorm<T>(params_, p + "norm_node_ff", H);
    if (!blk.last) {
      blk.obs_mix = MultiHeadAttention<T>(params_, p + "obs_mix", H, heads, rng);
      blk.n2 = LayerNorm<T>(params_, p + "norm2", H);
      blk.obs_ff = FeedForward<T>(params_, p + "obs_ff", H, FF, rng);
      blk.n_obs_ff = LayerNorm<T>(params_, p + "norm_obs_ff", H);
    }
    blocks_.push_back(std::move(blk));
  }

  const auto state_dim = static_cast<std::size_t>(3 + cfg_.obstacle_features) + H;
  state_in_ = Linear<T>(params_, "state.features", state_dim, H, rng);
  context_in_ = Linear<T>(params_, "state.context", H, H, rng);

  glimpse_ = MultiHeadAttention<T>(params_, "decoder.glimpse", H, heads, rng);
  pointer_q_ = Linear<T>(params_, "decoder.pointer_q", H, H, rng, false);
  pointer_k_ = Linear<T>(params_, "decoder.pointer_k", H, H, rng, false);

  const auto C0 = static_cast<std::size_t>(LocalMaps::kChannels);
  const auto C1 = static_cast<std::size_t>(cfg_.conv1_channels);
  const auto C2 = static_cast<std::size_t>(cfg_.conv2_channels);
  conv1_w_ = params_.add("direction.conv1.weight", uniform_init<T>({C1, C0, 3, 3}, C0 * 9, rng));
  conv1_b_ = params_.add("direction.conv1.bias", uniform_init<T>({C1}, C0 * 9, rng));
  conv2_w_ = params_.add("direction.conv2.weight", uniform_init<T>({C2, C1, 3, 3}, C1 * 9, rng));
  conv2_b_ = params_.add("direction.conv2.bias", uniform_init<T>({C2}, C1 * 9, rng));
  const auto quarter = static_cast<std::size_t>(cfg_.maps.size / 4);
  dir_hidden_ = Linear<T>(params_, "direction.dense1", C2 * quarter * quarter,
                          static_cast<std::size_t>(cfg_.direction_hidden), rng);
  dir_out_ = Linear<T>(params_, "direction.dense2", static_cast<std::size_t>(cfg_.direction_hidden),
                       kDirectionCount, rng);

  critic_hidden_ = Linear<T>(params_, "critic.dense1", H, H, rng);
  critic_out_ = Linear<T>(params_, "critic.dense2", H, 1, rng);
}

template <typename T>
Tensor<T> NaviFormer<T>::node_features(const NopInstance& inst) const {
  std::vector<T> v;
  v.reserve(static_cast<std::size_t>(inst.size()) * 3);
  for (int i = 0; i < inst.size(); ++i) {
    const auto& p = inst.nodes()[static_cast<std::size_t>(i)];
    v.push_back(static_cast<T>(p.x));
    v.push_back(static_cast<T>(p.y));
    v.push_back(static_cast<T>(inst.rewards()[static_cast<std::size_t>(i)]));
  }
  return Tensor<T>({static_cast<std::size_t>(inst.size()), 3}, std::move(v));
}

template <typename T>
Tensor<T> NaviFormer<T>::obstacle_features(const NopInstance& inst) const {
  std::vector<T> v;
  for (const auto& o : inst.obstacles()) {
    v.push_back(static_cast<T>(o.center.x));
    v.push_back(static_cast<T>(o.center.y));
    v.push_back(static_cast<T>(o.radius));
  }
  return Tensor<T>({inst.obstacles().size(), 3}, std::move(v));
}

template <typename T>
GraphEmbedding<T> NaviFormer<T>::encode(const NopInstance& inst) const {
  if (inst.obstacles().empty()) {
    throw std::invalid_argument("encode: the encoder requires at least one obstacle");
  }
  Tensor<T> nodes = node_in_(node_features(inst));
  Tensor<T> obs = obs_in_(obstacle_features(inst));
  for (const auto& b : blocks_) {
    Tensor<T> h11 = b.n11(ad::add(nodes, b.node_self(nodes, nodes, nodes)));
    Tensor<T> h12 = b.n12(ad::add(nodes, b.node_obs(nodes, obs, obs)));
    Tensor<T> h1 = b.n1(ad::add(h11, b.node_mix(h11, h12, h12)));
    Tensor<T> next_nodes = b.n_node_ff(ad::add(h1, b.node_ff(h1)));
    if (!b.last) {
      Tensor<T> h21 = b.n21(ad::add(obs, b.obs_node(obs, nodes, nodes)));
      Tensor<T> h22 = b.n22(ad::add(obs, b.obs_self(obs, obs, obs)));
      Tensor<T> h2 = b.n2(ad::add(h22, b.obs_mix(h22, h21, h21)));
      obs = b.n_obs_ff(ad::add(h2, b.obs_ff(h2)));
    }
    nodes = next_nodes;
  }
  GraphEmbedding<T> g;
  g.nodes = nodes;
  g.pooled = ad::mean(nodes, 0);
  g.glimpse_kv = glimpse_.project(nodes, nodes);
  g.pointer_keys = pointer_k_(nodes);
  g.pooled_context = context_in_(g.pooled);
  return g;
}

template <typename T>
Tensor<T> NaviFormer<T>::embed_state(const AgentState& state, const NopInstance& inst,
                                     const GraphEmbedding<T>& g) const {
  const auto K = static_cast<std::size_t>(cfg_.obstacle_features);
  std::vector<double> clearance;
  clearance.reserve(inst.obstacles().size());
  for (const auto& o : inst.obstacles()) clearance.push_back(distance(state.position, o.center) - o.radius);
  std::sort(clearance.begin(), clearance.end());

  std::vector<T> f(3 + K, T(0));
  f[0] = static_cast<T>(state.position.x);
  f[1] = static_cast<T>(state.position.y);
  f[2] = static_cast<T>(inst.max_steps() > 0 ? static_cast<double>(state.steps_left) / inst.max_steps() : 0.0);
  for (std::size_t k = 0; k < K && k < clearance.size(); ++k) f[3 + k] = static_cast<T>(clearance[k]);

  const int last = state.last_goal;
  Tensor<T> prev = ad::reshape(ad::gather_rows(g.nodes, std::span<const int>(&last, 1)), {g.nodes.dim(1)});
  Tensor<T> features = ad::concat<T>({Tensor<T>({3 + K}, std::move(f)), prev}, 0);
  return ad::add(state_in_(features), g.pooled_context);
}

template <typename T>
Tensor<T> NaviFormer<T>::decode_goal(const Tensor<T>& state_embedding, const GraphEmbedding<T>& g,
                                     std::span<const std::uint8_t> visited) const {
  const std::size_t n = g.nodes.dim(0);
  if (visited.size() != n) {
    throw ad::ShapeError("decode_goal: visited mask has " + std::to_string(visited.size()) +
                         " entries for " + std::to_string(n) + " nodes");
  }
  std::vector<std::uint8_t> mask(visited.begin(), visited.end());
  if (!mask.empty()) mask.back() = 0;  // the end depot is always selectable

  const auto H = static_cast<std::size_t>(cfg_.hidden);
  Tensor<T> query = ad::reshape(state_embedding, {1, H});
  Tensor<T> glimpse = glimpse_.attend(query, g.glimpse_kv, mask);  // [1, H]
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(H)));
  Tensor<T> compat = ad::scale(ad::matmul(pointer_q_(glimpse), g.pointer_keys, true), inv_sqrt);  // [1, n]
  Tensor<T> logits = ad::scale(ad::tanh(compat), static_cast<T>(cfg_.tanh_clip));
  logits = ad::masked_fill(logits, mask, ad::Shape{n}, -std::numeric_limits<T>::infinity());
  return ad::reshape(ad::log_softmax(logits), {n});
}

template <typename T>
Tensor<T> NaviFormer<T>::decode_direction(const LocalMaps& maps) const {
  if (maps.size != cfg_.maps.size) {
    throw ad::ShapeError("decode_direction: map size " + std::to_string(maps.size) + " but model expects " +
                         std::to_string(cfg_.maps.size));
  }
  const auto S = static_cast<std::size_t>(maps.size);
  Tensor<T> x({static_cast<std::size_t>(LocalMaps::kChannels), S, S});
  maps.fill_channels<T>(x.values_mut());
  Tensor<T> h = ad::relu(ad::conv2d(x, conv1_w_, conv1_b_, 2, 1));
  h = ad::relu(ad::conv2d(h, conv2_w_, conv2_b_, 2, 1));
  h = ad::reshape(h, {h.numel()});
  h = ad::relu(dir_hidden_(h));
  return ad::log_softmax(dir_out_(h));
}

template <typename T>
Tensor<T> NaviFormer<T>::critic_value(const GraphEmbedding<T>& g) const {
  return ad::reshape(critic_out_(ad::relu(critic_hidden_(g.pooled))), {});
}

template <typename T>
PolicyStep<T> NaviFormer<T>::act(const AgentState& state, const NopInstance& inst, const GraphEmbedding<T>& g,
                                 DecodeMode mode, Rng& rng) const {
  if (state.done) throw std::logic_error("act: episode already finished");
  PolicyStep<T> out;
  out.goal_log_probs = decode_goal(embed_state(state, inst, g), g, state.visited);
  {
    std::vector<double> lp(out.goal_log_probs.values().begin(), out.goal_log_probs.values().end());
    out.goal = choose_action(lp, mode, rng);
  }
  out.maps = rasterize_local_maps(state.position, inst, out.goal, cfg_.maps);
  out.direction_log_probs = decode_direction(out.maps);
  {
    std::vector<double> lp(out.direction_log_probs.values().begin(), out.direction_log_probs.values().end());
    out.direction = choose_action(lp, mode, rng);
  }
  out.log_prob = ad::add(ad::pick(out.goal_log_probs, static_cast<std::size_t>(out.goal)),
                         ad::pick(out.direction_log_probs, static_cast<std::size_t>(out.direction)));
  return out;
}

template <typename T>
void NaviFormer<T>::copy_weights_from(const NaviFormer& other) {
  if (other.cfg_ != cfg_) throw std::invalid_argument("copy_weights_from: config mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto src = other.params_[i].values();
    auto dst = params_[i].values_mut();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

template <typename T>
std::string NaviFormer<T>::manifest() const {
  nlohmann::ordered_json j;
  j["format"] = "naviformer";
  j["config"] = nlohmann::json::parse(cfg_.to_json());
  return j.dump();
}

template class NaviFormer<float>;
template class NaviFormer<double>;

}  // namespace nop::model
