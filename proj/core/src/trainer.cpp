#include "nop/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nop/autodiff/checkpoint.hpp"
#include "nop/autodiff/ops.hpp"
#include "nop/parallel.hpp"

namespace nop::train {

namespace fs = std::filesystem;
using model::DecodeMode;

void TrainConfig::validate() const {
  if (batch < 1) throw std::invalid_argument("batch must be at least 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (grad_shards < 1) throw std::invalid_argument("grad_shards must be at least 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint cadence must be non-negative");
  if (pad_to != 0 && pad_to < gen.n_nodes) throw std::invalid_argument("pad_to is smaller than n_nodes");
  gen.validate();
  model.validate();
}

TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.batch = 128;
  cfg.iterations = 2000;
  cfg.gen.n_nodes = 10;
  cfg.gen.obstacles_min = 3;
  cfg.gen.obstacles_max = 6;
  cfg.gen.budget = default_budget(10);
  cfg.model.hidden = 32;
  cfg.model.heads = 4;
  cfg.model.blocks = 2;
  cfg.model.ff_hidden = 64;
  cfg.model.direction_hidden = 32;
  cfg.model.maps.size = 16;
  cfg.model.maps.window = 0.32;
  cfg.lr = 1e-3;
  return cfg;
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << "iteration,mean_reward,success_rate,node_rate,actor_loss,critic_loss,grad_norm,wall_seconds\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f\n", r.iteration, r.mean_reward,
                  r.success_rate, r.node_rate, r.actor_loss, r.critic_loss, r.grad_norm, r.wall_seconds);
    out << buf;
  }
  return out.str();
}

void TrainReport::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_csv();
  if (!f) throw std::runtime_error("write failed: " + path);
}

namespace {

template <typename T>
ad::Tensor<T> entropy(const ad::Tensor<T>& log_probs) {
  // Masked entries hold -inf; zero them before multiplying by p = 0.
  std::vector<std::uint8_t> masked(log_probs.numel());
  for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = std::isinf(log_probs[i]) ? 1 : 0;
  auto safe = ad::masked_fill(log_probs, masked, log_probs.shape(), T(0));
  return ad::scale(ad::sum(ad::mul(ad::softmax(log_probs), safe)), T(-1));
}

template <typename T>
ad::Tensor<T> mean_of(const std::vector<ad::Tensor<T>>& scalars) {
  std::vector<ad::Tensor<T>> parts;
  parts.reserve(scalars.size());
  for (const auto& x : scalars) parts.push_back(ad::reshape(x, {1}));
  return ad::mean(ad::concat<T>(parts, 0), 0);
}

template <typename T>
ad::Tensor<T> sum_of(const std::vector<ad::Tensor<T>>& scalars) {
  std::vector<ad::Tensor<T>> parts;
  parts.reserve(scalars.size());
  for (const auto& x : scalars) parts.push_back(ad::reshape(x, {1}));
  return ad::sum(ad::concat<T>(parts, 0));
}

double node_rate_of(const EpisodeTrace& t, const NopInstance& inst) {
  return t.reward.interior_visited / (inst.interior_count() / 2.0);
}

}  // namespace

std::vector<Rollout> rollout_batch(const Policy& model, const std::vector<NopInstance>& instances,
                                   DecodeMode mode, std::uint64_t seed, const EnvConfig& env,
                                   const RewardConfig& reward) {
  std::vector<Rollout> out(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    const auto& inst = instances[i];
    Rng rng(seed, i);
    const auto g = model.encode(inst);
    Episode ep(inst, env, reward);
    while (!ep.done()) {
      const auto s = model.act(ep.state(), inst, g, mode, rng);
      ep.step(s.goal, s.direction, s.goal_log_probs[static_cast<std::size_t>(s.goal)],
              s.direction_log_probs[static_cast<std::size_t>(s.direction)]);
    }
    out[i].trace = ep.finish();
    out[i].value = model.critic_value(g).item();
  });
  return out;
}

template <typename T>
ActionEvaluation<T> evaluate_actions(const model::NaviFormer<T>& model, const NopInstance& inst,
                                     const EpisodeTrace& trace, const EnvConfig& env) {
  if (trace.steps.empty()) throw std::invalid_argument("evaluate_actions: trace has no steps");
  const auto g = model.encode(inst);
  AgentState state = reset(inst);
  std::vector<ad::Tensor<T>> logps, ents;
  for (const auto& rec : trace.steps) {
    auto goal_lp = model.decode_goal(model.embed_state(state, inst, g), g, state.visited);
    auto maps = rasterize_local_maps(state.position, inst, rec.goal, model.config().maps);
    auto dir_lp = model.decode_direction(maps);
    logps.push_back(ad::add(ad::pick(goal_lp, static_cast<std::size_t>(rec.goal)),
                            ad::pick(dir_lp, static_cast<std::size_t>(rec.direction))));
    ents.push_back(ad::add(entropy(goal_lp), entropy(dir_lp)));
    state = step(state, inst, rec.direction, env);
    state.last_goal = rec.goal;
  }
  ActionEvaluation<T> ev;
  ev.log_prob = sum_of(logps);
  ev.mean_entropy = mean_of(ents);
  ev.value = model.critic_value(g);
  return ev;
}

template struct ActionEvaluation<float>;
template struct ActionEvaluation<double>;
template ActionEvaluation<float> evaluate_actions(const model::NaviFormer<float>&, const NopInstance&,
                                                  const EpisodeTrace&, const EnvConfig&);
template ActionEvaluation<double> evaluate_actions(const model::NaviFormer<double>&, const NopInstance&,
                                                   const EpisodeTrace&, const EnvConfig&);

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  model_ = std::make_unique<Policy>(cfg_.model, stream_key(cfg_.seed, 0x6d6f64656cULL));
  for (int s = 0; s < cfg_.grad_shards; ++s) {
    replicas_.push_back(std::make_unique<Policy>(cfg_.model, 0));
  }
  sync_replicas();
  ad::AdamConfig adam;
  adam.lr = cfg_.lr;
  optim_ = std::make_unique<ad::Adam<float>>(model_->parameters().tensors(), adam);
}

void Trainer::sync_replicas() {
  for (auto& r : replicas_) {
    r->copy_weights_from(*model_);
    r->parameters().zero_grad();
  }
}

std::vector<NopInstance> Trainer::batch_instances(int iteration) const {
  GenConfig gen = cfg_.gen;
  gen.seed = stream_key(cfg_.seed, 0x696e7374ULL);
  auto insts = generate_instances(gen, static_cast<std::size_t>(cfg_.batch),
                                  static_cast<std::uint64_t>(iteration) * static_cast<std::uint64_t>(cfg_.batch));
  if (cfg_.pad_to > 0) {
    for (auto& inst : insts) inst = pad_with_dummies(inst, cfg_.pad_to);
  }
  return insts;
}

void Trainer::apply_gradients(UpdateStats& stats) {
  auto& params = model_->parameters();
  params.zero_grad();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].grad_mut();
    for (const auto& r : replicas_) {
      auto src = r->parameters()[i].grad();
      if (src.empty()) continue;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  stats.grad_norm = ad::clip_grad_norm(params.tensors(), cfg_.max_grad_norm);
  if (!std::isfinite(stats.grad_norm)) return;
  optim_->step();
  sync_replicas();
}

UpdateStats Trainer::update(const std::vector<NopInstance>& instances, const std::vector<EpisodeTrace>& traces) {
  if (instances.empty() || instances.size() != traces.size()) {
    throw std::invalid_argument("update: need one finished trace per instance and a non-empty batch");
  }
  const std::size_t B = instances.size();
  const auto shards = static_cast<std::size_t>(cfg_.grad_shards);

  std::vector<double> values(B), rewards(B);
  for (std::size_t e = 0; e < B; ++e) rewards[e] = traces[e].reward.total;
  // Critic values come from the current weights before any gradient work.
  parallel_for(B, [&](std::size_t e) { values[e] = model_->critic_value(model_->encode(instances[e])).item(); });

  UpdateStats stats;
  stats.advantages.resize(B);
  for (std::size_t e = 0; e < B; ++e) stats.advantages[e] = rewards[e] - values[e];
  if (cfg_.normalize_advantage && B > 1) {
    double mean = 0.0, var = 0.0;
    for (double a : stats.advantages) mean += a;
    mean /= static_cast<double>(B);
    for (double a : stats.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(B)) + 1e-8;
    for (double& a : stats.advantages) a = (a - mean) / sd;
  }

  std::vector<double> actor(B, 0.0), critic(B, 0.0);
  const float inv_b = 1.0f / static_cast<float>(B);
  parallel_for(shards, [&](std::size_t s) {
    const Policy& replica = *replicas_[s];
    for (std::size_t e = s; e < B; e += shards) {
      if (traces[e].steps.empty()) continue;
      ad::Tape<float> tape;
      auto ev = evaluate_actions(replica, instances[e], traces[e], cfg_.env);
      const auto adv = static_cast<float>(stats.advantages[e]);
      auto diff = ad::sub(ev.value, ad::Tensor<float>::scalar(static_cast<float>(rewards[e])));
      auto loss = ad::add(ad::scale(ev.log_prob, -adv * inv_b),
                          ad::scale(ad::mul(diff, diff), static_cast<float>(cfg_.critic_weight) * inv_b));
      if (cfg_.entropy_weight != 0.0) {
        loss = ad::add(loss, ad::scale(ev.mean_entropy, static_cast<float>(-cfg_.entropy_weight) * inv_b));
      }
      tape.backward(loss);
      actor[e] = -stats.advantages[e] * ev.log_prob.item();
      critic[e] = static_cast<double>(diff.item()) * diff.item();
    }
  });
  for (std::size_t e = 0; e < B; ++e) {
    stats.actor_loss += actor[e];
    stats.critic_loss += critic[e];
  }
  stats.actor_loss /= static_cast<double>(B);
  stats.critic_loss /= static_cast<double>(B);
  if (!std::isfinite(stats.actor_loss) || !std::isfinite(stats.critic_loss)) {
    dump_diagnostics("non-finite loss", rewards, values);
    throw TrainingDiverged("non-finite loss at iteration " + std::to_string(iteration_));
  }
  apply_gradients(stats);
  if (!std::isfinite(stats.grad_norm)) {
    dump_diagnostics("non-finite gradient norm", rewards, values);
    throw TrainingDiverged("non-finite gradient at iteration " + std::to_string(iteration_));
  }
  return stats;
}

IterationRecord Trainer::run_iteration() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto instances = batch_instances(iteration_);
  const std::size_t B = instances.size();
  const std::uint64_t action_seed = stream_key(cfg_.seed, 0x1000000ULL + static_cast<std::uint64_t>(iteration_));

  UpdateStats stats;
  std::vector<EpisodeTrace> traces(B);
  if (cfg_.normalize_advantage) {
    // Advantages need the whole batch first, so roll out, then replay.
    auto rolls = rollout_batch(*model_, instances, DecodeMode::Sample, action_seed, cfg_.env, cfg_.reward);
    for (std::size_t e = 0; e < B; ++e) traces[e] = std::move(rolls[e].trace);
    stats = update(instances, traces);
  } else {
    // Single pass: each episode is differentiated as soon as it finishes.
    const auto shards = static_cast<std::size_t>(cfg_.grad_shards);
    std::vector<double> values(B), actor(B), critic(B);
    const float inv_b = 1.0f / static_cast<float>(B);
    parallel_for(shards, [&](std::size_t s) {
      const Policy& replica = *replicas_[s];
      for (std::size_t e = s; e < B; e += shards) {
        const auto& inst = instances[e];
        Rng rng(action_seed, e);
        ad::Tape<float> tape;
        const auto g = replica.encode(inst);
        Episode ep(inst, cfg_.env, cfg_.reward);
        std::vector<ad::Tensor<float>> logps, ents;
        while (!ep.done()) {
          auto st = replica.act(ep.state(), inst, g, DecodeMode::Sample, rng);
          ep.step(st.goal, st.direction, st.goal_log_probs[static_cast<std::size_t>(st.goal)],
                  st.direction_log_probs[static_cast<std::size_t>(st.direction)]);
          logps.push_back(st.log_prob);
          if (cfg_.entropy_weight != 0.0) {
            ents.push_back(ad::add(entropy(st.goal_log_probs), entropy(st.direction_log_probs)));
          }
        }
        traces[e] = ep.finish();
        auto value = replica.critic_value(g);
        values[e] = value.item();
        const double r = traces[e].reward.total;
        const auto adv = static_cast<float>(r - values[e]);
        auto seq_lp = sum_of(logps);
        auto diff = ad::sub(value, ad::Tensor<float>::scalar(static_cast<float>(r)));
        auto loss = ad::add(ad::scale(seq_lp, -adv * inv_b),
                            ad::scale(ad::mul(diff, diff), static_cast<float>(cfg_.critic_weight) * inv_b));
        if (!ents.empty()) {
          loss = ad::add(loss, ad::scale(mean_of(ents), static_cast<float>(-cfg_.entropy_weight) * inv_b));
        }
        tape.backward(loss);
        actor[e] = -static_cast<double>(adv) * seq_lp.item();
        critic[e] = static_cast<double>(diff.item()) * diff.item();
      }
    });
    std::vector<double> rewards(B);
    for (std::size_t e = 0; e < B; ++e) {
      rewards[e] = traces[e].reward.total;
      stats.actor_loss += actor[e];
      stats.critic_loss += critic[e];
    }
    stats.actor_loss /= static_cast<double>(B);
    stats.critic_loss /= static_cast<double>(B);
    if (!std::isfinite(stats.actor_loss) || !std::isfinite(stats.critic_loss)) {
      dump_diagnostics("non-finite loss", rewards, values);
      throw TrainingDiverged("non-finite loss at iteration " + std::to_string(iteration_));
    }
    apply_gradients(stats);
    if (!std::isfinite(stats.grad_norm)) {
      dump_diagnostics("non-finite gradient norm", rewards, values);
      throw TrainingDiverged("non-finite gradient at iteration " + std::to_string(iteration_));
    }
  }

  IterationRecord rec;
  rec.iteration = iteration_;
  for (std::size_t e = 0; e < B; ++e) {
    rec.mean_reward += traces[e].reward.total;
    rec.success_rate += traces[e].success() ? 1.0 : 0.0;
    rec.node_rate += node_rate_of(traces[e], instances[e]);
  }
  rec.mean_reward /= static_cast<double>(B);
  rec.success_rate /= static_cast<double>(B);
  rec.node_rate /= static_cast<double>(B);
  rec.actor_loss = stats.actor_loss;
  rec.critic_loss = stats.critic_loss;
  rec.grad_norm = stats.grad_norm;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ++iteration_;
  return rec;
}

void Trainer::save(const std::string& path) const {
  auto meta = nlohmann::ordered_json::parse(model_->manifest());
  meta["iteration"] = iteration_;
  meta["seed"] = cfg_.seed;
  ad::save_checkpoint(path, model_->parameters(), meta.dump());
}

void Trainer::dump_diagnostics(const std::string& reason, const std::vector<double>& rewards,
                               const std::vector<double>& values) const {
  if (cfg_.out_dir.empty()) return;
  nlohmann::ordered_json j;
  j["reason"] = reason;
  j["iteration"] = iteration_;
  j["rewards"] = rewards;
  j["values"] = values;
  std::vector<std::string> bad;
  const auto& params = model_->parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (float v : params[i].values()) {
      if (!std::isfinite(v)) {
        bad.push_back(params.name(i));
        break;
      }
    }
  }
  j["non_finite_parameters"] = bad;
  std::ofstream f(fs::path(cfg_.out_dir) / "divergence.json");
  f << j.dump(2) << "\n";
}

TrainReport train(const TrainConfig& cfg, const std::function<void(const IterationRecord&)>& on_iteration) {
  Trainer trainer(cfg);
  TrainReport report;
  const bool files = !cfg.out_dir.empty();
  auto ckpt_name = [&](int it) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "checkpoint_%06d.nopckpt", it);
    return (fs::path(cfg.out_dir) / buf).string();
  };
  if (files) {
    fs::create_directories(cfg.out_dir);
    trainer.save(ckpt_name(0));
  }
  for (int it = 0; it < cfg.iterations; ++it) {
    report.records.push_back(trainer.run_iteration());
    if (on_iteration) on_iteration(report.records.back());
    if (files && cfg.checkpoint_every > 0 && trainer.iteration() % cfg.checkpoint_every == 0) {
      trainer.save(ckpt_name(trainer.iteration()));
      report.write_csv((fs::path(cfg.out_dir) / "report.csv").string());
    }
  }
  if (files) {
    trainer.save((fs::path(cfg.out_dir) / "model.nopckpt").string());
    report.write_csv((fs::path(cfg.out_dir) / "report.csv").string());
  }
  return report;
}

Policy load_policy(const std::string& path) {
  const auto ckpt = ad::load_checkpoint(path);
  model::ModelConfig cfg;
  try {
    const auto meta = nlohmann::json::parse(ckpt.metadata);
    cfg = model::ModelConfig::from_json(meta.at("config").dump());
  } catch (const nlohmann::json::exception& e) {
    throw ad::CheckpointError(path + ": checkpoint manifest has no model config (" + e.what() + ")");
  }
  Policy policy(cfg, 0);
  ad::restore_parameters(ckpt, policy.parameters());
  return policy;
}

}  // namespace nop::train
