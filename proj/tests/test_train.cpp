#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "nop/autodiff/checkpoint.hpp"
#include "nop/autodiff/ops.hpp"
#include "nop/train/trainer.hpp"
#include "oracles/reward.hpp"
#include "suites/policy_suites.hpp"

using namespace nop;
using namespace nop::train;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch = 6;
  c.iterations = 3;
  c.lr = 1e-3;
  c.seed = 11;
  c.checkpoint_every = 0;
  c.gen = testing::small_gen(0, 5);
  c.gen.budget = 0.6;
  c.model = testing::micro_model();
  c.grad_shards = 3;
  return c;
}

double mean_logp(const Policy& m, const NopInstance& inst, const EpisodeTrace& t) {
  ad::Tape<float> tape;
  return evaluate_actions(m, inst, t).log_prob.item();
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("config validation") {
  auto c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = tiny_config();
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  const auto d = desk_config();
  CHECK(d.batch == 128);
  CHECK(d.iterations == 2000);
  CHECK(d.gen.n_nodes == 10);
  CHECK(d.gen.obstacles_min == 3);
  CHECK(d.gen.obstacles_max == 6);
  CHECK(d.lr == doctest::Approx(1e-3));
  CHECK(TrainConfig{}.lr == doctest::Approx(1e-4));
  CHECK_FALSE(d.normalize_advantage);
}

TEST_CASE("rollouts finish within the step budget and are reproducible") {
  Policy m(testing::micro_model(), 3);
  const auto insts = generate_instances(testing::small_gen(5), 16);
  const auto a = rollout_batch(m, insts, model::DecodeMode::Sample, 7);
  const auto b = rollout_batch(m, insts, model::DecodeMode::Sample, 7);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].trace.finished());
    CHECK(a[i].trace.steps.size() <= static_cast<std::size_t>(insts[i].max_steps()));
    CHECK(a[i].trace.visit_order == b[i].trace.visit_order);
    CHECK(a[i].trace.reward.total == b[i].trace.reward.total);
  }
}

TEST_CASE("rollouts do not depend on the worker count") {
  Policy m(testing::micro_model(), 3);
  const auto insts = generate_instances(testing::small_gen(6), 9);
  ::setenv("NOP_WORKERS", "1", 1);
  const auto a = rollout_batch(m, insts, model::DecodeMode::Sample, 2);
  ::setenv("NOP_WORKERS", "4", 1);
  const auto b = rollout_batch(m, insts, model::DecodeMode::Sample, 2);
  ::unsetenv("NOP_WORKERS");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].trace.positions == b[i].trace.positions);
}

TEST_CASE("trainer reward equals recomputed reward") {
  Policy m(testing::micro_model(), 4);
  const auto insts = generate_instances(testing::small_gen(7), 40);
  const auto rs = rollout_batch(m, insts, model::DecodeMode::Sample, 1);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(rs[i].trace.reward.total == episode_reward(rs[i].trace, insts[i]).total);
    CHECK(rs[i].trace.reward.total == doctest::Approx(oracle::episode_return(rs[i].trace, insts[i])).epsilon(1e-9));
  }
}

TEST_CASE("re-evaluated log-probabilities match the recorded ones") {
  Policy m(testing::micro_model(), 5);
  const auto insts = generate_instances(testing::small_gen(8), 8);
  const auto rs = rollout_batch(m, insts, model::DecodeMode::Sample, 3);
  std::size_t steps = 0;
  for (const auto& r : rs) steps += r.trace.steps.size();
  CHECK(steps >= 3 * rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& t = rs[i].trace;
    double expect = 0.0;
    for (const auto& s : t.steps) expect += s.logp_goal + s.logp_direction;
    ad::Tape<float> tape;
    const auto ev = evaluate_actions(m, insts[i], t);
    CHECK(ev.log_prob.item() == doctest::Approx(expect).epsilon(1e-5));
    CHECK(ev.value.item() == doctest::Approx(rs[i].value).epsilon(1e-5));
    CHECK(ev.mean_entropy.item() >= 0.0f);
  }
}

TEST_CASE("zero advantage gives zero actor gradient") {
  Policy m(testing::micro_model(), 6);
  const auto inst = generate_instance(testing::small_gen(9, 5));
  const auto t = rollout_batch(m, {inst}, model::DecodeMode::Sample, 1)[0].trace;
  m.parameters().zero_grad();
  {
    ad::Tape<float> tape;
    const auto ev = evaluate_actions(m, inst, t);
    tape.backward(ad::scale(ev.log_prob, 0.0f));
  }
  auto& ps = m.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (float g : ps[i].grad()) CHECK(g == 0.0f);
  }
}

TEST_CASE("positive advantage raises the log-probability of taken actions") {
  auto cfg = tiny_config();
  cfg.critic_weight = 0.0;
  cfg.lr = 1e-3;
  Trainer tr(cfg);
  const auto inst = generate_instance(testing::small_gen(10, 5));
  auto t = rollout_batch(tr.model(), {inst}, model::DecodeMode::Sample, 4)[0].trace;
  t.reward.total = 100.0;
  const double before = mean_logp(tr.model(), inst, t);
  const auto st = tr.update({inst}, {t});
  CHECK(st.advantages[0] > 0.0);
  const double after = mean_logp(tr.model(), inst, t);
  CHECK(after > before);
}

TEST_CASE("critic loss decreases on a fixed instance set") {
  auto cfg = tiny_config();
  cfg.lr = 3e-3;
  Trainer tr(cfg);
  const auto insts = tr.batch_instances(0);
  std::vector<EpisodeTrace> traces;
  for (const auto& r : rollout_batch(tr.model(), insts, model::DecodeMode::Sample, 9)) traces.push_back(r.trace);
  double first = 0.0, last = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto st = tr.update(insts, traces);
    if (k < 10) first += st.critic_loss;
    if (k >= 90) last += st.critic_loss;
  }
  CHECK(last < first);
}

TEST_CASE("normalized advantages have zero mean") {
  auto cfg = tiny_config();
  cfg.normalize_advantage = true;
  Trainer tr(cfg);
  const auto insts = tr.batch_instances(0);
  std::vector<EpisodeTrace> traces;
  for (const auto& r : rollout_batch(tr.model(), insts, model::DecodeMode::Sample, 9)) traces.push_back(r.trace);
  const auto st = tr.update(insts, traces);
  const double mean = std::accumulate(st.advantages.begin(), st.advantages.end(), 0.0) / st.advantages.size();
  CHECK(std::abs(mean) <= 1e-6);
  CHECK_THROWS_AS(tr.update({}, {}), std::invalid_argument);
}

TEST_CASE("updates keep masked goal probabilities at zero") {
  auto cfg = tiny_config();
  cfg.lr = 1e-2;
  Trainer tr(cfg);
  for (int k = 0; k < 5; ++k) tr.run_iteration();
  const auto st = suites::run_mask_suite(tr.model(), testing::small_gen(12, 5), 30, 2);
  CHECK(st.ok());
}

TEST_CASE("zero iterations write only the initial checkpoint") {
  auto cfg = tiny_config();
  cfg.iterations = 0;
  cfg.out_dir = testing::temp_dir("train0").string();
  const auto rep = nop::train::train(cfg);
  CHECK(rep.records.empty());
  CHECK(fs::exists(fs::path(cfg.out_dir) / "checkpoint_000000.nopckpt"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "report.csv"));
}

TEST_CASE("training is reproducible and checkpoints reload") {
  auto cfg = tiny_config();
  cfg.checkpoint_every = 2;
  cfg.out_dir = testing::temp_dir("train_a").string();
  const auto a = nop::train::train(cfg);
  auto cfg2 = cfg;
  cfg2.out_dir = testing::temp_dir("train_b").string();
  const auto b = nop::train::train(cfg2);
  REQUIRE(a.records.size() == 3);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].iteration == static_cast<int>(i));
    CHECK(a.records[i].mean_reward == b.records[i].mean_reward);
    CHECK(a.records[i].actor_loss == b.records[i].actor_loss);
    CHECK(a.records[i].critic_loss == b.records[i].critic_loss);
  }
  const fs::path dir(cfg.out_dir);
  CHECK(fs::exists(dir / "checkpoint_000000.nopckpt"));
  CHECK(fs::exists(dir / "checkpoint_000002.nopckpt"));
  CHECK(fs::exists(dir / "model.nopckpt"));

  const auto p = load_policy((dir / "model.nopckpt").string());
  const auto q = load_policy((fs::path(cfg2.out_dir) / "model.nopckpt").string());
  CHECK(p.config() == cfg.model);
  const auto inst = generate_instance(testing::small_gen(13, 5));
  CHECK(p.critic_value(p.encode(inst)).item() == q.critic_value(q.encode(inst)).item());
  CHECK_THROWS(load_policy((dir / "missing.nopckpt").string()));
}

}
