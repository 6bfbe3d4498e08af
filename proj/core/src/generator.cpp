#include "nop/generator.hpp"

#include <optional>
#include <fstream>

#include "nop/digest.hpp"
#include "nop/parallel.hpp"
#include "nop/rng.hpp"

namespace nop {

void GenConfig::validate() const {
  if (n_nodes < 0) throw std::invalid_argument("n_nodes must be non-negative");
  if (obstacles_min < 0 || obstacles_max < obstacles_min) {
    throw std::invalid_argument("obstacle count range is empty");
  }
  if (!(radius_min > 0.0) || radius_max < radius_min) {
    throw std::invalid_argument("radius range is empty or non-positive");
  }
  if (!(budget > 0.0) || !(step_len > 0.0)) {
    throw std::invalid_argument("budget and step_len must be positive");
  }
  if (max_resamples < 1) throw std::invalid_argument("max_resamples must be >= 1");
}

double default_budget(int n_nodes) {
  if (n_nodes <= 20) return 2.0;
  if (n_nodes <= 50) return 2.0 + (n_nodes - 20) / 30.0;
  if (n_nodes <= 100) return 3.0 + (n_nodes - 50) / 50.0;
  return 4.0;
}

NopInstance generate_instance(const GenConfig& cfg, std::uint64_t index) {
  cfg.validate();
  Rng rng(cfg.seed, index);

  const int count = rng.uniform_int(cfg.obstacles_min, cfg.obstacles_max);
  std::vector<Obstacle> obstacles;
  obstacles.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double cx = quantize9(rng.uniform());
    const double cy = quantize9(rng.uniform());
    const double r = quantize9(rng.uniform(cfg.radius_min, cfg.radius_max));
    obstacles.push_back({{cx, cy}, r});
  }

  auto blocked = [&](const Point& p) {
    for (const auto& o : obstacles) {
      if (distance(p, o.center) <= o.radius) return true;
    }
    return false;
  };

  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(cfg.n_nodes) + 2);
  for (int i = 0; i < cfg.n_nodes + 2; ++i) {
    int attempts = 0;
    Point p;
    do {
      if (attempts++ == cfg.max_resamples) {
        throw GenerationError("instance " + std::to_string(index) + ": could not place node " +
                              std::to_string(i) + " outside obstacles");
      }
      p = {quantize9(rng.uniform()), quantize9(rng.uniform())};
    } while (blocked(p));
    nodes.push_back(p);
  }
  return make_instance(std::move(nodes), std::move(obstacles), quantize9(cfg.budget),
                       quantize9(cfg.step_len));
}

std::vector<NopInstance> generate_instances(const GenConfig& cfg, std::size_t count,
                                            std::uint64_t first_index) {
  cfg.validate();
  std::vector<std::optional<NopInstance>> slots(count);
  parallel_for(count, [&](std::size_t i) { slots[i] = generate_instance(cfg, first_index + i); });
  std::vector<NopInstance> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

DatasetSummary generate_dataset(const GenConfig& cfg, std::size_t count, const std::string& path) {
  cfg.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t begin = 0; begin < count; begin += kChunk) {
    const std::size_t n = std::min(kChunk, count - begin);
    for (const auto& inst : generate_instances(cfg, n, begin)) out << serialize_instance(inst) << '\n';
  }
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path);
  return {count, cfg.seed, to_hex(sha256_file(path))};
}

}  // namespace nop
