#pragma once

#include <filesystem>
#include <string>

#include "nop/generator.hpp"
#include "nop/instance.hpp"
#include "nop/model/naviformer.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nop_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline nop::GenConfig small_gen(std::uint64_t seed, int n = 10) {
  nop::GenConfig g;
  g.n_nodes = n;
  g.obstacles_min = 3;
  g.obstacles_max = 6;
  g.seed = seed;
  return g;
}

inline nop::model::ModelConfig micro_model() {
  nop::model::ModelConfig c;
  c.hidden = 8;
  c.heads = 2;
  c.blocks = 1;
  c.ff_hidden = 16;
  c.obstacle_features = 4;
  c.conv1_channels = 2;
  c.conv2_channels = 3;
  c.direction_hidden = 6;
  c.maps.size = 8;
  c.maps.window = 0.16;
  return c;
}

inline nop::model::ModelConfig small_model() {
  nop::model::ModelConfig c;
  c.hidden = 16;
  c.heads = 4;
  c.blocks = 2;
  c.ff_hidden = 32;
  c.direction_hidden = 16;
  c.maps.size = 16;
  return c;
}

}  // namespace testing
