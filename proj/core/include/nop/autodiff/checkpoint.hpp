#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nop/autodiff/parameters.hpp"

namespace nop::ad {

/// Versioned container of named tensors.
///
/// Byte layout, all integers little-endian:
///   "NOPCKPT\0"                     8-byte magic
///   u32 version                     currently 1
///   u32 metadata_len, bytes         UTF-8 JSON manifest (may be empty)
///   u32 tensor_count
///   per tensor:
///     u32 name_len, bytes           UTF-8 name
///     u8  dtype                     1 = float32, 2 = float64
///     u32 rank, u64 dims[rank]
///     values                        prod(dims) IEEE-754 values
///   32 bytes                        SHA-256 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { Float32 = 1, Float64 = 2 };

struct StoredTensor {
  std::string name;
  DType dtype = DType::Float32;
  Shape shape;
  std::vector<double> values;  // widened on load
};

struct Checkpoint {
  std::string metadata;
  std::vector<StoredTensor> tensors;
  std::string digest_hex;
};

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParameterSet<T>& params, const std::string& metadata);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_checkpoint(const std::string& path, const ParameterSet<T>& params, const std::string& metadata);
Checkpoint load_checkpoint(const std::string& path);

/// Copies stored values into `params`; names, order and shapes must match.
template <typename T>
void restore_parameters(const Checkpoint& ckpt, ParameterSet<T>& params);

}  // namespace nop::ad
