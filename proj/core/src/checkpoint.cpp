#include "nop/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <type_traits>

#include "nop/digest.hpp"

namespace nop::ad {
namespace {

constexpr char kMagic[8] = {'N', 'O', 'P', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  static_assert(std::is_trivially_copyable_v<U>);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(U));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void read_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointError("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParameterSet<T>& params, const std::string& metadata) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_bytes(out, metadata);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = params[i];
    put_bytes(out, params.name(i));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(std::is_same_v<T, float> ? DType::Float32 : DType::Float64));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.values().data());
    out.insert(out.end(), p, p + t.numel() * sizeof(T));
  }
  const Sha256 digest = sha256(out);
  out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 32 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint container (bad magic)");
  }
  const std::size_t body = bytes.size() - 32;
  const Sha256 digest = sha256(std::span<const std::uint8_t>(bytes.data(), body));
  if (std::memcmp(digest.data(), bytes.data() + body, 32) != 0) {
    throw CheckpointError("checkpoint digest mismatch (corrupted file)");
  }
  Reader r(bytes, body);
  char magic[8];
  r.read_raw(magic, sizeof magic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.metadata = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.get_string();
    const auto dt = r.get<std::uint8_t>();
    if (dt != 1 && dt != 2) throw CheckpointError("tensor " + t.name + ": unknown dtype");
    t.dtype = static_cast<DType>(dt);
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    const std::size_t n = shape_numel(t.shape);
    t.values.resize(n);
    if (t.dtype == DType::Float32) {
      std::vector<float> raw(n);
      r.read_raw(raw.data(), n * sizeof(float));
      for (std::size_t k = 0; k < n; ++k) t.values[k] = raw[k];
    } else {
      r.read_raw(t.values.data(), n * sizeof(double));
    }
    ck.tensors.push_back(std::move(t));
  }
  if (r.pos() != body) throw CheckpointError("trailing bytes before checkpoint digest");
  ck.digest_hex = to_hex(digest);
  return ck;
}

template <typename T>
void save_checkpoint(const std::string& path, const ParameterSet<T>& params, const std::string& metadata) {
  const auto bytes = encode_checkpoint(params, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template <typename T>
void restore_parameters(const Checkpoint& ckpt, ParameterSet<T>& params) {
  if (ckpt.tensors.size() != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& st = ckpt.tensors[i];
    auto& p = params[i];
    if (st.name != params.name(i) || st.shape != p.shape()) {
      throw CheckpointError("tensor mismatch: checkpoint " + st.name + " " + shape_str(st.shape) +
                            " vs model " + params.name(i) + " " + shape_str(p.shape()));
    }
    auto dst = p.values_mut();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(st.values[k]);
  }
}

template std::vector<std::uint8_t> encode_checkpoint<float>(const ParameterSet<float>&, const std::string&);
template std::vector<std::uint8_t> encode_checkpoint<double>(const ParameterSet<double>&, const std::string&);
template void save_checkpoint<float>(const std::string&, const ParameterSet<float>&, const std::string&);
template void save_checkpoint<double>(const std::string&, const ParameterSet<double>&, const std::string&);
template void restore_parameters<float>(const Checkpoint&, ParameterSet<float>&);
template void restore_parameters<double>(const Checkpoint&, ParameterSet<double>&);

}  // namespace nop::ad
