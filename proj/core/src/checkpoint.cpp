#include "evl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "evl/error.hpp"
#include "evl/lm.hpp"

namespace evl {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'L', 'M'};

template <typename T>
void put(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

class Reader {
 public:
  Reader(const std::string& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) throw Error(path_.string() + ": truncated checkpoint");
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, ModelKind kind, const nn::Architecture& arch,
                      std::uint64_t steps, std::span<const double> parameters) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.vocab_size));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.layers));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.heads));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.context));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.ffn_mult));
  put<std::uint32_t>(out, arch.causal ? 1U : 0U);
  put<std::uint64_t>(out, steps);
  put<std::uint64_t>(out, parameters.size());
  out.reserve(out.size() + 4 * parameters.size());
  for (double p : parameters) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(p)));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw Error(path.string() + ": not an EVLM checkpoint");
  }
  const std::string body = buf.substr(4);
  Reader r(body, path);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto kind = r.get<std::uint32_t>();
  if (kind != 1 && kind != 2) throw Error(path.string() + ": unknown model kind");
  c.kind = static_cast<ModelKind>(kind);
  c.arch.vocab_size = static_cast<int>(r.get<std::uint32_t>());
  c.arch.dim = static_cast<int>(r.get<std::uint32_t>());
  c.arch.layers = static_cast<int>(r.get<std::uint32_t>());
  c.arch.heads = static_cast<int>(r.get<std::uint32_t>());
  c.arch.context = static_cast<int>(r.get<std::uint32_t>());
  c.arch.ffn_mult = static_cast<int>(r.get<std::uint32_t>());
  c.arch.causal = r.get<std::uint32_t>() != 0;
  c.arch.validate();
  c.steps = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  if (n > body.size() / 4) throw Error(path.string() + ": truncated checkpoint");
  c.parameters.resize(n);
  for (auto& p : c.parameters) p = static_cast<double>(std::bit_cast<float>(r.get<std::uint32_t>()));
  if (!r.done()) throw Error(path.string() + ": trailing bytes after parameters");
  return c;
}

void save_lm(const std::filesystem::path& path, const LmPolicy& policy) {
  write_checkpoint(path, ModelKind::language_model, policy.architecture(), policy.training_steps(),
                   policy.parameters());
}

LmPolicy load_lm(const std::filesystem::path& path) {
  Checkpoint c = read_checkpoint(path);
  if (c.kind != ModelKind::language_model) throw Error(path.string() + ": not a language model checkpoint");
  return LmPolicy(c.arch, std::move(c.parameters), c.steps);
}

}  // namespace evl
