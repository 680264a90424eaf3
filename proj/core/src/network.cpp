#include "monostereo/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "architecture.hpp"
#include "monostereo/error.hpp"

namespace monostereo {

enum class OpKind { kInput, kConv, kElu, kMaxPool, kUpsample, kConcat, kAdd, kScaledSigmoid };

struct Tape::Node {
  OpKind kind = OpKind::kInput;
  int a = -1;
  int b = -1;
  int weight = -1;
  int bias = -1;
  nn::ConvGeometry geom;
  std::vector<int> argmax;
  double dmax = 0.0;
};

struct Tape::Impl {
  const Checkpoint* source = nullptr;
  std::uint64_t revision = 0;
  std::vector<Node> nodes;
  std::vector<Tensor> values;  // values[i] is the output of nodes[i]
  std::vector<int> heads;      // node id of the scaled sigmoid per scale
};

Tape::Tape() : impl_(std::make_unique<Impl>()) {}
Tape::~Tape() = default;
Tape::Tape(Tape&&) noexcept = default;
Tape& Tape::operator=(Tape&&) noexcept = default;

struct TapeAccess {
  static Tape::Impl& impl(Tape& t) { return *t.impl_; }
  static const Tape::Impl& impl(const Tape& t) { return *t.impl_; }
};

namespace {

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::size_t numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

class ForwardBuilder {
 public:
  using Value = int;

  ForwardBuilder(const Checkpoint& ckpt, Tape::Impl& tape) : ckpt_(ckpt), tape_(tape) {
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) index_[ckpt.params[i].name] = static_cast<int>(i);
  }

  Value input(Tensor t) {
    Tape::Node n;
    n.kind = OpKind::kInput;
    return push(n, std::move(t));
  }

  int channels(Value v) const { return tape_.values[v].channels; }

  Value conv(const std::string& name, Value x, int cout, int k, int stride) {
    Tape::Node n;
    n.kind = OpKind::kConv;
    n.a = x;
    n.weight = param(detail::pname(name, "weight"));
    n.bias = param(detail::pname(name, "bias"));
    n.geom = {k, stride, k / 2};
    Tensor out = nn::conv2d(tape_.values[x], ckpt_.params[n.weight].values, ckpt_.params[n.bias].values,
                            cout, n.geom);
    return push(n, std::move(out));
  }

  Value elu(Value x) {
    Tape::Node n;
    n.kind = OpKind::kElu;
    n.a = x;
    return push(n, nn::elu(tape_.values[x]));
  }

  Value maxpool(Value x) {
    auto r = nn::max_pool(tape_.values[x], 3, 2, 1);
    Tape::Node n;
    n.kind = OpKind::kMaxPool;
    n.a = x;
    n.argmax = std::move(r.argmax);
    return push(n, std::move(r.out));
  }

  Value upsample(Value x) {
    Tape::Node n;
    n.kind = OpKind::kUpsample;
    n.a = x;
    return push(n, nn::upsample_nearest2(tape_.values[x]));
  }

  Value add(Value a, Value b) {
    Tape::Node n;
    n.kind = OpKind::kAdd;
    n.a = a;
    n.b = b;
    return push(n, nn::add(tape_.values[a], tape_.values[b]));
  }

  Value concat(Value a, Value b) {
    Tape::Node n;
    n.kind = OpKind::kConcat;
    n.a = a;
    n.b = b;
    return push(n, nn::concat(tape_.values[a], tape_.values[b]));
  }

  void decoder_input(int, int) {}

  void head(const std::string& name, Value x, int scale) {
    const Value z = conv(name, x, 2, 3, 1);
    Tape::Node n;
    n.kind = OpKind::kScaledSigmoid;
    n.a = z;
    const Tensor& zt = tape_.values[z];
    n.dmax = DisparityMap::max_for_width(zt.width);
    Tensor out(zt.channels, zt.height, zt.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = n.dmax / (1.0 + std::exp(-zt.data[i]));
    }
    const Value id = push(n, std::move(out));
    if (static_cast<int>(tape_.heads.size()) <= scale) tape_.heads.resize(scale + 1, -1);
    tape_.heads[scale] = id;
  }

 private:
  int param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::kShapeMismatch, "checkpoint lacks tensor " + name);
    return it->second;
  }

  Value push(Tape::Node n, Tensor value) {
    tape_.nodes.push_back(std::move(n));
    tape_.values.push_back(std::move(value));
    return static_cast<int>(tape_.values.size()) - 1;
  }

  const Checkpoint& ckpt_;
  Tape::Impl& tape_;
  std::map<std::string, int> index_;
};

}  // namespace

std::vector<std::pair<std::string, std::vector<int>>> parameter_layout(const NetworkSpec& spec) {
  spec.validate();
  detail::LayoutBuilder b;
  detail::walk_architecture(spec, b, b.input(spec.input_channels));
  return b.layout;
}

std::size_t Checkpoint::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

const ParamTensor& Checkpoint::param(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kShapeMismatch, "no tensor named " + name);
}

void Checkpoint::check_compatible(const NetworkSpec& expected) const {
  const auto layout = parameter_layout(expected);
  const std::size_t n = std::min(layout.size(), params.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (layout[i].first != params[i].name || layout[i].second != params[i].shape) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + layout[i].first + ": expected " +
                                                 shape_string(layout[i].second) + ", checkpoint has " +
                                                 params[i].name + " " + shape_string(params[i].shape));
    }
  }
  if (layout.size() > params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor " + layout[n].first + " missing from checkpoint");
  }
  if (params.size() > layout.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor " + params[n].name + " not expected by the network");
  }
}

Checkpoint init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Checkpoint ckpt;
  ckpt.spec = spec;
  std::mt19937_64 rng(seed);
  auto ends_with = [](const std::string& s, const std::string& tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
  };
  for (auto& [name, shape] : parameter_layout(spec)) {
    ParamTensor p{name, shape, std::vector<double>(numel(shape), 0.0)};
    if (ends_with(name, ".weight")) {
      double std = spec.init_std;
      if (spec.init_scheme == InitScheme::kFanIn && !ends_with(name, "head.weight")) {
        const double fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
        std = std::sqrt(2.0 / fan_in);
      }
      if (std > 0.0) {
        std::normal_distribution<double> normal(0.0, std);
        for (double& v : p.values) v = round_to_float(normal(rng));
      }
    }
    ckpt.params.push_back(std::move(p));
  }
  return ckpt;
}

ForwardResult forward(const Checkpoint& ckpt, const Raster& input) {
  const NetworkSpec& spec = ckpt.spec;
  if (input.channels() != spec.input_channels) {
    throw Error(ErrorCode::kDimensionMismatch, "network expects " + std::to_string(spec.input_channels) +
                                                   " input channels, got " + std::to_string(input.channels()));
  }
  const int m = spec.size_multiple();
  if (input.height() < m || input.width() < m || input.height() % m != 0 || input.width() % m != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input extent must be a positive multiple of " + std::to_string(m));
  }
  ForwardResult r;
  auto& tape = TapeAccess::impl(r.tape);
  tape.source = &ckpt;
  tape.revision = ckpt.revision;
  ForwardBuilder b(ckpt, tape);
  detail::walk_architecture(spec, b, b.input(Tensor::from_raster(input)));

  r.output.scales.resize(spec.disparity_scales);
  for (int s = 0; s < spec.disparity_scales; ++s) {
    const Tensor& t = tape.values[tape.heads[s]];
    DisparityMap dl(t.height, t.width);
    DisparityMap dr(t.height, t.width);
    std::copy(t.plane(0), t.plane(0) + t.plane_size(), dl.values().begin());
    std::copy(t.plane(1), t.plane(1) + t.plane_size(), dr.values().begin());
    r.output.scales[s] = {std::move(dl), std::move(dr)};
  }
  return r;
}

MultiScaleOutput predict(const Checkpoint& ckpt, const Raster& input) {
  return forward(ckpt, input).output;
}

ParameterGradients zero_gradients(const Checkpoint& ckpt) {
  ParameterGradients g;
  g.reserve(ckpt.params.size());
  for (const auto& p : ckpt.params) g.emplace_back(p.values.size(), 0.0);
  return g;
}

ParameterGradients backward(const Checkpoint& ckpt, const Tape& tape_handle,
                            const MultiScaleGradient& output_grads) {
  const auto& tape = TapeAccess::impl(tape_handle);
  if (tape.source != &ckpt || tape.revision != ckpt.revision) {
    throw Error(ErrorCode::kStaleTape, "tape was recorded for a different checkpoint state");
  }
  if (output_grads.scales.size() != tape.heads.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "output gradient scale count differs from the network's");
  }

  const std::size_t n = tape.nodes.size();
  std::vector<Tensor> grads(n);
  auto ensure = [&](int i) -> Tensor& {
    if (grads[i].data.empty()) {
      const Tensor& v = tape.values[i];
      grads[i] = Tensor(v.channels, v.height, v.width);
    }
    return grads[i];
  };

  for (std::size_t s = 0; s < tape.heads.size(); ++s) {
    const int id = tape.heads[s];
    const Tensor& v = tape.values[id];
    const auto& g = output_grads.scales[s];
    if (g.left.height() != v.height || g.left.width() != v.width || !g.left.same_shape(g.right)) {
      throw Error(ErrorCode::kDimensionMismatch, "output gradient at scale " + std::to_string(s) +
                                                     " does not match the head extent");
    }
    Tensor& gt = ensure(id);
    std::copy(g.left.values().begin(), g.left.values().end(), gt.plane(0));
    std::copy(g.right.values().begin(), g.right.values().end(), gt.plane(1));
  }

  ParameterGradients pg = zero_gradients(ckpt);
  for (std::size_t ii = n; ii-- > 0;) {
    const int i = static_cast<int>(ii);
    if (grads[i].data.empty()) continue;
    const Tape::Node& node = tape.nodes[i];
    const Tensor& g = grads[i];
    switch (node.kind) {
      case OpKind::kInput:
        break;
      case OpKind::kConv: {
        Tensor* gin = tape.nodes[node.a].kind == OpKind::kInput ? nullptr : &ensure(node.a);
        nn::conv2d_backward(tape.values[node.a], ckpt.params[node.weight].values, g, node.geom, gin,
                            pg[node.weight], pg[node.bias]);
        break;
      }
      case OpKind::kElu:
        nn::elu_backward(tape.values[i], g, ensure(node.a));
        break;
      case OpKind::kMaxPool: {
        Tensor& gin = ensure(node.a);
        for (std::size_t k = 0; k < g.data.size(); ++k) gin.data[node.argmax[k]] += g.data[k];
        break;
      }
      case OpKind::kUpsample:
        nn::upsample_nearest2_backward(g, ensure(node.a));
        break;
      case OpKind::kConcat: {
        Tensor& ga = ensure(node.a);
        Tensor& gb = ensure(node.b);
        for (std::size_t k = 0; k < ga.data.size(); ++k) ga.data[k] += g.data[k];
        for (std::size_t k = 0; k < gb.data.size(); ++k) gb.data[k] += g.data[ga.data.size() + k];
        break;
      }
      case OpKind::kAdd: {
        Tensor& ga = ensure(node.a);
        for (std::size_t k = 0; k < g.data.size(); ++k) ga.data[k] += g.data[k];
        Tensor& gb = ensure(node.b);
        for (std::size_t k = 0; k < g.data.size(); ++k) gb.data[k] += g.data[k];
        break;
      }
      case OpKind::kScaledSigmoid: {
        Tensor& gz = ensure(node.a);
        const Tensor& out = tape.values[i];
        for (std::size_t k = 0; k < g.data.size(); ++k) {
          const double o = out.data[k];
          gz.data[k] += g.data[k] * o * (1.0 - o / node.dmax);
        }
        break;
      }
    }
    grads[i] = Tensor();  // release as soon as consumed
  }
  return pg;
}

namespace {

constexpr char kMagic[4] = {'M', 'S', 'C', 'K'};

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
bool get_le(std::istream& is, T& v) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return true;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ostringstream manifest;
  manifest << ckpt.spec.to_text();
  manifest << "step=" << ckpt.step << '\n';
  std::size_t offset = 0;
  for (const auto& p : ckpt.params) {
    manifest << "tensor " << p.name << ' ';
    for (std::size_t i = 0; i < p.shape.size(); ++i) manifest << (i ? "," : "") << p.shape[i];
    manifest << ' ' << offset << '\n';
    offset += p.numel();
  }
  const std::string text = manifest.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kWriteFailed, path.string());
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.params) {
    for (double v : p.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error(ErrorCode::kWriteFailed, path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": not a checkpoint");
  }
  std::uint32_t version = 0;
  std::uint64_t manifest_len = 0;
  if (!get_le(in, version)) throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated header");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, path.string() + ": version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kCheckpointVersion));
  }
  if (!get_le(in, manifest_len) || manifest_len > (1u << 26)) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": bad manifest length");
  }
  std::string text(manifest_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(manifest_len))) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated manifest");
  }

  Checkpoint ckpt;
  std::string spec_text;
  std::istringstream lines(text);
  std::string line;
  std::size_t expected_offset = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ls(line.substr(7));
      ParamTensor p;
      std::string shape;
      std::size_t offset = 0;
      if (!(ls >> p.name >> shape >> offset) || offset != expected_offset) {
        throw Error(ErrorCode::kCorruptFile, path.string() + ": bad tensor line '" + line + "'");
      }
      std::istringstream ss(shape);
      std::string dim;
      while (std::getline(ss, dim, ',')) {
        try {
          p.shape.push_back(std::stoi(dim));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kCorruptFile, path.string() + ": bad shape '" + shape + "'");
        }
      }
      p.values.resize(numel(p.shape));
      expected_offset += p.values.size();
      ckpt.params.push_back(std::move(p));
    } else if (line.rfind("step=", 0) == 0) {
      try {
        ckpt.step = std::stoll(line.substr(5));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kCorruptFile, path.string() + ": bad step");
      }
    } else {
      spec_text += line + '\n';
    }
  }
  try {
    ckpt.spec = NetworkSpec::from_text(spec_text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": " + e.what());
  }
  for (auto& p : ckpt.params) {
    for (double& v : p.values) {
      std::uint32_t bits = 0;
      if (!get_le(in, bits)) throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated payload");
      v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) throw Error(ErrorCode::kCorruptFile, path.string() + ": non-finite parameter");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": trailing bytes after payload");
  }
  ckpt.check_compatible(ckpt.spec);
  return ckpt;
}

}  // namespace monostereo
