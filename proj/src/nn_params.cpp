#include "largegt/nn/params.hpp"

#include <cmath>
#include <cstring>

#include "binary_io.hpp"

namespace largegt::nn {

namespace {
constexpr std::uint32_t kTensorVersion = 1;
}

void save_named_tensors(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path) {
  auto out = io::open_out(path);
  out.write("LGTP", 4);
  io::write_pod(out, kTensorVersion);
  io::write_pod(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    io::write_pod(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::write_pod(out, static_cast<std::uint32_t>(t.shape.size()));
    io::write_span(out, std::span<const std::uint64_t>(t.shape));
    io::write_span(out, std::span<const float>(t.data));
  }
}

std::vector<NamedTensor> load_named_tensors(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  io::expect_magic(in, "LGTP", path);
  io::expect_version(io::read_pod<std::uint32_t>(in, "version"), kTensorVersion, path);
  const auto count = io::read_pod<std::uint32_t>(in, "tensor count");
  std::vector<NamedTensor> out(count);
  for (auto& t : out) {
    const auto len = io::read_pod<std::uint32_t>(in, "name length");
    if (len > 4096) throw FormatError("implausible tensor name length in " + path.string());
    t.name.resize(len);
    io::read_span(in, std::span<char>(t.name.data(), len), "tensor name");
    const auto rank = io::read_pod<std::uint32_t>(in, "rank");
    if (rank > 8) throw FormatError("implausible tensor rank in " + path.string());
    t.shape.resize(rank);
    io::read_span(in, std::span(t.shape), "shape");
    std::uint64_t n = 1;
    for (auto s : t.shape) n *= s;
    t.data.resize(n);
    io::read_span(in, std::span(t.data), "tensor payload");
  }
  io::expect_eof(in, path);
  return out;
}

template <typename T>
NamedTensor to_named(const std::string& name, const Matrix<T>& m) {
  NamedTensor t;
  t.name = name;
  t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  return t;
}

template <typename T>
Matrix<T> from_named(const NamedTensor& t) {
  if (t.shape.size() != 2) throw FormatError("tensor '" + t.name + "' is not rank 2");
  Matrix<T> m(static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(t.data[static_cast<std::size_t>(i)]);
  return m;
}

template <typename T>
Var<T> ParamStore<T>::add(std::string name, Matrix<T> init) {
  if (contains(name)) throw ContractViolation("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->tensor.value = std::move(init);
  p->tensor.requires_grad = true;
  p->first_moment = Matrix<T>::Zero(p->tensor.value.rows(), p->tensor.value.cols());
  p->second_moment = p->first_moment;
  params_.push_back(std::move(p));
  return params_.back()->var();
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return true;
  return false;
}

template <typename T>
Parameter<T>& ParamStore<T>::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw ContractViolation("no parameter named '" + name + "'");
}

template <typename T>
const Parameter<T>& ParamStore<T>::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

template <typename T>
std::size_t ParamStore<T>::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->tensor.value.size());
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p->tensor.zero_grad();
}

template <typename T>
void ParamStore<T>::adam_step(const AdamConfig& cfg) {
  ++step_;
  const double t = static_cast<double>(step_);
  const T lr_t = static_cast<T>(cfg.lr * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
                                (1.0 - std::pow(cfg.beta1, t)));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  // eps scaled so the update equals lr * m̂ / (sqrt(v̂) + eps) exactly
  const T eps_t = static_cast<T>(cfg.eps * std::sqrt(1.0 - std::pow(cfg.beta2, t)));
  for (auto& p : params_) {
    const Matrix<T>& g = p->tensor.grad;
    if (g.size() == 0) continue;
    p->first_moment = b1 * p->first_moment + (T(1) - b1) * g;
    p->second_moment = b2 * p->second_moment + (T(1) - b2) * g.cwiseAbs2();
    p->tensor.value.array() -=
        lr_t * p->first_moment.array() / (p->second_moment.array().sqrt() + eps_t);
  }
}

template <typename T>
std::vector<NamedTensor> ParamStore<T>::export_tensors() const {
  std::vector<NamedTensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(to_named<T>(p->name, p->tensor.value));
  return out;
}

template <typename T>
void ParamStore<T>::import_tensors(const std::vector<NamedTensor>& tensors) {
  for (auto& p : params_) {
    const NamedTensor* found = nullptr;
    for (const auto& t : tensors)
      if (t.name == p->name) found = &t;
    if (!found) throw FormatError("checkpoint is missing parameter '" + p->name + "'");
    Matrix<T> m = from_named<T>(*found);
    if (m.rows() != p->tensor.value.rows() || m.cols() != p->tensor.value.cols())
      throw FormatError("checkpoint tensor '" + p->name + "' has the wrong shape");
    p->tensor.value = std::move(m);
  }
}

template <typename T>
Matrix<T> xavier_uniform(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix<T> m(in, out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
  return m;
}

std::uint64_t hash_tensors(const std::vector<NamedTensor>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& t : tensors) {
    feed(t.name.data(), t.name.size());
    feed(t.shape.data(), t.shape.size() * sizeof(std::uint64_t));
    feed(t.data.data(), t.data.size() * sizeof(float));
  }
  return h;
}

template class ParamStore<float>;
template class ParamStore<double>;
template NamedTensor to_named(const std::string&, const Matrix<float>&);
template NamedTensor to_named(const std::string&, const Matrix<double>&);
template Matrix<float> from_named(const NamedTensor&);
template Matrix<double> from_named(const NamedTensor&);
template Matrix<float> xavier_uniform(Eigen::Index, Eigen::Index, std::mt19937_64&, double);
template Matrix<double> xavier_uniform(Eigen::Index, Eigen::Index, std::mt19937_64&, double);

}  // namespace largegt::nn
