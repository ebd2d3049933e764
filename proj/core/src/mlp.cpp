#include "rllg/mlp.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rllg {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l + 1]) * widths[l] + widths[l + 1];
  return n;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) fail("MlpSpec: need at least input and output widths");
  for (int w : widths)
    if (w < 1) fail("MlpSpec: all widths must be >= 1");
  if (head == HeadKind::kSquashedGaussian) {
    if (action_dim < 1) fail("MlpSpec: SquashedGaussian needs action_dim >= 1");
    if (widths.back() != 2 * action_dim)
      fail("MlpSpec: SquashedGaussian output width must be 2*action_dim");
  }
  if (head == HeadKind::kBoundedTanh && phi < 0.0)
    fail("MlpSpec: BoundedTanh scale must be >= 0");
}

MlpSpec mlp_spec(std::vector<int> widths, Activation act, HeadKind head,
                 int action_dim, double phi) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.hidden_activation = act;
  s.head = head;
  s.action_dim = action_dim;
  s.phi = phi;
  s.validate();
  return s;
}

Network::Network(MlpSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  params_.resize(spec_.param_count());
  grad_.assign(params_.size(), 0.0);
  acts_.resize(spec_.layer_count() + 1);
  preacts_.resize(spec_.layer_count());

  // uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  std::mt19937_64 rng(init_seed);
  std::size_t off = 0;
  for (int l = 0; l < spec_.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.widths[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n =
        static_cast<std::size_t>(spec_.widths[l + 1]) * spec_.widths[l] +
        spec_.widths[l + 1];
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = dist(rng);
    off += n;
  }
}

std::size_t Network::layer_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(spec_.widths[l + 1]) * spec_.widths[l] +
           spec_.widths[l + 1];
  return off;
}

Eigen::Map<Network::RowMajor> Network::weight(int l) {
  return {params_.data() + layer_offset(l), spec_.widths[l + 1], spec_.widths[l]};
}
Eigen::Map<Eigen::VectorXd> Network::bias(int l) {
  const std::size_t o = layer_offset(l) +
      static_cast<std::size_t>(spec_.widths[l + 1]) * spec_.widths[l];
  return {params_.data() + o, spec_.widths[l + 1]};
}
Eigen::Map<Network::RowMajor> Network::weight_grad(int l) {
  return {grad_.data() + layer_offset(l), spec_.widths[l + 1], spec_.widths[l]};
}
Eigen::Map<Eigen::VectorXd> Network::bias_grad(int l) {
  const std::size_t o = layer_offset(l) +
      static_cast<std::size_t>(spec_.widths[l + 1]) * spec_.widths[l];
  return {grad_.data() + o, spec_.widths[l + 1]};
}

void Network::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

const Matrix& Network::forward(const Matrix& input) {
  if (input.cols() != spec_.input_dim())
    fail("Network::forward: input has " + std::to_string(input.cols()) +
         " columns, spec wants " + std::to_string(spec_.input_dim()));
  const int L = spec_.layer_count();
  acts_[0] = input;
  for (int l = 0; l < L; ++l) {
    preacts_[l].noalias() = acts_[l] * weight(l).transpose();
    preacts_[l].rowwise() += bias(l).transpose();
    if (l + 1 < L) {
      if (spec_.hidden_activation == Activation::kReLU)
        acts_[l + 1] = preacts_[l].cwiseMax(0.0);
      else
        acts_[l + 1] = preacts_[l].array().tanh().matrix();
    }
  }
  const Matrix& z = preacts_[L - 1];
  switch (spec_.head) {
    case HeadKind::kLinear:
      out_ = z;
      break;
    case HeadKind::kBoundedTanh:
      head_tanh_ = z.array().tanh().matrix();
      out_ = spec_.phi * head_tanh_;
      break;
    case HeadKind::kSquashedGaussian: {
      const int d = spec_.action_dim;
      out_.resize(z.rows(), z.cols());
      out_.leftCols(d) = z.leftCols(d);
      out_.rightCols(d) =
          z.rightCols(d).array().min(kLogStdMax).max(kLogStdMin).matrix();
      break;
    }
  }
  has_forward_ = true;
  return out_;
}

Matrix Network::backward(const Matrix& upstream, bool accumulate_grad) {
  if (!has_forward_)
    throw std::logic_error("Network::backward called without a cached forward");
  const int L = spec_.layer_count();
  if (upstream.rows() != acts_[0].rows() || upstream.cols() != spec_.output_dim())
    fail("Network::backward: upstream shape mismatch");

  Matrix dz;
  switch (spec_.head) {
    case HeadKind::kLinear:
      dz = upstream;
      break;
    case HeadKind::kBoundedTanh:
      dz = (upstream.array() * spec_.phi *
            (1.0 - head_tanh_.array().square()))
               .matrix();
      break;
    case HeadKind::kSquashedGaussian: {
      const int d = spec_.action_dim;
      const Matrix& z = preacts_[L - 1];
      dz.resize(upstream.rows(), upstream.cols());
      dz.leftCols(d) = upstream.leftCols(d);
      dz.rightCols(d) =
          (upstream.rightCols(d).array() *
           ((z.rightCols(d).array() > kLogStdMin) &&
            (z.rightCols(d).array() < kLogStdMax))
               .cast<double>())
              .matrix();
      break;
    }
  }

  for (int l = L - 1; l >= 0; --l) {
    if (accumulate_grad) {
      weight_grad(l).noalias() += dz.transpose() * acts_[l];
      bias_grad(l) += dz.colwise().sum().transpose();
    }
    if (l == 0) break;
    Matrix da = dz * weight(l);
    if (spec_.hidden_activation == Activation::kReLU)
      dz = (da.array() * (preacts_[l - 1].array() > 0.0).cast<double>()).matrix();
    else
      dz = (da.array() * (1.0 - preacts_[l - 1].array().tanh().square())).matrix();
  }
  return dz * weight(0);
}

Matrix Network::infer(const Matrix& input) const {
  if (input.cols() != spec_.input_dim())
    fail("Network::infer: input width mismatch");
  const int L = spec_.layer_count();
  const double* p = params_.data();
  Matrix a = input;
  std::size_t off = 0;
  for (int l = 0; l < L; ++l) {
    const int in = spec_.widths[l], out = spec_.widths[l + 1];
    Eigen::Map<const RowMajor> w(p + off, out, in);
    Eigen::Map<const Eigen::VectorXd> b(p + off + static_cast<std::size_t>(out) * in, out);
    Matrix z = a * w.transpose();
    z.rowwise() += b.transpose();
    off += static_cast<std::size_t>(out) * in + out;
    if (l + 1 < L) {
      if (spec_.hidden_activation == Activation::kReLU)
        a = z.cwiseMax(0.0);
      else
        a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  switch (spec_.head) {
    case HeadKind::kLinear:
      return a;
    case HeadKind::kBoundedTanh:
      return spec_.phi * a.array().tanh().matrix();
    case HeadKind::kSquashedGaussian: {
      const int d = spec_.action_dim;
      a.rightCols(d) =
          a.rightCols(d).array().min(kLogStdMax).max(kLogStdMin).matrix();
      return a;
    }
  }
  return a;
}

std::vector<double> Network::infer(std::span<const double> input) const {
  Matrix x(1, static_cast<Eigen::Index>(input.size()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) x(0, i) = input[i];
  Matrix y = infer(x);
  return {y.data(), y.data() + y.size()};
}

std::vector<double> Network::forward(std::span<const double> input) {
  Matrix x(1, static_cast<Eigen::Index>(input.size()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) x(0, i) = input[i];
  const Matrix& y = forward(x);
  return {y.data(), y.data() + y.size()};
}

std::vector<double> Network::backward(std::span<const double> upstream,
                                      bool accumulate_grad) {
  Matrix u(1, static_cast<Eigen::Index>(upstream.size()));
  for (Eigen::Index i = 0; i < u.cols(); ++i) u(0, i) = upstream[i];
  Matrix g = backward(u, accumulate_grad);
  return {g.data(), g.data() + g.size()};
}

AdamState::AdamState(std::size_t n, double learning_rate)
    : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& opt) {
  if (params.size() != opt.m.size() || grad.size() != opt.m.size())
    throw std::invalid_argument("adam_step: size mismatch with optimizer state");
  ++opt.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = opt.m[i] / bc1;
    const double vhat = opt.v[i] / bc2;
    params[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

void adam_step(Network& net, AdamState& opt) {
  adam_step(net.params(), net.grad(), opt);
  net.zero_grad();
}

void soft_update(Network& target, const Network& online, double tau) {
  if (!(target.spec() == online.spec()))
    throw std::invalid_argument("soft_update: network specs differ");
  auto& t = target.params();
  const auto& o = online.params();
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = (1.0 - tau) * t[i] + tau * o[i];
}

namespace {

const char* activation_name(Activation a) {
  return a == Activation::kReLU ? "relu" : "tanh";
}

}  // namespace

void write_network(const Network& net, std::ostream& os) {
  const MlpSpec& s = net.spec();
  os << "RLLG-NET v1\n";
  os << "widths";
  for (int w : s.widths) os << ' ' << w;
  os << '\n';
  os << "activation " << activation_name(s.hidden_activation) << '\n';
  switch (s.head) {
    case HeadKind::kLinear:
      os << "head linear\n";
      break;
    case HeadKind::kSquashedGaussian:
      os << "head squashed-gaussian " << s.action_dim << '\n';
      break;
    case HeadKind::kBoundedTanh: {
      std::ostringstream p;
      p.precision(17);
      p << s.phi;
      os << "head bounded-tanh " << p.str() << '\n';
      break;
    }
  }
  os << "params " << net.params().size() << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < net.params().size(); ++i)
    os << net.params()[i] << '\n';
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for write");
  write_network(net, f);
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

namespace {

[[noreturn]] void bad_checkpoint(const std::string& origin, const std::string& field) {
  throw std::runtime_error("malformed checkpoint " + origin + ": bad field '" +
                           field + "'");
}

}  // namespace

Network read_network(std::istream& is, const std::string& origin) {
  std::string line;
  if (!std::getline(is, line) || line != "RLLG-NET v1")
    bad_checkpoint(origin, "header");

  MlpSpec spec;
  if (!std::getline(is, line)) bad_checkpoint(origin, "widths");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != "widths") bad_checkpoint(origin, "widths");
    int w;
    while (ss >> w) spec.widths.push_back(w);
    if (spec.widths.size() < 2) bad_checkpoint(origin, "widths");
  }
  if (!std::getline(is, line)) bad_checkpoint(origin, "activation");
  {
    std::istringstream ss(line);
    std::string key, val;
    ss >> key >> val;
    if (key != "activation") bad_checkpoint(origin, "activation");
    if (val == "relu")
      spec.hidden_activation = Activation::kReLU;
    else if (val == "tanh")
      spec.hidden_activation = Activation::kTanH;
    else
      bad_checkpoint(origin, "activation");
  }
  if (!std::getline(is, line)) bad_checkpoint(origin, "head");
  {
    std::istringstream ss(line);
    std::string key, val;
    ss >> key >> val;
    if (key != "head") bad_checkpoint(origin, "head");
    if (val == "linear") {
      spec.head = HeadKind::kLinear;
    } else if (val == "squashed-gaussian") {
      spec.head = HeadKind::kSquashedGaussian;
      if (!(ss >> spec.action_dim)) bad_checkpoint(origin, "head action_dim");
    } else if (val == "bounded-tanh") {
      spec.head = HeadKind::kBoundedTanh;
      if (!(ss >> spec.phi)) bad_checkpoint(origin, "head phi");
    } else {
      bad_checkpoint(origin, "head");
    }
  }
  std::size_t n = 0;
  if (!std::getline(is, line)) bad_checkpoint(origin, "params");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key >> n;
    if (key != "params") bad_checkpoint(origin, "params");
  }
  try {
    spec.validate();
  } catch (const std::exception&) {
    bad_checkpoint(origin, "spec");
  }
  if (n != spec.param_count()) bad_checkpoint(origin, "params count");

  Network net(spec, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (!(is >> net.params()[i])) bad_checkpoint(origin, "params data");
  return net;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_network(f, path.string());
}

}  // namespace rllg
