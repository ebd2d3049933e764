#include "rllg/replay.hpp"

#include <stdexcept>

namespace rllg {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
}

void ReplayBuffer::push(Transition t) {
  if (!full_ && next_ == data_.size()) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  ++next_;
  if (next_ == capacity_) {
    next_ = 0;
    full_ = true;
  }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(
    std::size_t batch, std::mt19937_64& rng) const {
  if (size() == 0)
    throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
  std::vector<std::size_t> idx(batch);
  for (std::size_t& i : idx) i = pick(rng);
  return idx;
}

Batch assemble_batch(const ReplayBuffer& buffer,
                     std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("assemble_batch: empty batch");
  const Transition& first = buffer.at(indices[0]);
  const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
  const Eigen::Index ds = static_cast<Eigen::Index>(first.s.size());
  const Eigen::Index da = static_cast<Eigen::Index>(first.a.size());
  Batch b;
  b.s.resize(n, ds);
  b.a.resize(n, da);
  b.s_next.resize(n, ds);
  b.r.resize(n);
  b.done.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = buffer.at(indices[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < ds; ++j) {
      b.s(i, j) = t.s[static_cast<std::size_t>(j)];
      b.s_next(i, j) = t.s_next[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index j = 0; j < da; ++j)
      b.a(i, j) = t.a[static_cast<std::size_t>(j)];
    b.r(i) = t.r;
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace rllg
