#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rllg/mlp.hpp"

namespace rllg {

/// One environment interaction. r is the RAW environment reward; reward
/// shaping is applied at batch-sampling time so the live scheduler weight is
/// used.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

/// Bounded ring of transitions with uniform sampling; FIFO eviction once the
/// capacity is reached.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return full_ ? capacity_ : next_; }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t batch,
                                          std::mt19937_64& rng) const;

 private:
  std::vector<Transition> data_;
  std::size_t capacity_;
  std::size_t next_ = 0;
  bool full_ = false;
};

/// Column view of a batch of transitions: rows are samples.
struct Batch {
  Matrix s;
  Matrix a;
  Vector r;
  Matrix s_next;
  Vector done;  // 1.0 where terminal

  Eigen::Index size() const { return s.rows(); }
};

Batch assemble_batch(const ReplayBuffer& buffer,
                     std::span<const std::size_t> indices);

}  // namespace rllg
