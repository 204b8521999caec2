#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "protoid/signal.hpp"

namespace protoid {

/// A named rows x cols block inside a flat parameter vector.
struct TensorSlot {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;

  Index size() const { return rows * cols; }
};

/// Ordered list of tensors packed back to back. Parameters, gradients and
/// optimizer moments all share one layout so they can be treated as flat
/// vectors.
class ParameterLayout {
 public:
  /// Returns the slot id.
  Index add(std::string name, Index rows, Index cols);

  const TensorSlot& operator[](Index id) const { return slots_[static_cast<std::size_t>(id)]; }
  Index count() const { return static_cast<Index>(slots_.size()); }
  Index total() const { return total_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }

  /// Slot id by name, or -1.
  Index find(const std::string& name) const;

 private:
  std::vector<TensorSlot> slots_;
  Index total_ = 0;
};

template <typename Scalar>
using MatrixMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using VectorMap = Eigen::Map<Vector<Scalar>>;
template <typename Scalar>
using ConstVectorMap = Eigen::Map<const Vector<Scalar>>;

template <typename Scalar>
MatrixMap<Scalar> view(Vector<Scalar>& flat, const TensorSlot& s) {
  return MatrixMap<Scalar>(flat.data() + s.offset, s.rows, s.cols);
}

template <typename Scalar>
ConstMatrixMap<Scalar> view(const Vector<Scalar>& flat, const TensorSlot& s) {
  return ConstMatrixMap<Scalar>(flat.data() + s.offset, s.rows, s.cols);
}

template <typename Scalar>
VectorMap<Scalar> vview(Vector<Scalar>& flat, const TensorSlot& s) {
  return VectorMap<Scalar>(flat.data() + s.offset, s.size());
}

template <typename Scalar>
ConstVectorMap<Scalar> vview(const Vector<Scalar>& flat, const TensorSlot& s) {
  return ConstVectorMap<Scalar>(flat.data() + s.offset, s.size());
}

}  // namespace protoid
