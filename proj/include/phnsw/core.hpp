#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace phnsw {

using Scalar = float;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using NodeId = std::uint32_t;

/// Immutable collection of N vectors of uniform dimension, ids 0..N-1 by row.
/// Rows are contiguous float32, safe for unrestricted concurrent reads.
class Dataset {
 public:
  explicit Dataset(Matrix vectors) : data_(std::move(vectors)) {
    if (data_.rows() < 1) {
      throw std::invalid_argument("Dataset: need at least one vector");
    }
    if (data_.cols() < 1) {
      throw std::invalid_argument("Dataset: vector dimension must be positive");
    }
    if (!data_.allFinite()) {
      throw std::invalid_argument("Dataset: values must be finite");
    }
  }

  Eigen::Index size() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }

  Eigen::Ref<const Vector> operator[](Eigen::Index i) const { return data_.row(i); }

  const Matrix& matrix() const { return data_; }

 private:
  Matrix data_;
};

/// Squared Euclidean distance. Squared L2 is used as the metric everywhere:
/// it preserves every nearest-neighbor comparison and skips the square root.
/// Accepts any pair of same-length Eigen vector expressions.
template <typename DerivedA, typename DerivedB>
Scalar squared_distance(const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("squared_distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  return (a.derived() - b.derived()).squaredNorm();
}

/// New dataset holding the given rows of `ds`, in the order given.
Dataset dataset_slice(const Dataset& ds, std::span<const NodeId> ids);

/// A node id with its (squared) distance to some query. Ordered by
/// (dist, id) so that equal distances resolve to the lower id everywhere.
struct ScoredId {
  Scalar dist = 0;
  NodeId id = 0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

inline bool scored_less(const ScoredId& a, const ScoredId& b) {
  return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
}

}  // namespace phnsw
