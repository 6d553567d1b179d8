#pragma once

#include "phnsw/core.hpp"

namespace phnsw {

/// Orthogonal projection d_high -> d_low fitted on a dataset.
///
/// `components` holds d_low orthonormal rows of length d_high, ordered by
/// non-increasing explained variance. Rows are sign-normalized: a row is
/// negated when its largest-magnitude entry (lowest index on ties) is
/// negative, so fits are deterministic and comparable across runs.
/// Immutable after construction; safe for concurrent projection.
struct PcaModel {
  Vector mean;        // 1 x d_high
  Matrix components;  // d_low x d_high, orthonormal rows

  Eigen::Index d_high() const { return mean.size(); }
  Eigen::Index d_low() const { return components.rows(); }

  /// Model with zero mean and identity components (d_low == d_high).
  static PcaModel identity(Eigen::Index dim);
};

/// Fit by eigendecomposition of the sample covariance of the mean-centered
/// dataset (accumulated in double). Components are the top-d_low eigenvectors
/// by eigenvalue descending; exactly tied eigenvalues are ordered by the
/// lexicographic order of the sign-normalized rows.
PcaModel pca_fit(const Dataset& ds, Eigen::Index d_low);

/// W * (v - mean).
Vector pca_project(const PcaModel& m, Eigen::Ref<const Vector> v);

/// Row-wise pca_project over the whole dataset, order preserved. Each output
/// row is bitwise identical to pca_project of the corresponding input row.
Dataset pca_project_all(const PcaModel& m, const Dataset& ds);

}  // namespace phnsw
