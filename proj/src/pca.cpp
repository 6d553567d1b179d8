#include "phnsw/pca.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <vector>

namespace phnsw {

namespace {

using Matrixd = Eigen::MatrixXd;
using Vectord = Eigen::VectorXd;

// Negate the row when its largest-magnitude entry (lowest index on ties) is
// negative.
void normalize_sign(Eigen::Ref<Eigen::RowVectorXd> row) {
  Eigen::Index pivot = 0;
  double best = -1.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    double mag = std::abs(row[j]);
    if (mag > best) {
      best = mag;
      pivot = j;
    }
  }
  if (row[pivot] < 0.0) {
    row = -row;
  }
}

bool lex_less(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] != b[j]) return a[j] < b[j];
  }
  return false;
}

}  // namespace

PcaModel PcaModel::identity(Eigen::Index dim) {
  PcaModel m;
  m.mean = Vector::Zero(dim);
  m.components = Matrix::Identity(dim, dim);
  return m;
}

PcaModel pca_fit(const Dataset& ds, Eigen::Index d_low) {
  const Eigen::Index n = ds.size();
  const Eigen::Index d = ds.dim();
  if (d_low < 1 || d_low > d) {
    throw std::invalid_argument("pca_fit: d_low must be in [1, dim]");
  }
  if (n < 2) {
    throw std::invalid_argument("pca_fit: need at least 2 vectors");
  }

  Matrixd x = ds.matrix().cast<double>();
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Matrixd cov = (x.adjoint() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrixd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca_fit: eigendecomposition failed");
  }

  // Eigen returns eigenvalues ascending; take the top d_low, descending.
  std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(d_low));
  std::vector<double> values(static_cast<std::size_t>(d_low));
  for (Eigen::Index i = 0; i < d_low; ++i) {
    Eigen::Index col = d - 1 - i;
    rows[static_cast<std::size_t>(i)] = solver.eigenvectors().col(col).transpose();
    values[static_cast<std::size_t>(i)] = solver.eigenvalues()[col];
    normalize_sign(rows[static_cast<std::size_t>(i)]);
  }

  // Deterministic order inside runs of exactly equal eigenvalues.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return lex_less(rows[a], rows[b]);
  });

  PcaModel model;
  model.mean = mean.cast<Scalar>();
  model.components.resize(d_low, d);
  for (Eigen::Index i = 0; i < d_low; ++i) {
    model.components.row(i) = rows[order[static_cast<std::size_t>(i)]].cast<Scalar>();
  }
  return model;
}

Vector pca_project(const PcaModel& m, Eigen::Ref<const Vector> v) {
  if (v.size() != m.d_high()) {
    throw std::invalid_argument("pca_project: expected dim " +
                                std::to_string(m.d_high()) + ", got " +
                                std::to_string(v.size()));
  }
  return (v - m.mean) * m.components.transpose();
}

Dataset pca_project_all(const PcaModel& m, const Dataset& ds) {
  if (ds.dim() != m.d_high()) {
    throw std::invalid_argument("pca_project_all: dataset dim mismatch");
  }
  Matrix out(ds.size(), m.d_low());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    out.row(i) = pca_project(m, ds.matrix().row(i));
  }
  return Dataset(std::move(out));
}

}  // namespace phnsw
