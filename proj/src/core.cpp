#include "phnsw/core.hpp"

namespace phnsw {

Dataset dataset_slice(const Dataset& ds, std::span<const NodeId> ids) {
  if (ids.empty()) {
    throw std::invalid_argument("dataset_slice: empty id list");
  }
  Matrix out(static_cast<Eigen::Index>(ids.size()), ds.dim());
  Eigen::Index row = 0;
  for (NodeId id : ids) {
    if (id >= ds.size()) {
      throw std::out_of_range("dataset_slice: id " + std::to_string(id) +
                              " out of range (N=" + std::to_string(ds.size()) + ")");
    }
    out.row(row++) = ds.matrix().row(static_cast<Eigen::Index>(id));
  }
  return Dataset(std::move(out));
}

}  // namespace phnsw
