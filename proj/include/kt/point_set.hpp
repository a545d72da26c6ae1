#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kt/error.hpp"

namespace kt {

using Index = std::size_t;
using Point = std::span<const double>;

// An ordered sequence of d-dimensional points stored row-major.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(std::size_t dim) : dim_(dim) {}

  PointSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() % dim_ != 0) {
      throw DataError("point data length is not a multiple of the dimension");
    }
  }

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return data_.empty(); }

  Point operator[](Index i) const noexcept { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(Index i) noexcept { return {data_.data() + i * dim_, dim_}; }

  void push_back(Point p) {
    if (p.size() != dim_) throw DataError("point dimension does not match the point set");
    data_.insert(data_.end(), p.begin(), p.end());
  }

  // Points at the given positions, in order.
  PointSet subset(std::span<const Index> indices) const {
    PointSet out(dim_);
    out.data_.reserve(indices.size() * dim_);
    for (Index i : indices) out.push_back((*this)[i]);
    return out;
  }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace kt
