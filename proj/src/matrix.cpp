#include "slimbench/matrix.hpp"

#include <cmath>

#include "slimbench/error.hpp"

namespace slimbench {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dims, std::vector<double> data,
                                 bool normalized)
    : ids_(std::move(ids)), dims_(dims), data_(std::move(data)), normalized_(normalized) {
  if (dims_ == 0) fail_validation("embedding matrix needs at least one dimension");
  if (data_.size() != ids_.size() * dims_) fail_validation("embedding matrix data does not match rows x dims");
  for (double x : data_) {
    if (!std::isfinite(x)) fail_validation("embedding matrix contains a non-finite entry");
  }
}

}  // namespace slimbench
