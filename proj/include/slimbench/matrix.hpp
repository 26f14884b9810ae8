#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace slimbench {

// Row-major M x d embedding matrix; row i belongs to ids[i].
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dims, std::vector<double> data,
                  bool normalized = false);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dims_, dims_}; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dims_, dims_}; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<double>& data() const noexcept { return data_; }

  void mark_normalized(bool value) noexcept { normalized_ = value; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::vector<std::string> ids_;
  std::size_t dims_ = 0;
  std::vector<double> data_;
  bool normalized_ = false;
};

}  // namespace slimbench
