#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adk/errors.hpp"

namespace adk {

using RowMatrixXf =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major f32 tensor. Rank 1 and 2 cover everything this pipeline
// needs; sums over the vocabulary dimension accumulate in f64 inside the ops.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor scalar(float v) { return Tensor({1}, {v}); }
    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& storage() { return data_; }
    const std::vector<float>& storage() const { return data_; }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // rank-2 access, row-major
    float& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    float at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    int rows() const { return shape_[0]; }
    int cols() const { return rank() == 2 ? shape_[1] : 1; }

    bool all_finite() const;
    // index of the first non-finite element, or -1
    std::int64_t first_non_finite() const;

    Eigen::Map<RowMatrixXf> mat();
    Eigen::Map<const RowMatrixXf> mat() const;
    Eigen::Map<Eigen::VectorXf> vec();
    Eigen::Map<const Eigen::VectorXf> vec() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

  private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

std::string shape_to_string(const std::vector<int>& shape);

// FNV-1a over the raw f32 bytes; used for frozen-parameter checks.
std::uint64_t bytes_checksum(const Tensor& t, std::uint64_t seed = 0xcbf29ce484222325ULL);

// ---------------------------------------------------------------------------
// "ADK1" binary tensor container: per tensor, magic bytes "ADK1", u32 LE rank,
// u32 LE dims, raw f32 LE payload. A file holds one or more records.
// Round-trips are bit-exact.
// ---------------------------------------------------------------------------

void save_tensor_container(const std::string& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> load_tensor_container(const std::string& path);

}  // namespace adk
