#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lgss/util.hpp"

namespace lgss {

// Named tensors packed into one flat parameter vector. A single contiguous
// buffer keeps the optimizer, gradient clipping, finite-difference probes and
// checkpointing trivial; modules address their weights through views.
struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  int offset = 0;
};

class TensorLayout {
 public:
  int add(const std::string& name, int rows, int cols) {
    specs_.push_back({name, rows, cols, total_});
    total_ += rows * cols;
    return static_cast<int>(specs_.size()) - 1;
  }

  int total() const { return total_; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  const TensorSpec& spec(int idx) const { return specs_[static_cast<size_t>(idx)]; }

  int find(const std::string& name) const {
    for (size_t i = 0; i < specs_.size(); ++i) {
      if (specs_[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

 private:
  std::vector<TensorSpec> specs_;
  int total_ = 0;
};

inline Eigen::Map<Eigen::MatrixXd> tensor_view(Eigen::VectorXd& flat, const TensorSpec& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}

inline Eigen::Map<const Eigen::MatrixXd> tensor_view(const Eigen::VectorXd& flat,
                                                     const TensorSpec& s) {
  return {flat.data() + s.offset, s.rows, s.cols};
}

}  // namespace lgss
