#include "momt/model.hpp"

namespace momt {

std::size_t BlockDiagonal::add_block(int size) {
  const std::size_t value_offset = values_.size();
  blocks_.push_back({dim_, size, value_offset});
  dim_ += static_cast<std::size_t>(size);
  values_.resize(value_offset + static_cast<std::size_t>(size) * size, 0.0);
  inverse_.resize(values_.size(), 0.0);
  return blocks_.size() - 1;
}

namespace {

Eigen::VectorXd apply_blocks(const std::vector<BlockDiagonal::Block>& blocks,
                             const std::vector<double>& values, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  for (const auto& b : blocks) {
    const double* m = values.data() + b.value_offset;
    for (int i = 0; i < b.size; ++i) {
      double s = 0.0;
      for (int j = 0; j < b.size; ++j) s += m[i * b.size + j] * x[b.offset + j];
      y[b.offset + i] = s;
    }
  }
  return y;
}

}  // namespace

Eigen::VectorXd BlockDiagonal::apply(const Eigen::VectorXd& x) const {
  return apply_blocks(blocks_, values_, x);
}

Eigen::VectorXd BlockDiagonal::apply_inverse(const Eigen::VectorXd& x) const {
  return apply_blocks(blocks_, inverse_, x);
}

}  // namespace momt
