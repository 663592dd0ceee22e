#pragma once

#include <Eigen/Core>

namespace swarm {

/// Per-agent block sizes of a stacked gain: agent i owns control rows
/// [i·control_dim, (i+1)·control_dim) and state columns
/// [i·state_dim, (i+1)·state_dim).
struct BlockPartition {
  int n_agents = 1;
  Eigen::Index control_dim = 0;
  Eigen::Index state_dim = 0;
};

using Pattern = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// State feedback u = -F x with an explicit sparsity pattern. Entries of F
/// outside the pattern are exactly zero.
struct FeedbackGain {
  Eigen::MatrixXd F;
  Pattern pattern;
  BlockPartition partition;

  Eigen::Index nnz() const { return pattern.count(); }

  static FeedbackGain dense(const Eigen::MatrixXd& F, BlockPartition partition) {
    return {F, Pattern::Constant(F.rows(), F.cols(), true), partition};
  }
};

}  // namespace swarm
