#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace prom {

using Mat = Eigen::MatrixXd;

// Small reverse-mode tape over dense matrices. Ops record their inputs;
// backward() walks the tape once in reverse, accumulating adjoints. Values
// are eager, so a Graph doubles as a straight-line forward evaluator.
class Graph {
 public:
  struct NodeRef {
    int id = -1;
  };

  NodeRef constant(Mat v);
  NodeRef parameter(const std::string& name, const Mat& v);

  // C = op_a(A) * op_b(B) with optional transposes.
  NodeRef matmul(NodeRef a, NodeRef b, bool trans_a = false,
                 bool trans_b = false);
  NodeRef add(NodeRef a, NodeRef b);
  // A (r x c) plus row vector (1 x c), broadcast over rows.
  NodeRef add_row_bias(NodeRef a, NodeRef bias);
  NodeRef scale(NodeRef a, double c);
  // s is 1x1: C = s * A.
  NodeRef scalar_mul(NodeRef a, NodeRef s);
  NodeRef cwise_mul(NodeRef a, NodeRef b);
  // v (r x 1): scales row i of A by v(i).
  NodeRef col_vec_mul(NodeRef a, NodeRef v);
  // v (c x 1): scales column j of A by v(j).
  NodeRef row_vec_mul(NodeRef a, NodeRef v);
  NodeRef softmax_rows(NodeRef a);
  // Divides each row by its sum (requires positive row sums).
  NodeRef normalize_rows(NodeRef a);
  NodeRef sigmoid(NodeRef a);
  NodeRef relu(NodeRef a);
  // Row-wise layer norm with learned gain/bias (1 x c each).
  NodeRef layer_norm(NodeRef x, NodeRef gain, NodeRef bias,
                     double eps = 1e-5);
  NodeRef concat_cols(NodeRef a, NodeRef b);
  NodeRef slice_cols(NodeRef a, int first, int width);
  // Gathers rows of a table; repeated ids accumulate gradient.
  NodeRef gather_rows(NodeRef table, std::vector<int> ids);
  // C (r x width) with C[:, ids[k]] += A[:, k]; duplicate ids sum.
  NodeRef scatter_cols(NodeRef a, std::vector<int> ids, int width);
  // out(i, 0) = A(i, cols[i]).
  NodeRef pick_per_row(NodeRef a, std::vector<int> cols);
  NodeRef log(NodeRef a);
  NodeRef one_minus(NodeRef a);
  NodeRef mean_all(NodeRef a);
  // Mean over rows of binary cross-entropy between sigmoid(z) and targets,
  // computed from logits (z and targets are r x 1).
  NodeRef bce_with_logits_mean(NodeRef z, Mat targets);

  const Mat& value(NodeRef r) const;
  // Seeds d(loss)/d(loss) = 1 and accumulates adjoints down the tape.
  void backward(NodeRef loss);
  // Adjoints of all parameter leaves (zeros when untouched by backward).
  std::map<std::string, Mat> parameter_gradients() const;
  const Mat& gradient(NodeRef r) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kConst, kParam, kMatmul, kAdd, kAddRowBias, kScale, kScalarMul,
    kCwiseMul, kColVecMul, kRowVecMul, kSoftmaxRows, kNormalizeRows,
    kSigmoid, kRelu, kLayerNorm, kConcatCols, kSliceCols, kGatherRows,
    kScatterCols, kPickPerRow, kLog, kOneMinus, kMeanAll, kBceLogitsMean
  };

  struct Node {
    Op op;
    int in0 = -1, in1 = -1, in2 = -1;
    bool flag0 = false, flag1 = false;
    int i0 = 0, i1 = 0;
    double c0 = 0.0;
    std::vector<int> ids;
    Mat aux;  // op-specific (e.g. BCE targets)
    Mat value;
    Mat grad;
    std::string param_name;
  };

  NodeRef push(Node node);
  Mat& grad_buffer(int id);

  std::vector<Node> nodes_;
};

}  // namespace prom
