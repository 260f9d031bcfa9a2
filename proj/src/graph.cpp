#include "prom/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace prom {

namespace {

Mat stable_sigmoid(const Mat& x) {
  Mat y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x(i);
    if (v >= 0.0) {
      y(i) = 1.0 / (1.0 + std::exp(-v));
    } else {
      double e = std::exp(v);
      y(i) = e / (1.0 + e);
    }
  }
  return y;
}

}  // namespace

Graph::NodeRef Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

Mat& Graph::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Graph::NodeRef Graph::constant(Mat v) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(v);
  return push(std::move(n));
}

Graph::NodeRef Graph::parameter(const std::string& name, const Mat& v) {
  Node n;
  n.op = Op::kParam;
  n.value = v;
  n.param_name = name;
  return push(std::move(n));
}

Graph::NodeRef Graph::matmul(NodeRef a, NodeRef b, bool trans_a,
                             bool trans_b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  Node n;
  n.op = Op::kMatmul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.flag0 = trans_a;
  n.flag1 = trans_b;
  if (!trans_a && !trans_b) n.value = A * B;
  else if (trans_a && !trans_b) n.value = A.transpose() * B;
  else if (!trans_a && trans_b) n.value = A * B.transpose();
  else n.value = A.transpose() * B.transpose();
  return push(std::move(n));
}

Graph::NodeRef Graph::add(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::kAdd;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Graph::NodeRef Graph::add_row_bias(NodeRef a, NodeRef bias) {
  Node n;
  n.op = Op::kAddRowBias;
  n.in0 = a.id;
  n.in1 = bias.id;
  n.value = value(a);
  n.value.rowwise() += value(bias).row(0);
  return push(std::move(n));
}

Graph::NodeRef Graph::scale(NodeRef a, double c) {
  Node n;
  n.op = Op::kScale;
  n.in0 = a.id;
  n.c0 = c;
  n.value = c * value(a);
  return push(std::move(n));
}

Graph::NodeRef Graph::scalar_mul(NodeRef a, NodeRef s) {
  Node n;
  n.op = Op::kScalarMul;
  n.in0 = a.id;
  n.in1 = s.id;
  n.value = value(s)(0, 0) * value(a);
  return push(std::move(n));
}

Graph::NodeRef Graph::cwise_mul(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::kCwiseMul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Graph::NodeRef Graph::col_vec_mul(NodeRef a, NodeRef v) {
  Node n;
  n.op = Op::kColVecMul;
  n.in0 = a.id;
  n.in1 = v.id;
  n.value = value(a).array().colwise() * value(v).col(0).array();
  return push(std::move(n));
}

Graph::NodeRef Graph::row_vec_mul(NodeRef a, NodeRef v) {
  Node n;
  n.op = Op::kRowVecMul;
  n.in0 = a.id;
  n.in1 = v.id;
  n.value = value(a).array().rowwise() *
            value(v).col(0).transpose().array();
  return push(std::move(n));
}

Graph::NodeRef Graph::softmax_rows(NodeRef a) {
  const Mat& A = value(a);
  Mat y(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double m = A.row(i).maxCoeff();
    Eigen::Array<double, 1, Eigen::Dynamic> e = (A.row(i).array() - m).exp();
    y.row(i) = (e / e.sum()).matrix();
  }
  Node n;
  n.op = Op::kSoftmaxRows;
  n.in0 = a.id;
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::normalize_rows(NodeRef a) {
  const Mat& A = value(a);
  Node n;
  n.op = Op::kNormalizeRows;
  n.in0 = a.id;
  n.value = A.array().colwise() / A.rowwise().sum().array();
  return push(std::move(n));
}

Graph::NodeRef Graph::sigmoid(NodeRef a) {
  Node n;
  n.op = Op::kSigmoid;
  n.in0 = a.id;
  n.value = stable_sigmoid(value(a));
  return push(std::move(n));
}

Graph::NodeRef Graph::relu(NodeRef a) {
  Node n;
  n.op = Op::kRelu;
  n.in0 = a.id;
  n.value = value(a).cwiseMax(0.0);
  return push(std::move(n));
}

Graph::NodeRef Graph::layer_norm(NodeRef x, NodeRef gain, NodeRef bias,
                                 double eps) {
  const Mat& X = value(x);
  const Mat& G = value(gain);
  const Mat& B = value(bias);
  Mat y(X.rows(), X.cols());
  Mat sigma(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double mu = X.row(i).mean();
    double var = (X.row(i).array() - mu).square().mean();
    double s = std::sqrt(var + eps);
    sigma(i, 0) = s;
    y.row(i) =
        (((X.row(i).array() - mu) / s) * G.row(0).array() + B.row(0).array())
            .matrix();
  }
  Node n;
  n.op = Op::kLayerNorm;
  n.in0 = x.id;
  n.in1 = gain.id;
  n.in2 = bias.id;
  n.c0 = eps;
  n.aux = std::move(sigma);
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::concat_cols(NodeRef a, NodeRef b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  Mat y(A.rows(), A.cols() + B.cols());
  y << A, B;
  Node n;
  n.op = Op::kConcatCols;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::slice_cols(NodeRef a, int first, int width) {
  Node n;
  n.op = Op::kSliceCols;
  n.in0 = a.id;
  n.i0 = first;
  n.i1 = width;
  n.value = value(a).middleCols(first, width);
  return push(std::move(n));
}

Graph::NodeRef Graph::gather_rows(NodeRef table, std::vector<int> ids) {
  const Mat& T = value(table);
  Mat y(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    y.row(static_cast<Eigen::Index>(k)) = T.row(ids[k]);
  }
  Node n;
  n.op = Op::kGatherRows;
  n.in0 = table.id;
  n.ids = std::move(ids);
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::scatter_cols(NodeRef a, std::vector<int> ids,
                                   int width) {
  const Mat& A = value(a);
  Mat y = Mat::Zero(A.rows(), width);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    y.col(ids[k]) += A.col(static_cast<Eigen::Index>(k));
  }
  Node n;
  n.op = Op::kScatterCols;
  n.in0 = a.id;
  n.ids = std::move(ids);
  n.i0 = width;
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::pick_per_row(NodeRef a, std::vector<int> cols) {
  const Mat& A = value(a);
  Mat y(A.rows(), 1);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    y(i, 0) = A(i, cols[static_cast<std::size_t>(i)]);
  }
  Node n;
  n.op = Op::kPickPerRow;
  n.in0 = a.id;
  n.ids = std::move(cols);
  n.value = std::move(y);
  return push(std::move(n));
}

Graph::NodeRef Graph::log(NodeRef a) {
  Node n;
  n.op = Op::kLog;
  n.in0 = a.id;
  n.value = value(a).array().log();
  return push(std::move(n));
}

Graph::NodeRef Graph::one_minus(NodeRef a) {
  Node n;
  n.op = Op::kOneMinus;
  n.in0 = a.id;
  n.value = (1.0 - value(a).array()).matrix();
  return push(std::move(n));
}

Graph::NodeRef Graph::mean_all(NodeRef a) {
  Node n;
  n.op = Op::kMeanAll;
  n.in0 = a.id;
  n.value = Mat::Constant(1, 1, value(a).mean());
  return push(std::move(n));
}

Graph::NodeRef Graph::bce_with_logits_mean(NodeRef z, Mat targets) {
  const Mat& Z = value(z);
  if (Z.cols() != 1 || targets.rows() != Z.rows() || targets.cols() != 1) {
    throw std::invalid_argument("bce_with_logits_mean: need r x 1 inputs");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    double v = Z(i, 0);
    double t = targets(i, 0);
    sum += std::max(v, 0.0) - v * t + std::log1p(std::exp(-std::abs(v)));
  }
  Node n;
  n.op = Op::kBceLogitsMean;
  n.in0 = z.id;
  n.aux = std::move(targets);
  n.value = Mat::Constant(1, 1, sum / static_cast<double>(Z.rows()));
  return push(std::move(n));
}

const Mat& Graph::value(NodeRef r) const {
  return nodes_[static_cast<std::size_t>(r.id)].value;
}

const Mat& Graph::gradient(NodeRef r) const {
  return nodes_[static_cast<std::size_t>(r.id)].grad;
}

void Graph::backward(NodeRef loss) {
  Node& top = nodes_[static_cast<std::size_t>(loss.id)];
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be 1 x 1");
  }
  grad_buffer(loss.id)(0, 0) += 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kConst:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        const Mat& A = nodes_[n.in0].value;
        const Mat& B = nodes_[n.in1].value;
        if (!n.flag0 && !n.flag1) {
          grad_buffer(n.in0) += g * B.transpose();
          grad_buffer(n.in1) += A.transpose() * g;
        } else if (n.flag0 && !n.flag1) {
          grad_buffer(n.in0) += B * g.transpose();
          grad_buffer(n.in1) += A * g;
        } else if (!n.flag0 && n.flag1) {
          grad_buffer(n.in0) += g * B;
          grad_buffer(n.in1) += g.transpose() * A;
        } else {
          grad_buffer(n.in0) += B.transpose() * g.transpose();
          grad_buffer(n.in1) += g.transpose() * A.transpose();
        }
        break;
      }
      case Op::kAdd:
        grad_buffer(n.in0) += g;
        grad_buffer(n.in1) += g;
        break;
      case Op::kAddRowBias:
        grad_buffer(n.in0) += g;
        grad_buffer(n.in1) += g.colwise().sum();
        break;
      case Op::kScale:
        grad_buffer(n.in0) += n.c0 * g;
        break;
      case Op::kScalarMul: {
        const Mat& A = nodes_[n.in0].value;
        double s = nodes_[n.in1].value(0, 0);
        grad_buffer(n.in0) += s * g;
        grad_buffer(n.in1)(0, 0) += g.cwiseProduct(A).sum();
        break;
      }
      case Op::kCwiseMul: {
        const Mat& A = nodes_[n.in0].value;
        const Mat& B = nodes_[n.in1].value;
        grad_buffer(n.in0) += g.cwiseProduct(B);
        grad_buffer(n.in1) += g.cwiseProduct(A);
        break;
      }
      case Op::kColVecMul: {
        const Mat& A = nodes_[n.in0].value;
        const Mat& v = nodes_[n.in1].value;
        grad_buffer(n.in0) +=
            (g.array().colwise() * v.col(0).array()).matrix();
        grad_buffer(n.in1) += g.cwiseProduct(A).rowwise().sum();
        break;
      }
      case Op::kRowVecMul: {
        const Mat& A = nodes_[n.in0].value;
        const Mat& v = nodes_[n.in1].value;
        grad_buffer(n.in0) +=
            (g.array().rowwise() * v.col(0).transpose().array()).matrix();
        grad_buffer(n.in1) +=
            g.cwiseProduct(A).colwise().sum().transpose();
        break;
      }
      case Op::kSoftmaxRows: {
        const Mat& y = n.value;
        Eigen::VectorXd rowdot = g.cwiseProduct(y).rowwise().sum();
        grad_buffer(n.in0) +=
            y.cwiseProduct((g.array().colwise() - rowdot.array()).matrix());
        break;
      }
      case Op::kNormalizeRows: {
        const Mat& A = nodes_[n.in0].value;
        const Mat& y = n.value;
        Eigen::VectorXd s = A.rowwise().sum();
        Eigen::VectorXd rowdot = g.cwiseProduct(y).rowwise().sum();
        grad_buffer(n.in0) +=
            ((g.array().colwise() - rowdot.array()).colwise() /
             s.array())
                .matrix();
        break;
      }
      case Op::kSigmoid: {
        const Mat& y = n.value;
        grad_buffer(n.in0) += g.cwiseProduct(
            y.cwiseProduct((1.0 - y.array()).matrix()));
        break;
      }
      case Op::kRelu: {
        const Mat& x = nodes_[n.in0].value;
        grad_buffer(n.in0) +=
            g.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
        break;
      }
      case Op::kLayerNorm: {
        const Mat& X = nodes_[n.in0].value;
        const Mat& G = nodes_[n.in1].value;
        const Mat& sigma = n.aux;
        const Eigen::Index cols = X.cols();
        Mat dX(X.rows(), cols);
        Mat dGain = Mat::Zero(1, cols);
        Mat dBias = Mat::Zero(1, cols);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
          double mu = X.row(i).mean();
          double s = sigma(i, 0);
          Eigen::Array<double, 1, Eigen::Dynamic> xhat =
              (X.row(i).array() - mu) / s;
          Eigen::Array<double, 1, Eigen::Dynamic> dy = g.row(i).array();
          Eigen::Array<double, 1, Eigen::Dynamic> dxhat =
              dy * G.row(0).array();
          dGain.row(0).array() += dy * xhat;
          dBias.row(0).array() += dy;
          double m1 = dxhat.mean();
          double m2 = (dxhat * xhat).mean();
          dX.row(i) = ((dxhat - m1 - xhat * m2) / s).matrix();
        }
        grad_buffer(n.in0) += dX;
        grad_buffer(n.in1) += dGain;
        grad_buffer(n.in2) += dBias;
        break;
      }
      case Op::kConcatCols: {
        const Eigen::Index ca = nodes_[n.in0].value.cols();
        const Eigen::Index cb = nodes_[n.in1].value.cols();
        grad_buffer(n.in0) += g.leftCols(ca);
        grad_buffer(n.in1) += g.rightCols(cb);
        break;
      }
      case Op::kSliceCols:
        grad_buffer(n.in0).middleCols(n.i0, n.i1) += g;
        break;
      case Op::kGatherRows: {
        Mat& dT = grad_buffer(n.in0);
        for (std::size_t k = 0; k < n.ids.size(); ++k) {
          dT.row(n.ids[k]) += g.row(static_cast<Eigen::Index>(k));
        }
        break;
      }
      case Op::kScatterCols: {
        Mat& dA = grad_buffer(n.in0);
        for (std::size_t k = 0; k < n.ids.size(); ++k) {
          dA.col(static_cast<Eigen::Index>(k)) += g.col(n.ids[k]);
        }
        break;
      }
      case Op::kPickPerRow: {
        Mat& dA = grad_buffer(n.in0);
        for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
          dA(i, n.ids[static_cast<std::size_t>(i)]) += g(i, 0);
        }
        break;
      }
      case Op::kLog: {
        const Mat& x = nodes_[n.in0].value;
        grad_buffer(n.in0) += g.cwiseQuotient(x);
        break;
      }
      case Op::kOneMinus:
        grad_buffer(n.in0) -= g;
        break;
      case Op::kMeanAll: {
        const Mat& x = nodes_[n.in0].value;
        grad_buffer(n.in0).array() +=
            g(0, 0) / static_cast<double>(x.size());
        break;
      }
      case Op::kBceLogitsMean: {
        const Mat& Z = nodes_[n.in0].value;
        Mat sig = stable_sigmoid(Z);
        grad_buffer(n.in0) +=
            (g(0, 0) / static_cast<double>(Z.rows())) * (sig - n.aux);
        break;
      }
    }
  }
}

std::map<std::string, Mat> Graph::parameter_gradients() const {
  std::map<std::string, Mat> out;
  for (const Node& n : nodes_) {
    if (n.op != Op::kParam) continue;
    Mat g = n.grad.size() != 0
                ? n.grad
                : Mat::Zero(n.value.rows(), n.value.cols());
    auto it = out.find(n.param_name);
    if (it == out.end()) {
      out.emplace(n.param_name, std::move(g));
    } else {
      it->second += g;
    }
  }
  return out;
}

}  // namespace prom
