#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gdpw/common.hpp"

namespace gdpw::tape {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Mat& value() const;
    const Mat& grad() const;
    int rows() const { return static_cast<int>(value().rows()); }
    int cols() const { return static_cast<int>(value().cols()); }
    double scalar() const;
};

// Record of one forward value plus the closure that pushes its gradient to
// its inputs. Nodes whose inputs carry no gradient store no closure.
class Tape {
  public:
    struct Node {
        Mat value;
        Mat grad;
        bool requires_grad = false;
        std::function<void()> backward;
    };

    Var leaf(Mat value, bool requires_grad);
    Var constant(Mat value) { return leaf(std::move(value), false); }

    // Seeds d(loss)/d(loss) = 1 and runs all closures in reverse order.
    void backward(Var loss);

    void accumulate(int id, const Mat& g);
    void accumulate_rows(int id, const std::vector<int>& indices, const Mat& g);
    const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
    Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
    size_t size() const { return nodes_.size(); }

    Var emplace(Mat value, bool requires_grad, std::function<void()> backward);

  private:
    std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_n(const std::vector<Var>& terms);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var cmul(Var a, Var b);
Var add_rowvec(Var a, Var bias);  // bias is 1 x cols(a), broadcast over rows

Var elu(Var a);
Var sigmoid(Var a);
Var tanh_op(Var a);
Var softplus(Var a);

// Constant sparse times dense variable.
Var spmm(const SpMat& s, Var x);

Var transpose(Var a);
Var rows(Var a, std::vector<int> indices);  // gather; repeated rows accumulate
Var row(Var a, int index);
Var slice_cols(Var a, int start, int len);
Var concat_cols(Var a, Var b);
Var stack_rows(const std::vector<Var>& row_vars);  // each 1 x d

Var mean_rows(Var a);     // m x d -> 1 x d
Var row_means(Var a);     // m x d -> m x 1, mean over columns
Var softmax_col(Var a);   // m x 1 -> m x 1, softmax over rows
Var dot(Var a, Var b);    // both 1 x d -> 1 x 1

// Cross-entropy of a softmax over one row of logits against a target index.
Var ce_softmax(Var logits, int target);

// Squared error of a 1 x 1 prediction against a constant target.
Var mse_scalar(Var pred, double target);

// Row p of (phi1 1^T + 1 phi2^T) elementwise the constant row weights:
// out_j = (phi1[p] + phi2[j]) * w[j]. phi1 and phi2 are n x 1.
Var affinity_row(Var phi1, Var phi2, int p, Vec weights);

}  // namespace gdpw::tape
