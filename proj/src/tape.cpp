#include "gdpw/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace gdpw::tape {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

bool needs_grad(Var a) { return a.tape->node(a.id).requires_grad; }

// Registers a node and wires its backward closure to the fresh id.
Var make_node(Tape* t, Mat value, bool requires_grad,
              const std::function<void(int)>& backward_for) {
    Var out = t->emplace(std::move(value), requires_grad, nullptr);
    if (requires_grad) {
        t->node(out.id).backward = [backward_for, oi = out.id]() { backward_for(oi); };
    }
    return out;
}

}  // namespace

const Mat& Var::value() const { return tape->node(id).value; }
const Mat& Var::grad() const { return tape->node(id).grad; }

double Var::scalar() const {
    const Mat& v = value();
    require(v.rows() == 1 && v.cols() == 1, "scalar() on a non 1x1 node");
    return v(0, 0);
}

Var Tape::leaf(Mat value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::emplace(Mat value, bool requires_grad, std::function<void()> backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Mat& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad) return;
    require(g.rows() == n.value.rows() && g.cols() == n.value.cols(), "gradient shape mismatch");
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

void Tape::accumulate_rows(int id, const std::vector<int>& indices, const Mat& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad) return;
    require(static_cast<size_t>(g.rows()) == indices.size() && g.cols() == n.value.cols(),
            "row gradient shape mismatch");
    if (n.grad.size() == 0) {
        n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    }
    for (size_t i = 0; i < indices.size(); ++i) {
        n.grad.row(indices[i]) += g.row(static_cast<int>(i));
    }
}

void Tape::backward(Var loss) {
    require(loss.tape == this, "loss lives on a different tape");
    require(loss.value().rows() == 1 && loss.value().cols() == 1, "loss must be 1x1");
    if (!node(loss.id).requires_grad) return;
    node(loss.id).grad = Mat::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.requires_grad && n.backward && n.grad.size() != 0) {
            n.backward();
        }
    }
}

Var matmul(Var a, Var b) {
    require(a.cols() == b.rows(), "matmul shape mismatch");
    Tape* t = a.tape;
    return make_node(t, a.value() * b.value(), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g * t->node(bi).value.transpose());
                         t->accumulate(bi, t->node(ai).value.transpose() * g);
                     });
}

Var add(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
    Tape* t = a.tape;
    return make_node(t, a.value() + b.value(), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g);
                         t->accumulate(bi, g);
                     });
}

Var add_n(const std::vector<Var>& terms) {
    require(!terms.empty(), "add_n of an empty list");
    Tape* t = terms.front().tape;
    Mat value = terms.front().value();
    bool rg = needs_grad(terms.front());
    std::vector<int> ids = {terms.front().id};
    for (size_t i = 1; i < terms.size(); ++i) {
        require(terms[i].rows() == terms.front().rows() &&
                    terms[i].cols() == terms.front().cols(),
                "add_n shape mismatch");
        value += terms[i].value();
        rg = rg || needs_grad(terms[i]);
        ids.push_back(terms[i].id);
    }
    return make_node(t, std::move(value), rg, [t, ids](int oi) {
        const Mat& g = t->node(oi).grad;
        for (int id : ids) t->accumulate(id, g);
    });
}

Var sub(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
    Tape* t = a.tape;
    return make_node(t, a.value() - b.value(), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g);
                         t->accumulate(bi, -g);
                     });
}

Var scale(Var a, double s) {
    Tape* t = a.tape;
    return make_node(t, a.value() * s, needs_grad(a), [t, ai = a.id, s](int oi) {
        t->accumulate(ai, t->node(oi).grad * s);
    });
}

Var cmul(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "cmul shape mismatch");
    Tape* t = a.tape;
    return make_node(t, a.value().cwiseProduct(b.value()), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g.cwiseProduct(t->node(bi).value));
                         t->accumulate(bi, g.cwiseProduct(t->node(ai).value));
                     });
}

Var add_rowvec(Var a, Var bias) {
    require(bias.rows() == 1 && bias.cols() == a.cols(), "bias must be 1 x cols");
    Tape* t = a.tape;
    Mat value = a.value();
    value.rowwise() += bias.value().row(0);
    return make_node(t, std::move(value), needs_grad(a) || needs_grad(bias),
                     [t, ai = a.id, bi = bias.id](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g);
                         t->accumulate(bi, g.colwise().sum());
                     });
}

Var elu(Var a) {
    Tape* t = a.tape;
    Mat value = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id](int oi) {
        const Mat& g = t->node(oi).grad;
        const Mat& v = t->node(oi).value;
        Mat deriv = v.unaryExpr([](double y) { return y > 0.0 ? 1.0 : y + 1.0; });
        t->accumulate(ai, g.cwiseProduct(deriv));
    });
}

Var sigmoid(Var a) {
    Tape* t = a.tape;
    Mat value = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id](int oi) {
        const Mat& g = t->node(oi).grad;
        const Mat& v = t->node(oi).value;
        t->accumulate(ai, g.cwiseProduct(v.cwiseProduct(Mat::Ones(v.rows(), v.cols()) - v)));
    });
}

Var tanh_op(Var a) {
    Tape* t = a.tape;
    Mat value = a.value().unaryExpr([](double x) { return std::tanh(x); });
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id](int oi) {
        const Mat& g = t->node(oi).grad;
        const Mat& v = t->node(oi).value;
        Mat deriv = Mat::Ones(v.rows(), v.cols()) - v.cwiseProduct(v);
        t->accumulate(ai, g.cwiseProduct(deriv));
    });
}

Var softplus(Var a) {
    Tape* t = a.tape;
    Mat value = a.value().unaryExpr([](double x) { return stable_softplus(x); });
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id](int oi) {
        const Mat& g = t->node(oi).grad;
        Mat deriv = t->node(ai).value.unaryExpr([](double x) { return stable_sigmoid(x); });
        t->accumulate(ai, g.cwiseProduct(deriv));
    });
}

Var spmm(const SpMat& s, Var x) {
    require(s.cols() == x.rows(), "spmm shape mismatch");
    Tape* t = x.tape;
    auto st = std::make_shared<SpMat>(s.transpose());
    return make_node(t, s * x.value(), needs_grad(x), [t, xi = x.id, st](int oi) {
        t->accumulate(xi, (*st) * t->node(oi).grad);
    });
}

Var transpose(Var a) {
    Tape* t = a.tape;
    return make_node(t, a.value().transpose(), needs_grad(a), [t, ai = a.id](int oi) {
        t->accumulate(ai, t->node(oi).grad.transpose());
    });
}

Var rows(Var a, std::vector<int> indices) {
    Tape* t = a.tape;
    Mat value(static_cast<int>(indices.size()), a.cols());
    for (size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] >= 0 && indices[i] < a.rows(), "row index out of range");
        value.row(static_cast<int>(i)) = a.value().row(indices[i]);
    }
    return make_node(t, std::move(value), needs_grad(a),
                     [t, ai = a.id, idx = std::move(indices)](int oi) {
                         t->accumulate_rows(ai, idx, t->node(oi).grad);
                     });
}

Var row(Var a, int index) { return rows(a, std::vector<int>{index}); }

Var slice_cols(Var a, int start, int len) {
    require(start >= 0 && len > 0 && start + len <= a.cols(), "slice_cols out of range");
    Tape* t = a.tape;
    return make_node(t, a.value().middleCols(start, len), needs_grad(a),
                     [t, ai = a.id, start, len](int oi) {
                         const Mat& g = t->node(oi).grad;
                         Tape::Node& n = t->node(ai);
                         if (!n.requires_grad) return;
                         if (n.grad.size() == 0) {
                             n.grad = Mat::Zero(n.value.rows(), n.value.cols());
                         }
                         n.grad.middleCols(start, len) += g;
                     });
}

Var concat_cols(Var a, Var b) {
    require(a.rows() == b.rows(), "concat_cols row mismatch");
    Tape* t = a.tape;
    Mat value(a.rows(), a.cols() + b.cols());
    value << a.value(), b.value();
    const int ca = a.cols(), cb = b.cols();
    return make_node(t, std::move(value), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id, ca, cb](int oi) {
                         const Mat& g = t->node(oi).grad;
                         t->accumulate(ai, g.leftCols(ca));
                         t->accumulate(bi, g.rightCols(cb));
                     });
}

Var stack_rows(const std::vector<Var>& row_vars) {
    require(!row_vars.empty(), "stack_rows of an empty list");
    Tape* t = row_vars.front().tape;
    const int d = row_vars.front().cols();
    Mat value(static_cast<int>(row_vars.size()), d);
    bool rg = false;
    std::vector<int> ids;
    ids.reserve(row_vars.size());
    for (size_t i = 0; i < row_vars.size(); ++i) {
        require(row_vars[i].rows() == 1 && row_vars[i].cols() == d, "stack_rows expects 1 x d");
        value.row(static_cast<int>(i)) = row_vars[i].value();
        rg = rg || needs_grad(row_vars[i]);
        ids.push_back(row_vars[i].id);
    }
    return make_node(t, std::move(value), rg, [t, ids](int oi) {
        const Mat& g = t->node(oi).grad;
        for (size_t i = 0; i < ids.size(); ++i) {
            t->accumulate(ids[i], g.row(static_cast<int>(i)));
        }
    });
}

Var mean_rows(Var a) {
    Tape* t = a.tape;
    const int m = a.rows();
    return make_node(t, a.value().colwise().mean(), needs_grad(a), [t, ai = a.id, m](int oi) {
        const Mat& g = t->node(oi).grad;
        t->accumulate(ai, g.replicate(m, 1) / static_cast<double>(m));
    });
}

Var row_means(Var a) {
    Tape* t = a.tape;
    const int d = a.cols();
    Mat value = a.value().rowwise().mean();
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id, d](int oi) {
        const Mat& g = t->node(oi).grad;
        t->accumulate(ai, g.replicate(1, d) / static_cast<double>(d));
    });
}

Var softmax_col(Var a) {
    require(a.cols() == 1, "softmax_col expects m x 1");
    Tape* t = a.tape;
    const double mx = a.value().maxCoeff();
    Mat e = (a.value().array() - mx).exp();
    Mat value = e / e.sum();
    return make_node(t, std::move(value), needs_grad(a), [t, ai = a.id](int oi) {
        const Mat& g = t->node(oi).grad;
        const Mat& s = t->node(oi).value;
        const double inner = (g.array() * s.array()).sum();
        t->accumulate(ai, s.cwiseProduct(g - Mat::Constant(g.rows(), 1, inner)));
    });
}

Var dot(Var a, Var b) {
    require(a.rows() == 1 && b.rows() == 1 && a.cols() == b.cols(), "dot expects 1 x d pairs");
    Tape* t = a.tape;
    Mat value(1, 1);
    value(0, 0) = (a.value().array() * b.value().array()).sum();
    return make_node(t, std::move(value), needs_grad(a) || needs_grad(b),
                     [t, ai = a.id, bi = b.id](int oi) {
                         const double g = t->node(oi).grad(0, 0);
                         t->accumulate(ai, g * t->node(bi).value);
                         t->accumulate(bi, g * t->node(ai).value);
                     });
}

Var ce_softmax(Var logits, int target) {
    require(logits.rows() == 1, "ce_softmax expects 1 x n logits");
    require(target >= 0 && target < logits.cols(), "ce_softmax target out of range");
    Tape* t = logits.tape;
    const Mat& x = logits.value();
    const double mx = x.maxCoeff();
    const double lse = mx + std::log((x.array() - mx).exp().sum());
    Mat value(1, 1);
    value(0, 0) = lse - x(0, target);
    return make_node(t, std::move(value), needs_grad(logits),
                     [t, li = logits.id, target, lse](int oi) {
                         const double g = t->node(oi).grad(0, 0);
                         Mat p = (t->node(li).value.array() - lse).exp();
                         p(0, target) -= 1.0;
                         t->accumulate(li, g * p);
                     });
}

Var mse_scalar(Var pred, double target) {
    require(pred.rows() == 1 && pred.cols() == 1, "mse_scalar expects 1 x 1");
    Tape* t = pred.tape;
    const double diff = pred.value()(0, 0) - target;
    Mat value(1, 1);
    value(0, 0) = diff * diff;
    return make_node(t, std::move(value), needs_grad(pred), [t, pi = pred.id, target](int oi) {
        const double g = t->node(oi).grad(0, 0);
        Mat d(1, 1);
        d(0, 0) = g * 2.0 * (t->node(pi).value(0, 0) - target);
        t->accumulate(pi, d);
    });
}

Var affinity_row(Var phi1, Var phi2, int p, Vec weights) {
    require(phi1.cols() == 1 && phi2.cols() == 1, "affinity_row expects n x 1 inputs");
    require(phi1.rows() == phi2.rows(), "affinity_row size mismatch");
    require(weights.size() == phi1.rows(), "affinity_row weight size mismatch");
    require(p >= 0 && p < phi1.rows(), "affinity_row index out of range");
    Tape* t = phi1.tape;
    const int n = phi1.rows();
    Mat value(1, n);
    const double p1 = phi1.value()(p, 0);
    for (int j = 0; j < n; ++j) {
        value(0, j) = (p1 + phi2.value()(j, 0)) * weights(j);
    }
    auto w = std::make_shared<Vec>(std::move(weights));
    return make_node(t, std::move(value), needs_grad(phi1) || needs_grad(phi2),
                     [t, ai = phi1.id, bi = phi2.id, p, w](int oi) {
                         const Mat& g = t->node(oi).grad;
                         Mat gw = g.transpose().cwiseProduct(*w);
                         Mat g1(1, 1);
                         g1(0, 0) = gw.sum();
                         t->accumulate_rows(ai, std::vector<int>{p}, g1);
                         t->accumulate(bi, gw);
                     });
}

}  // namespace gdpw::tape
