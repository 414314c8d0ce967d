#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gdpw/common.hpp"
#include "gdpw/tape.hpp"

using namespace gdpw;

namespace {

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

Mat random_mat(int rows, int cols, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = lo + u01(rng) * (hi - lo);
    return m;
}

// Values bounded away from zero, for ops with a kink at the origin.
Mat random_mat_nonzero(int rows, int cols, uint64_t seed) {
    Mat m = random_mat(rows, cols, seed);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double sign = m(r, c) < 0.0 ? -1.0 : 1.0;
            if (std::abs(m(r, c)) < 0.2) m(r, c) = 0.2 * sign;
        }
    return m;
}

tape::Var to_scalar(tape::Tape& t, tape::Var v) {
    tape::Var left = t.constant(Mat::Ones(1, v.rows()));
    tape::Var right = t.constant(Mat::Ones(v.cols(), 1));
    return tape::matmul(tape::matmul(left, v), right);
}

// Sum of v weighted by a fixed random matrix, so every entry of v reaches the
// loss with its own coefficient.
tape::Var weighted_sum(tape::Tape& t, tape::Var v, uint64_t seed = 99) {
    Mat w = random_mat(v.rows(), v.cols(), seed, 0.5, 1.5);
    return to_scalar(t, tape::cmul(v, t.constant(w)));
}

using Builder = std::function<tape::Var(tape::Tape&, const std::vector<tape::Var>&)>;

// Central-difference check of d(loss)/d(input) for every input entry.
void check_gradients(const std::string& name, const Builder& build, std::vector<Mat> inputs,
                     double tol = 1e-6, double h = 1e-5) {
    INFO("op: " << name);
    tape::Tape t;
    std::vector<tape::Var> leaves;
    leaves.reserve(inputs.size());
    for (const auto& m : inputs) leaves.push_back(t.leaf(m, true));
    tape::Var loss = build(t, leaves);
    REQUIRE(loss.value().size() == 1);
    t.backward(loss);

    auto loss_at = [&](const std::vector<Mat>& shifted) {
        tape::Tape t2;
        std::vector<tape::Var> lv;
        lv.reserve(shifted.size());
        for (const auto& m : shifted) lv.push_back(t2.leaf(m, true));
        return build(t2, lv).value()(0, 0);
    };

    for (size_t li = 0; li < inputs.size(); ++li) {
        Mat g = leaves[li].grad();
        if (g.size() == 0) g = Mat::Zero(inputs[li].rows(), inputs[li].cols());
        double max_err = 0.0;
        for (int r = 0; r < inputs[li].rows(); ++r) {
            for (int c = 0; c < inputs[li].cols(); ++c) {
                std::vector<Mat> plus = inputs, minus = inputs;
                plus[li](r, c) += h;
                minus[li](r, c) -= h;
                const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
                const double an = g(r, c);
                const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
                max_err = std::max(max_err, std::abs(fd - an) / denom);
            }
        }
        INFO("input " << li);
        CHECK(max_err <= tol);
    }
}

}  // namespace

TEST_CASE("linear ops match finite differences") {
    check_gradients(
        "matmul",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::matmul(v[0], v[1]));
        },
        {random_mat(3, 4, 1), random_mat(4, 5, 2)});

    check_gradients(
        "add/sub/scale",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::sub(tape::add(v[0], tape::scale(v[1], -2.5)), v[1]));
        },
        {random_mat(3, 3, 3), random_mat(3, 3, 4)});

    check_gradients(
        "cmul",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::cmul(v[0], v[1]));
        },
        {random_mat(4, 2, 5), random_mat(4, 2, 6)});

    check_gradients(
        "add_rowvec",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::add_rowvec(v[0], v[1]));
        },
        {random_mat(3, 4, 7), random_mat(1, 4, 8)});

    check_gradients(
        "add_n",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::add_n({v[0], v[1], v[0]}));
        },
        {random_mat(2, 3, 9), random_mat(2, 3, 10)});

    check_gradients(
        "transpose",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::transpose(v[0]));
        },
        {random_mat(3, 5, 11)});
}

TEST_CASE("nonlinearities match finite differences") {
    check_gradients(
        "elu",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::elu(v[0]));
        },
        {random_mat_nonzero(3, 4, 12)});

    check_gradients(
        "sigmoid",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::sigmoid(v[0]));
        },
        {random_mat(3, 4, 13, -4.0, 4.0)});

    check_gradients(
        "tanh",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::tanh_op(v[0]));
        },
        {random_mat(3, 4, 14, -3.0, 3.0)});

    check_gradients(
        "softplus",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::softplus(v[0]));
        },
        {random_mat(3, 4, 15, -30.0, 30.0)});
}

TEST_CASE("nonlinearity fixed points") {
    tape::Tape t;
    Mat zero = Mat::Zero(1, 1);
    CHECK(tape::softplus(t.leaf(zero, false)).value()(0, 0) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-15));
    CHECK(tape::sigmoid(t.leaf(zero, false)).value()(0, 0) == doctest::Approx(0.5));
    CHECK(tape::tanh_op(t.leaf(zero, false)).value()(0, 0) == doctest::Approx(0.0));
    CHECK(tape::elu(t.leaf(zero, false)).value()(0, 0) == doctest::Approx(0.0));

    // Saturation: softplus(x) -> x for large x, elu(x) -> -1 for very negative x.
    Mat big = Mat::Constant(1, 1, 40.0);
    CHECK(tape::softplus(t.leaf(big, false)).value()(0, 0) == doctest::Approx(40.0));
    Mat neg = Mat::Constant(1, 1, -40.0);
    CHECK(tape::elu(t.leaf(neg, false)).value()(0, 0) == doctest::Approx(-1.0));
    CHECK(tape::softplus(t.leaf(Mat::Constant(1, 1, -745.0), false)).value()(0, 0) >= 0.0);
}

TEST_CASE("gather, slicing, stacking match finite differences") {
    check_gradients(
        "rows with repeats",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::rows(v[0], {2, 0, 2, 3}));
        },
        {random_mat(4, 3, 16)});

    check_gradients(
        "row",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::row(v[0], 1));
        },
        {random_mat(3, 4, 17)});

    check_gradients(
        "slice_cols",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::slice_cols(v[0], 1, 2));
        },
        {random_mat(3, 5, 18)});

    check_gradients(
        "concat_cols",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::concat_cols(v[0], v[1]));
        },
        {random_mat(3, 2, 19), random_mat(3, 4, 20)});

    check_gradients(
        "stack_rows",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            std::vector<tape::Var> rows_list = {tape::row(v[0], 0), tape::row(v[1], 1),
                                                tape::row(v[0], 2)};
            return weighted_sum(t, tape::stack_rows(rows_list));
        },
        {random_mat(3, 4, 21), random_mat(3, 4, 22)});
}

TEST_CASE("reductions and losses match finite differences") {
    check_gradients(
        "mean_rows",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::mean_rows(v[0]));
        },
        {random_mat(5, 3, 23)});

    check_gradients(
        "row_means",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::row_means(v[0]));
        },
        {random_mat(5, 3, 24)});

    check_gradients(
        "softmax_col",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::softmax_col(v[0]));
        },
        {random_mat(6, 1, 25, -2.0, 2.0)});

    check_gradients(
        "dot",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return tape::dot(v[0], v[1]);
        },
        {random_mat(1, 5, 26), random_mat(1, 5, 27)});

    check_gradients(
        "ce_softmax",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return tape::ce_softmax(v[0], 3);
        },
        {random_mat(1, 7, 28, -2.0, 2.0)});

    check_gradients(
        "mse_scalar",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return tape::mse_scalar(v[0], 0.37);
        },
        {random_mat(1, 1, 29)});

    check_gradients(
        "softplus(dot - dot) ranking core",
        [](tape::Tape& t, const std::vector<tape::Var>& v) {
            return tape::softplus(tape::sub(tape::dot(v[0], v[1]), tape::dot(v[0], v[2])));
        },
        {random_mat(1, 4, 30), random_mat(1, 4, 31), random_mat(1, 4, 32)});
}

TEST_CASE("spmm: constant sparse times dense variable") {
    SpMat s(4, 3);
    std::vector<Eigen::Triplet<double>> trips = {
        {0, 0, 1.5}, {0, 2, -2.0}, {1, 1, 3.0}, {3, 0, 0.5}, {3, 2, 1.0}};
    s.setFromTriplets(trips.begin(), trips.end());
    check_gradients(
        "spmm",
        [&s](tape::Tape& t, const std::vector<tape::Var>& v) {
            return weighted_sum(t, tape::spmm(s, v[0]));
        },
        {random_mat(3, 5, 33)});

    // Value agrees with the dense product.
    tape::Tape t;
    Mat x = random_mat(3, 5, 34);
    CHECK((tape::spmm(s, t.leaf(x, false)).value() - Mat(s) * x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("affinity row: value and gradients") {
    const int n = 6;
    Mat phi1 = random_mat(n, 1, 35);
    Mat phi2 = random_mat(n, 1, 36);
    Vec w = random_mat(n, 1, 37, 0.1, 2.0).col(0);
    const int p = 2;

    tape::Tape t;
    tape::Var out = tape::affinity_row(t.leaf(phi1, false), t.leaf(phi2, false), p, w);
    REQUIRE(out.rows() == 1);
    REQUIRE(out.cols() == n);
    for (int j = 0; j < n; ++j)
        CHECK(out.value()(0, j) == doctest::Approx((phi1(p, 0) + phi2(j, 0)) * w(j)));

    check_gradients(
        "affinity_row",
        [&w](tape::Tape& t2, const std::vector<tape::Var>& v) {
            return weighted_sum(t2, tape::affinity_row(v[0], v[1], 2, w));
        },
        {phi1, phi2});
}

TEST_CASE("cross entropy on uniform logits equals log of the class count") {
    tape::Tape t;
    Mat logits = Mat::Constant(1, 5130, 0.25);
    tape::Var loss = tape::ce_softmax(t.leaf(logits, true), 17);
    CHECK(loss.value()(0, 0) == doctest::Approx(8.542860938164814).epsilon(1e-12));

    t.backward(loss);
    const Mat& g = t.node(loss.id).grad;
    CHECK(g(0, 0) == doctest::Approx(1.0));
    // d(loss)/d(logit_j) = softmax_j - [j == target].
    const Mat& gl = t.node(0).grad;
    CHECK(gl(0, 0) == doctest::Approx(1.0 / 5130.0).epsilon(1e-9));
    CHECK(gl(0, 17) == doctest::Approx(1.0 / 5130.0 - 1.0).epsilon(1e-9));
}

TEST_CASE("softmax column sums to one and is shift invariant") {
    tape::Tape t;
    Mat x = random_mat(9, 1, 38, -3.0, 3.0);
    Vec s = tape::softmax_col(t.leaf(x, false)).value().col(0);
    CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.minCoeff() > 0.0);
    Mat shifted = x.array() + 100.0;
    Vec s2 = tape::softmax_col(t.leaf(shifted, false)).value().col(0);
    CHECK((s - s2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gradients accumulate across fan-out") {
    // loss = sum(x) + sum(x) via two paths; gradient of every entry is 2 * w.
    tape::Tape t;
    Mat x = random_mat(2, 2, 39);
    tape::Var leaf = t.leaf(x, true);
    tape::Var loss = tape::add(to_scalar(t, leaf), to_scalar(t, leaf));
    t.backward(loss);
    CHECK((leaf.grad() - Mat::Constant(2, 2, 2.0)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("backward ignores constant branches") {
    tape::Tape t;
    tape::Var a = t.leaf(random_mat(2, 2, 40), true);
    tape::Var c = t.constant(random_mat(2, 2, 41));
    tape::Var loss = to_scalar(t, tape::cmul(a, c));
    t.backward(loss);
    CHECK(a.grad().size() == 4);
    CHECK(t.node(c.id).grad.size() == 0);  // constants never allocate gradients
}

TEST_CASE("deep chain: gated recurrent arithmetic matches finite differences") {
    // Three steps of LSTM-style gating built from primitives, reduced to a
    // scalar. Catches ordering bugs that single-op checks cannot.
    const int d = 4;
    auto build = [d](tape::Tape& t, const std::vector<tape::Var>& v) {
        tape::Var w = v[0];  // 2d x 4d
        tape::Var b = v[1];  // 1 x 4d
        tape::Var h = t.constant(Mat::Zero(1, d));
        tape::Var c = t.constant(Mat::Zero(1, d));
        for (int step = 0; step < 3; ++step) {
            tape::Var x = v[static_cast<size_t>(2 + step)];  // 1 x d
            tape::Var z = tape::add_rowvec(tape::matmul(tape::concat_cols(x, h), w), b);
            tape::Var i = tape::sigmoid(tape::slice_cols(z, 0, d));
            tape::Var f = tape::sigmoid(tape::slice_cols(z, d, d));
            tape::Var g = tape::tanh_op(tape::slice_cols(z, 2 * d, d));
            tape::Var o = tape::sigmoid(tape::slice_cols(z, 3 * d, d));
            c = tape::add(tape::cmul(f, c), tape::cmul(i, g));
            h = tape::cmul(o, tape::tanh_op(c));
        }
        return weighted_sum(t, h);
    };
    check_gradients("lstm chain", build,
                    {random_mat(2 * d, 4 * d, 42, -0.4, 0.4), random_mat(1, 4 * d, 43, -0.2, 0.2),
                     random_mat(1, d, 44), random_mat(1, d, 45), random_mat(1, d, 46)},
                    1e-4);
}
