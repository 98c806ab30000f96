#pragma once

// Minimal tape-free reverse-mode differentiation over dense matrices.
//
// A Var is a handle to a node holding a value and (after backward()) a
// gradient. Graph edges are kept alive by the child nodes, so dropping the
// loss releases the whole graph. Parameters are leaf Vars created with
// requires_grad = true; their gradients accumulate across backward() calls
// until zero_grad().

#include "choreo/tensor.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace choreo::ad {

struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void accumulate(const Mat& g);
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    const Mat& value() const { return node_->value; }
    Mat& mutable_value() { return node_->value; }
    /// Gradient after backward(); an all-zero matrix when nothing flowed in.
    Mat grad() const;
    bool requires_grad() const { return node_ && node_->requires_grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    double scalar() const { return node_->value(0, 0); }

    void zero_grad() { node_->grad.resize(0, 0); }

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& ptr() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    std::shared_ptr<Node> node_;
};

/// While alive, new nodes record no graph (inference mode). Thread-local.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// requires_grad for a new node built from these inputs.
bool needs_grad(std::initializer_list<const Var*> inputs);

Var constant(Mat value);
Var parameter(Mat value);

/// Seeds d(root)/d(root) = 1 (root must be 1 x 1) and propagates to every
/// reachable node that requires a gradient.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// a (n x k) + row (1 x k) broadcast over rows.
Var add_row(const Var& a, const Var& row);
/// a (n x k) * row (1 x k) broadcast over rows.
Var mul_row(const Var& a, const Var& row);
/// Tiles a 1 x k row into n rows.
Var broadcast_rows(const Var& row, Eigen::Index n);
/// 1 x k column means.
Var mean_rows(const Var& a);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var exp(const Var& a);
Var neg(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
Var sum_squares(const Var& a);

/// Row-wise normalization to zero mean / unit variance (no affine).
Var layer_norm(const Var& a, double eps = 1e-5);

Var rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var gather_cols(const Var& a, std::span<const int> idx);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// out[:, k] = take_b[k] ? b[:, k] : a[:, k]
Var select_cols(const Var& a, const Var& b, std::span<const bool> take_b);

/// Affine map with row-vector convention: x (n x in) W (in x out) + b (1 x out).
Var affine(const Var& x, const Var& w, const Var& b);

/// Grouped multi-head scaled dot-product attention.
/// Queries are `groups` blocks of q_len rows; key/value block g % key_groups
/// (key_len rows each) serves query block g. Bidirectional (no mask).
Var attention(const Var& q, const Var& k, const Var& v, int groups, int q_len, int key_groups, int key_len,
              int heads);

/// Attention weights for one (group, head) pair, q_len x key_len.
Mat attention_weights(const Mat& q, const Mat& k, int group, int q_len, int key_group, int key_len, int heads,
                      int head);

}  // namespace choreo::ad
