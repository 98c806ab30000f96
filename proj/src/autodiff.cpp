#include "choreo/autodiff.hpp"

#include "choreo/errors.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace choreo::ad {

void Node::accumulate(const Mat& g) {
    if (!requires_grad) return;
    if (grad.size() == 0)
        grad = g;
    else
        grad += g;
}

Mat Var::grad() const {
    if (node_->grad.size() == 0) return Mat::Zero(node_->value.rows(), node_->value.cols());
    return node_->grad;
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

bool needs_grad(std::initializer_list<const Var*> inputs) {
    if (!g_grad_enabled) return false;
    for (const Var* v : inputs)
        if (v->requires_grad()) return true;
    return false;
}

Var constant(Mat value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

Var parameter(Mat value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

namespace {

Var make(Mat value, std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad_enabled)
        for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward = std::move(bw);
    }
    return Var(std::move(n));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

void backward(const Var& root) {
    if (root.rows() != 1 || root.cols() != 1) throw ShapeMismatch("backward() needs a scalar root");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->accumulate(Mat::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.size() != 0) n->backward(*n);
    }
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatch("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()));
    auto pa = a.ptr(), pb = b.ptr();
    return make(a.value() * b.value(), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad) pa->accumulate(n.grad * pb->value.transpose());
        if (pb->requires_grad) pb->accumulate(pa->value.transpose() * n.grad);
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    auto pa = a.ptr(), pb = b.ptr();
    return make(a.value() + b.value(), {pa, pb}, [pa, pb](Node& n) {
        pa->accumulate(n.grad);
        pb->accumulate(n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    auto pa = a.ptr(), pb = b.ptr();
    return make(a.value() - b.value(), {pa, pb}, [pa, pb](Node& n) {
        pa->accumulate(n.grad);
        if (pb->requires_grad) pb->accumulate(-n.grad);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    auto pa = a.ptr(), pb = b.ptr();
    return make(a.value().cwiseProduct(b.value()), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad) pa->accumulate(n.grad.cwiseProduct(pb->value));
        if (pb->requires_grad) pb->accumulate(n.grad.cwiseProduct(pa->value));
    });
}

Var scale(const Var& a, double s) {
    auto pa = a.ptr();
    return make(a.value() * s, {pa}, [pa, s](Node& n) { pa->accumulate(n.grad * s); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeMismatch("add_row: row width mismatch");
    auto pa = a.ptr(), pr = row.ptr();
    Mat v = a.value();
    v.rowwise() += row.value().row(0);
    return make(std::move(v), {pa, pr}, [pa, pr](Node& n) {
        pa->accumulate(n.grad);
        if (pr->requires_grad) pr->accumulate(n.grad.colwise().sum());
    });
}

Var mul_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeMismatch("mul_row: row width mismatch");
    auto pa = a.ptr(), pr = row.ptr();
    Mat v = a.value().array().rowwise() * row.value().row(0).array();
    return make(std::move(v), {pa, pr}, [pa, pr](Node& n) {
        if (pa->requires_grad) pa->accumulate(n.grad.array().rowwise() * pr->value.row(0).array());
        if (pr->requires_grad) pr->accumulate(n.grad.cwiseProduct(pa->value).colwise().sum());
    });
}

Var broadcast_rows(const Var& row, Eigen::Index count) {
    if (row.rows() != 1) throw ShapeMismatch("broadcast_rows expects a single row");
    auto pr = row.ptr();
    return make(row.value().replicate(count, 1), {pr}, [pr](Node& n) { pr->accumulate(n.grad.colwise().sum()); });
}

Var mean_rows(const Var& a) {
    auto pa = a.ptr();
    const double inv = 1.0 / static_cast<double>(a.rows());
    return make(a.value().colwise().mean(), {pa}, [pa, inv](Node& n) {
        pa->accumulate(n.grad.replicate(pa->value.rows(), 1) * inv);
    });
}

Var relu(const Var& a) {
    auto pa = a.ptr();
    return make(a.value().cwiseMax(0.0), {pa}, [pa](Node& n) {
        pa->accumulate((pa->value.array() > 0.0).select(n.grad.array(), 0.0).matrix());
    });
}

Var sigmoid(const Var& a) {
    auto pa = a.ptr();
    Mat s = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return make(s, {pa}, [pa](Node& n) {
        pa->accumulate(n.grad.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
    });
}

Var softplus(const Var& a) {
    auto pa = a.ptr();
    Mat v = a.value().unaryExpr([](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); });
    return make(std::move(v), {pa}, [pa](Node& n) {
        Mat s = pa->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        pa->accumulate(n.grad.cwiseProduct(s));
    });
}

Var exp(const Var& a) {
    auto pa = a.ptr();
    return make(a.value().array().exp().matrix(), {pa},
                [pa](Node& n) { pa->accumulate(n.grad.cwiseProduct(n.value)); });
}

Var sum(const Var& a) {
    auto pa = a.ptr();
    Mat v(1, 1);
    v(0, 0) = a.value().sum();
    return make(std::move(v), {pa}, [pa](Node& n) {
        pa->accumulate(Mat::Constant(pa->value.rows(), pa->value.cols(), n.grad(0, 0)));
    });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_squares(const Var& a) {
    auto pa = a.ptr();
    Mat v(1, 1);
    v(0, 0) = a.value().squaredNorm();
    return make(std::move(v), {pa}, [pa](Node& n) { pa->accumulate(pa->value * (2.0 * n.grad(0, 0))); });
}

Var layer_norm(const Var& a, double eps) {
    auto pa = a.ptr();
    const Eigen::Index cols = a.cols();
    Mat xhat(a.rows(), cols);
    Eigen::VectorXd inv_std(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double mu = a.value().row(r).mean();
        const auto centered = (a.value().row(r).array() - mu).matrix();
        const double var = centered.squaredNorm() / static_cast<double>(cols);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = centered * inv_std[r];
    }
    return make(xhat, {pa}, [pa, inv_std, cols](Node& n) {
        Mat g(n.grad.rows(), cols);
        const double inv_n = 1.0 / static_cast<double>(cols);
        for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
            const auto gy = n.grad.row(r).array();
            const auto y = n.value.row(r).array();
            g.row(r) = (inv_std[r] * (gy - gy.mean() - y * (gy * y).sum() * inv_n)).matrix();
        }
        pa->accumulate(g);
    });
}

Var rows(const Var& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeMismatch("rows: range out of bounds");
    auto pa = a.ptr();
    return make(a.value().middleRows(start, count), {pa}, [pa, start, count](Node& n) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        g.middleRows(start, count) = n.grad;
        pa->accumulate(g);
    });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeMismatch("cols: range out of bounds");
    auto pa = a.ptr();
    return make(a.value().middleCols(start, count), {pa}, [pa, start, count](Node& n) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        g.middleCols(start, count) = n.grad;
        pa->accumulate(g);
    });
}

Var gather_cols(const Var& a, std::span<const int> idx) {
    std::vector<int> index(idx.begin(), idx.end());
    Mat v(a.rows(), static_cast<Eigen::Index>(index.size()));
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] < 0 || index[k] >= a.cols()) throw ShapeMismatch("gather_cols: index out of range");
        v.col(static_cast<Eigen::Index>(k)) = a.value().col(index[k]);
    }
    auto pa = a.ptr();
    return make(std::move(v), {pa}, [pa, index](Node& n) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        for (std::size_t k = 0; k < index.size(); ++k) g.col(index[k]) += n.grad.col(static_cast<Eigen::Index>(k));
        pa->accumulate(g);
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_rows: no inputs");
    Eigen::Index total = 0;
    const Eigen::Index width = parts[0].cols();
    std::vector<std::shared_ptr<Node>> ps;
    for (const auto& p : parts) {
        if (p.cols() != width) throw ShapeMismatch("concat_rows: width mismatch");
        total += p.rows();
        ps.push_back(p.ptr());
    }
    Mat v(total, width);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        v.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    auto captured = ps;
    return make(std::move(v), std::move(ps), [captured](Node& n) {
        Eigen::Index off = 0;
        for (const auto& p : captured) {
            const Eigen::Index r = p->value.rows();
            if (p->requires_grad) p->accumulate(n.grad.middleRows(off, r));
            off += r;
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
    Eigen::Index total = 0;
    const Eigen::Index height = parts[0].rows();
    std::vector<std::shared_ptr<Node>> ps;
    for (const auto& p : parts) {
        if (p.rows() != height) throw ShapeMismatch("concat_cols: height mismatch");
        total += p.cols();
        ps.push_back(p.ptr());
    }
    Mat v(height, total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        v.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    auto captured = ps;
    return make(std::move(v), std::move(ps), [captured](Node& n) {
        Eigen::Index off = 0;
        for (const auto& p : captured) {
            const Eigen::Index c = p->value.cols();
            if (p->requires_grad) p->accumulate(n.grad.middleCols(off, c));
            off += c;
        }
    });
}

Var select_cols(const Var& a, const Var& b, std::span<const bool> take_b) {
    require_same_shape(a, b, "select_cols");
    if (static_cast<Eigen::Index>(take_b.size()) != a.cols()) throw ShapeMismatch("select_cols: mask width");
    std::vector<bool> mask(take_b.begin(), take_b.end());
    Mat v = a.value();
    for (Eigen::Index k = 0; k < v.cols(); ++k)
        if (mask[k]) v.col(k) = b.value().col(k);
    auto pa = a.ptr(), pb = b.ptr();
    return make(std::move(v), {pa, pb}, [pa, pb, mask](Node& n) {
        Mat ga = n.grad, gb = Mat::Zero(n.grad.rows(), n.grad.cols());
        for (Eigen::Index k = 0; k < ga.cols(); ++k) {
            if (mask[k]) {
                gb.col(k) = ga.col(k);
                ga.col(k).setZero();
            }
        }
        pa->accumulate(ga);
        pb->accumulate(gb);
    });
}

Var affine(const Var& x, const Var& w, const Var& b) { return add_row(matmul(x, w), b); }

namespace {

Mat softmax_rows(const Mat& s) {
    Mat p(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double m = s.row(r).maxCoeff();
        p.row(r) = (s.row(r).array() - m).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

void check_attention_shapes(const Mat& q, const Mat& k, const Mat& v, int groups, int q_len, int key_groups,
                            int key_len, int heads) {
    if (heads < 1 || q.cols() % heads != 0) throw ShapeMismatch("attention: width not divisible by heads");
    if (q.rows() != static_cast<Eigen::Index>(groups) * q_len) throw ShapeMismatch("attention: query rows");
    if (k.rows() != static_cast<Eigen::Index>(key_groups) * key_len || v.rows() != k.rows())
        throw ShapeMismatch("attention: key/value rows");
    if (k.cols() != q.cols() || v.cols() != q.cols()) throw ShapeMismatch("attention: widths differ");
    if (key_groups != 1 && key_groups != groups) throw ShapeMismatch("attention: key groups must be 1 or groups");
}

}  // namespace

Mat attention_weights(const Mat& q, const Mat& k, int group, int q_len, int key_group, int key_len, int heads,
                      int head) {
    const Eigen::Index dh = q.cols() / heads;
    const Mat qb = q.block(static_cast<Eigen::Index>(group) * q_len, head * dh, q_len, dh);
    const Mat kb = k.block(static_cast<Eigen::Index>(key_group) * key_len, head * dh, key_len, dh);
    return softmax_rows(qb * kb.transpose() / std::sqrt(static_cast<double>(dh)));
}

Var attention(const Var& q, const Var& k, const Var& v, int groups, int q_len, int key_groups, int key_len,
              int heads) {
    check_attention_shapes(q.value(), k.value(), v.value(), groups, q_len, key_groups, key_len, heads);
    const Eigen::Index dh = q.cols() / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat out(q.rows(), q.cols());
    auto probs = std::make_shared<std::vector<Mat>>();
    probs->reserve(static_cast<std::size_t>(groups) * heads);
    for (int g = 0; g < groups; ++g) {
        const int kg = g % key_groups;
        for (int h = 0; h < heads; ++h) {
            Mat p = attention_weights(q.value(), k.value(), g, q_len, kg, key_len, heads, h);
            out.block(static_cast<Eigen::Index>(g) * q_len, h * dh, q_len, dh) =
                p * v.value().block(static_cast<Eigen::Index>(kg) * key_len, h * dh, key_len, dh);
            probs->push_back(std::move(p));
        }
    }
    auto pq = q.ptr(), pk = k.ptr(), pv = v.ptr();
    return make(std::move(out), {pq, pk, pv},
                [pq, pk, pv, probs, groups, q_len, key_groups, key_len, heads, dh, inv_sqrt](Node& n) {
                    Mat gq = Mat::Zero(pq->value.rows(), pq->value.cols());
                    Mat gk = Mat::Zero(pk->value.rows(), pk->value.cols());
                    Mat gv = Mat::Zero(pv->value.rows(), pv->value.cols());
                    std::size_t idx = 0;
                    for (int g = 0; g < groups; ++g) {
                        const int kg = g % key_groups;
                        const Eigen::Index qr = static_cast<Eigen::Index>(g) * q_len;
                        const Eigen::Index kr = static_cast<Eigen::Index>(kg) * key_len;
                        for (int h = 0; h < heads; ++h, ++idx) {
                            const Mat& p = (*probs)[idx];
                            const Eigen::Index c0 = h * dh;
                            const Mat go = n.grad.block(qr, c0, q_len, dh);
                            gv.block(kr, c0, key_len, dh) += p.transpose() * go;
                            const Mat gp = go * pv->value.block(kr, c0, key_len, dh).transpose();
                            Mat gs = p.cwiseProduct(gp);
                            const Eigen::VectorXd rowdot = gs.rowwise().sum();
                            gs -= p.cwiseProduct(rowdot.replicate(1, key_len));
                            gs *= inv_sqrt;
                            gq.block(qr, c0, q_len, dh) += gs * pk->value.block(kr, c0, key_len, dh);
                            gk.block(kr, c0, key_len, dh) += gs.transpose() * pq->value.block(qr, c0, q_len, dh);
                        }
                    }
                    pq->accumulate(gq);
                    pk->accumulate(gk);
                    pv->accumulate(gv);
                });
}

}  // namespace choreo::ad
