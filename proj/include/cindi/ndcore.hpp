// Dense numeric kernel with reverse-mode automatic differentiation.
//
// Everything is 2-D, row-major, double precision. The tape records a
// closed set of primitives (add, mul, matmul, tanh, exp, log, sum,
// select_cols, concat_cols); larger operations are composed from these
// so that finite-difference checks cover the whole surface.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cindi {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Independent deterministic RNG streams derived from one seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 scramble so that nearby (seed, stream) pairs decorrelate
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return std::mt19937_64(z);
}

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c, 0.0); }
    static Matrix ones(std::size_t r, std::size_t c) { return Matrix(r, c, 1.0); }
    static Matrix constant(std::size_t r, std::size_t c, double v) { return Matrix(r, c, v); }

    static Matrix row(std::vector<double> v) {
        Matrix m;
        m.rows = 1;
        m.cols = v.size();
        m.data = std::move(v);
        return m;
    }

    static Matrix scalar(double v) { return constant(1, 1, v); }

    static Matrix randn(std::size_t r, std::size_t c, std::mt19937_64& rng, double stddev = 1.0) {
        Matrix m(r, c);
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& x : m.data) x = dist(rng);
        return m;
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::size_t size() const { return data.size(); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// C += A * B, naive ikj loop; fast enough for desk-scale widths.
inline void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t m = a.rows, k = a.cols, n = b.cols;
    const double* pa = a.data.data();
    const double* pb = b.data.data();
    double* pc = c.data.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = pb + p * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols, 0.0);
    matmul_acc(a, b, c);
    return c;
}

// C += A * B^T
inline void matmul_bt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t m = a.rows, k = a.cols, n = b.rows;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            const double* ra = a.data.data() + i * k;
            const double* rb = b.data.data() + j * k;
            for (std::size_t p = 0; p < k; ++p) s += ra[p] * rb[p];
            c.data[i * n + j] += s;
        }
    }
}

// C += A^T * B
inline void matmul_at_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t m = a.cols, k = a.rows, n = b.cols;
    for (std::size_t p = 0; p < k; ++p) {
        const double* ra = a.data.data() + p * m;
        const double* rb = b.data.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = ra[i];
            if (v == 0.0) continue;
            double* rc = c.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) rc[j] += v * rb[j];
        }
    }
}

// Flat parameter vector with gradient slots. All differentiable
// components of a model register their weight matrices here.
struct ParamStore {
    struct Entry {
        std::string name;
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::size_t count() const { return rows * cols; }
    };

    std::vector<double> values;
    std::vector<double> grads;
    std::vector<Entry> entries;

    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols) {
        Entry e{name, values.size(), rows, cols};
        values.resize(values.size() + rows * cols, 0.0);
        grads.resize(values.size(), 0.0);
        entries.push_back(e);
        return entries.size() - 1;
    }

    std::size_t add(const std::string& name, const Matrix& init) {
        std::size_t idx = add(name, init.rows, init.cols);
        std::copy(init.data.begin(), init.data.end(),
                  values.begin() + static_cast<std::ptrdiff_t>(entries[idx].offset));
        return idx;
    }

    Matrix get(std::size_t idx) const {
        const Entry& e = entries[idx];
        Matrix m(e.rows, e.cols);
        std::copy(values.begin() + static_cast<std::ptrdiff_t>(e.offset),
                  values.begin() + static_cast<std::ptrdiff_t>(e.offset + e.count()),
                  m.data.begin());
        return m;
    }

    void set(std::size_t idx, const Matrix& m) {
        const Entry& e = entries[idx];
        if (m.rows != e.rows || m.cols != e.cols)
            throw Error("ParamStore::set: shape mismatch for " + e.name);
        std::copy(m.data.begin(), m.data.end(),
                  values.begin() + static_cast<std::ptrdiff_t>(e.offset));
    }

    void zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }
};

enum class OpKind : std::uint8_t {
    Input,       // leaf, gradient of interest
    Const,       // leaf, no gradient
    Param,       // leaf bound to a ParamStore entry
    Add,
    Mul,         // elementwise
    MatMul,
    Tanh,
    Exp,
    Log,
    Sum,         // full sum -> 1x1
    SelectCols,  // column gather (slice)
    ConcatCols,  // column concatenation
};

inline const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Input: return "input";
        case OpKind::Const: return "const";
        case OpKind::Param: return "param";
        case OpKind::Add: return "add";
        case OpKind::Mul: return "mul";
        case OpKind::MatMul: return "matmul";
        case OpKind::Tanh: return "tanh";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Sum: return "sum";
        case OpKind::SelectCols: return "select_cols";
        case OpKind::ConcatCols: return "concat_cols";
    }
    return "?";
}

// Reverse-mode tape. Forward values are computed eagerly as nodes are
// recorded; backward() visits nodes in exact reverse order and
// accumulates adjoints. Param leaves flush their adjoints into the
// bound ParamStore's gradient slots.
class Tape {
public:
    using Id = std::uint32_t;

    Tape() : cstore_(nullptr), wstore_(nullptr) {}
    // read-only store: parameters may be read but backward() must not
    // reach a Param leaf (scoring / sampling mode)
    explicit Tape(const ParamStore* store) : cstore_(store), wstore_(nullptr) {}
    explicit Tape(ParamStore* store) : cstore_(store), wstore_(store) {}

    Id input(Matrix v) { return push(OpKind::Input, std::move(v)); }
    Id constant(Matrix v) { return push(OpKind::Const, std::move(v)); }
    Id constant(std::size_t r, std::size_t c, double fill) {
        return push(OpKind::Const, Matrix::constant(r, c, fill));
    }

    Id param(std::size_t entry_idx) {
        if (!cstore_) throw Error("tape has no parameter store");
        Node n;
        n.op = OpKind::Param;
        n.param_entry = entry_idx;
        n.value = cstore_->get(entry_idx);
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    Id add(Id a, Id b) {
        const Matrix& va = val(a);
        const Matrix& vb = val(b);
        if (!va.same_shape(vb)) shape_error("add", a, b);
        Matrix out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
        return push(OpKind::Add, std::move(out), a, b);
    }

    Id mul(Id a, Id b) {
        const Matrix& va = val(a);
        const Matrix& vb = val(b);
        if (!va.same_shape(vb)) shape_error("mul", a, b);
        Matrix out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= vb.data[i];
        return push(OpKind::Mul, std::move(out), a, b);
    }

    Id matmul(Id a, Id b) {
        const Matrix& va = val(a);
        const Matrix& vb = val(b);
        if (va.cols != vb.rows) shape_error("matmul", a, b);
        return push(OpKind::MatMul, cindi::matmul(va, vb), a, b);
    }

    Id tanh(Id a) {
        Matrix out = val(a);
        for (auto& v : out.data) v = std::tanh(v);
        return push(OpKind::Tanh, std::move(out), a);
    }

    Id exp(Id a) {
        Matrix out = val(a);
        for (auto& v : out.data) v = std::exp(v);
        return push(OpKind::Exp, std::move(out), a);
    }

    Id log(Id a) {
        Matrix out = val(a);
        for (auto& v : out.data) v = std::log(v);
        return push(OpKind::Log, std::move(out), a);
    }

    Id sum(Id a) {
        double s = 0.0;
        for (double v : val(a).data) s += v;
        return push(OpKind::Sum, Matrix::scalar(s), a);
    }

    Id select_cols(Id a, std::vector<std::size_t> idx) {
        const Matrix& va = val(a);
        for (std::size_t j : idx)
            if (j >= va.cols)
                throw Error("select_cols: column index out of range at op " +
                            std::to_string(nodes_.size()));
        Matrix out(va.rows, idx.size());
        for (std::size_t i = 0; i < va.rows; ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                out.at(i, j) = va.at(i, idx[j]);
        Id id = push(OpKind::SelectCols, std::move(out), a);
        nodes_[id].cols_idx = std::move(idx);
        return id;
    }

    Id concat_cols(Id a, Id b) {
        const Matrix& va = val(a);
        const Matrix& vb = val(b);
        if (va.rows != vb.rows) shape_error("concat_cols", a, b);
        Matrix out(va.rows, va.cols + vb.cols);
        for (std::size_t i = 0; i < va.rows; ++i) {
            std::copy(va.data.begin() + static_cast<std::ptrdiff_t>(i * va.cols),
                      va.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * va.cols),
                      out.data.begin() + static_cast<std::ptrdiff_t>(i * out.cols));
            std::copy(vb.data.begin() + static_cast<std::ptrdiff_t>(i * vb.cols),
                      vb.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * vb.cols),
                      out.data.begin() + static_cast<std::ptrdiff_t>(i * out.cols + va.cols));
        }
        return push(OpKind::ConcatCols, std::move(out), a, b);
    }

    // --- compositions of the primitives above ---

    Id scale(Id a, double c) { return mul(a, constant(val(a).rows, val(a).cols, c)); }
    Id shift(Id a, double c) { return add(a, constant(val(a).rows, val(a).cols, c)); }

    // x @ W + broadcast bias (bias is 1 x n; broadcast via ones(B,1) @ bias)
    Id affine(Id x, Id w, Id bias) {
        Id prod = matmul(x, w);
        Id ones_col = constant(val(x).rows, 1, 1.0);
        return add(prod, matmul(ones_col, bias));
    }

    // per-row sum -> B x 1, composed as matmul with a ones column
    Id row_sum(Id a) { return matmul(a, constant(val(a).cols, 1, 1.0)); }

    Id mean_all(Id a) {
        const Matrix& v = val(a);
        return scale(sum(a), 1.0 / static_cast<double>(v.size()));
    }

    // --- access ---

    const Matrix& value(Id id) const { return nodes_[id].value; }
    std::size_t size() const { return nodes_.size(); }

    const Matrix& adjoint(Id id) const {
        if (nodes_[id].adjoint.size() == 0)
            adj_zero_ = Matrix::zeros(nodes_[id].value.rows, nodes_[id].value.cols);
        return nodes_[id].adjoint.size() ? nodes_[id].adjoint : adj_zero_;
    }

    // Recompute every node's value from the leaves in recorded order.
    void replay_forward() {
        for (std::size_t i = 0; i < nodes_.size(); ++i) recompute(static_cast<Id>(i));
    }

    // Reverse pass from a scalar root. Accumulates parameter adjoints
    // into the bound store's gradient slots.
    void backward(Id root) {
        const Matrix& rv = nodes_[root].value;
        if (rv.rows != 1 || rv.cols != 1)
            throw Error("backward: output is not scalar (shape " + std::to_string(rv.rows) +
                        "x" + std::to_string(rv.cols) + ")");
        for (auto& n : nodes_) {
            if (n.adjoint.size()) std::fill(n.adjoint.data.begin(), n.adjoint.data.end(), 0.0);
        }
        grab_adj(root).data[0] = 1.0;

        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.adjoint.size() == 0) continue;  // never reached from root
            const Matrix& g = n.adjoint;
            switch (n.op) {
                case OpKind::Input:
                case OpKind::Const:
                    break;
                case OpKind::Param: {
                    if (!wstore_)
                        throw Error("backward: tape bound to a read-only parameter store");
                    const ParamStore::Entry& e = wstore_->entries[n.param_entry];
                    for (std::size_t j = 0; j < g.size(); ++j)
                        wstore_->grads[e.offset + j] += g.data[j];
                    break;
                }
                case OpKind::Add: {
                    acc(n.a, g);
                    acc(n.b, g);
                    break;
                }
                case OpKind::Mul: {
                    Matrix da = g;
                    const Matrix& vb = nodes_[n.b].value;
                    for (std::size_t j = 0; j < da.size(); ++j) da.data[j] *= vb.data[j];
                    acc(n.a, da);
                    Matrix db = g;
                    const Matrix& va = nodes_[n.a].value;
                    for (std::size_t j = 0; j < db.size(); ++j) db.data[j] *= va.data[j];
                    acc(n.b, db);
                    break;
                }
                case OpKind::MatMul: {
                    // dA += G * B^T ; dB += A^T * G
                    matmul_bt_acc(g, nodes_[n.b].value, grab_adj(n.a));
                    matmul_at_acc(nodes_[n.a].value, g, grab_adj(n.b));
                    break;
                }
                case OpKind::Tanh: {
                    Matrix da = g;
                    for (std::size_t j = 0; j < da.size(); ++j)
                        da.data[j] *= 1.0 - n.value.data[j] * n.value.data[j];
                    acc(n.a, da);
                    break;
                }
                case OpKind::Exp: {
                    Matrix da = g;
                    for (std::size_t j = 0; j < da.size(); ++j) da.data[j] *= n.value.data[j];
                    acc(n.a, da);
                    break;
                }
                case OpKind::Log: {
                    Matrix da = g;
                    const Matrix& va = nodes_[n.a].value;
                    for (std::size_t j = 0; j < da.size(); ++j) da.data[j] /= va.data[j];
                    acc(n.a, da);
                    break;
                }
                case OpKind::Sum: {
                    Matrix& dst = grab_adj(n.a);
                    const double gv = g.data[0];
                    for (auto& v : dst.data) v += gv;
                    break;
                }
                case OpKind::SelectCols: {
                    Matrix& dst = grab_adj(n.a);
                    for (std::size_t r = 0; r < g.rows; ++r)
                        for (std::size_t j = 0; j < n.cols_idx.size(); ++j)
                            dst.at(r, n.cols_idx[j]) += g.at(r, j);
                    break;
                }
                case OpKind::ConcatCols: {
                    Matrix& da = grab_adj(n.a);
                    Matrix& db = grab_adj(n.b);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                        for (std::size_t j = 0; j < da.cols; ++j) da.at(r, j) += g.at(r, j);
                        for (std::size_t j = 0; j < db.cols; ++j)
                            db.at(r, j) += g.at(r, da.cols + j);
                    }
                    break;
                }
            }
        }
    }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        OpKind op = OpKind::Const;
        Id a = 0, b = 0;
        Matrix value;
        Matrix adjoint;  // empty until touched by backward
        std::vector<std::size_t> cols_idx;
        std::size_t param_entry = 0;
    };

    Id push(OpKind op, Matrix value, Id a = 0, Id b = 0) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    const Matrix& val(Id id) const {
        if (id >= nodes_.size()) throw Error("tape: node id out of range");
        return nodes_[id].value;
    }

    Matrix& grab_adj(Id id) {
        Node& n = nodes_[id];
        if (n.adjoint.size() == 0) n.adjoint = Matrix::zeros(n.value.rows, n.value.cols);
        return n.adjoint;
    }

    void acc(Id id, const Matrix& g) {
        Matrix& dst = grab_adj(id);
        for (std::size_t j = 0; j < g.size(); ++j) dst.data[j] += g.data[j];
    }

    void recompute(Id id) {
        Node& n = nodes_[id];
        switch (n.op) {
            case OpKind::Input:
            case OpKind::Const:
                break;
            case OpKind::Param:
                n.value = cstore_->get(n.param_entry);
                break;
            case OpKind::Add: {
                const Matrix& va = nodes_[n.a].value;
                const Matrix& vb = nodes_[n.b].value;
                for (std::size_t j = 0; j < n.value.size(); ++j)
                    n.value.data[j] = va.data[j] + vb.data[j];
                break;
            }
            case OpKind::Mul: {
                const Matrix& va = nodes_[n.a].value;
                const Matrix& vb = nodes_[n.b].value;
                for (std::size_t j = 0; j < n.value.size(); ++j)
                    n.value.data[j] = va.data[j] * vb.data[j];
                break;
            }
            case OpKind::MatMul:
                std::fill(n.value.data.begin(), n.value.data.end(), 0.0);
                matmul_acc(nodes_[n.a].value, nodes_[n.b].value, n.value);
                break;
            case OpKind::Tanh:
                for (std::size_t j = 0; j < n.value.size(); ++j)
                    n.value.data[j] = std::tanh(nodes_[n.a].value.data[j]);
                break;
            case OpKind::Exp:
                for (std::size_t j = 0; j < n.value.size(); ++j)
                    n.value.data[j] = std::exp(nodes_[n.a].value.data[j]);
                break;
            case OpKind::Log:
                for (std::size_t j = 0; j < n.value.size(); ++j)
                    n.value.data[j] = std::log(nodes_[n.a].value.data[j]);
                break;
            case OpKind::Sum: {
                double s = 0.0;
                for (double v : nodes_[n.a].value.data) s += v;
                n.value.data[0] = s;
                break;
            }
            case OpKind::SelectCols: {
                const Matrix& va = nodes_[n.a].value;
                for (std::size_t r = 0; r < n.value.rows; ++r)
                    for (std::size_t j = 0; j < n.cols_idx.size(); ++j)
                        n.value.at(r, j) = va.at(r, n.cols_idx[j]);
                break;
            }
            case OpKind::ConcatCols: {
                const Matrix& va = nodes_[n.a].value;
                const Matrix& vb = nodes_[n.b].value;
                for (std::size_t r = 0; r < n.value.rows; ++r) {
                    for (std::size_t j = 0; j < va.cols; ++j) n.value.at(r, j) = va.at(r, j);
                    for (std::size_t j = 0; j < vb.cols; ++j)
                        n.value.at(r, va.cols + j) = vb.at(r, j);
                }
                break;
            }
        }
    }

    [[noreturn]] void shape_error(const char* what, Id a, Id b) const {
        const Matrix& va = nodes_[a].value;
        const Matrix& vb = nodes_[b].value;
        throw Error(std::string("shape mismatch in ") + what + " at op " +
                    std::to_string(nodes_.size()) + ": " + std::to_string(va.rows) + "x" +
                    std::to_string(va.cols) + " vs " + std::to_string(vb.rows) + "x" +
                    std::to_string(vb.cols));
    }

    const ParamStore* cstore_;
    ParamStore* wstore_;
    std::vector<Node> nodes_;
    mutable Matrix adj_zero_;
};

// Adam with bias correction, applied in place over the flat store.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(ParamStore& params, AdamState& state, double lr) {
    if (state.m.size() != params.values.size()) {
        state.m.assign(params.values.size(), 0.0);
        state.v.assign(params.values.size(), 0.0);
        state.t = 0;
    }
    for (double g : params.grads)
        if (!std::isfinite(g)) throw Error("adam_step: non-finite gradient");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double g = params.grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace cindi
