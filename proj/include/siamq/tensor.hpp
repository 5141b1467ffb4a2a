#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "siamq/errors.hpp"

namespace siamq::ad {

template <typename T>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<std::size_t> s)
        : shape(std::move(s)), data(count(shape), T(0)) {}
    TensorT(std::vector<std::size_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (count(shape) != data.size())
            throw DataError("tensor shape/data size mismatch");
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1},
                               std::multiplies<>());
    }
    std::size_t size() const { return data.size(); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

// Reverse-mode tape. Nodes are created in topological order by construction;
// backward() walks them in reverse once, then locks until reset().
template <typename T>
class GraphT {
  public:
    using Tensor = TensorT<T>;
    static constexpr T kNormEps = static_cast<T>(1e-8);

    // Leaf that never receives a gradient (input data, targets).
    int value(Tensor v) { return add_node(std::move(v), false); }

    // Leaf whose gradient is wanted (model parameter).
    int param(Tensor v) { return add_node(std::move(v), true); }

    const Tensor& val(int id) const { return nodes_[check(id)].value; }
    const Tensor& grad(int id) const { return nodes_[check(id)].grad; }
    const std::vector<std::size_t>& shape(int id) const { return val(id).shape; }

    int conv1d(int input, int kernel, int bias, std::size_t stride,
               std::size_t padding) {
        const auto& x = val(input);
        const auto& w = val(kernel);
        const auto& b = val(bias);
        if (x.shape.size() != 3 || w.shape.size() != 3 || b.shape.size() != 1)
            throw DataError("conv1d: rank mismatch");
        const std::size_t B = x.shape[0], Cin = x.shape[1], L = x.shape[2];
        const std::size_t Cout = w.shape[0], K = w.shape[2];
        if (w.shape[1] != Cin || b.shape[0] != Cout)
            throw DataError("conv1d: channel mismatch");
        if (stride < 1 || K > L + 2 * padding)
            throw DataError("conv1d: kernel larger than padded input");
        const std::size_t Lout = (L + 2 * padding - K) / stride + 1;

        Tensor out({B, Cout, Lout});
        for (std::size_t bi = 0; bi < B; ++bi) {
            for (std::size_t co = 0; co < Cout; ++co) {
                for (std::size_t o = 0; o < Lout; ++o) {
                    T acc = b.data[co];
                    const std::ptrdiff_t base =
                        static_cast<std::ptrdiff_t>(o * stride) -
                        static_cast<std::ptrdiff_t>(padding);
                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                        const T* xr = &x.data[(bi * Cin + ci) * L];
                        const T* wr = &w.data[(co * Cin + ci) * K];
                        for (std::size_t k = 0; k < K; ++k) {
                            const std::ptrdiff_t p = base + static_cast<std::ptrdiff_t>(k);
                            if (p >= 0 && p < static_cast<std::ptrdiff_t>(L))
                                acc += wr[k] * xr[p];
                        }
                    }
                    out.data[(bi * Cout + co) * Lout + o] = acc;
                }
            }
        }
        return add_op(std::move(out), {input, kernel, bias},
                      [=, this](Node& node) {
                          const auto& g = node.grad;
                          const auto& xv = val(input);
                          const auto& wv = val(kernel);
                          for (std::size_t bi = 0; bi < B; ++bi)
                              for (std::size_t co = 0; co < Cout; ++co)
                                  for (std::size_t o = 0; o < Lout; ++o) {
                                      const T go = g.data[(bi * Cout + co) * Lout + o];
                                      if (go == T(0)) continue;
                                      accumulate(bias, co, go);
                                      const std::ptrdiff_t base =
                                          static_cast<std::ptrdiff_t>(o * stride) -
                                          static_cast<std::ptrdiff_t>(padding);
                                      for (std::size_t ci = 0; ci < Cin; ++ci)
                                          for (std::size_t k = 0; k < K; ++k) {
                                              const std::ptrdiff_t p =
                                                  base + static_cast<std::ptrdiff_t>(k);
                                              if (p < 0 || p >= static_cast<std::ptrdiff_t>(L))
                                                  continue;
                                              accumulate(kernel, (co * Cin + ci) * K + k,
                                                         go * xv.data[(bi * Cin + ci) * L + p]);
                                              accumulate(input,
                                                         (bi * Cin + ci) * L +
                                                             static_cast<std::size_t>(p),
                                                         go * wv.data[(co * Cin + ci) * K + k]);
                                          }
                                  }
                      });
    }

    int relu(int x) {
        Tensor out = val(x);
        for (auto& v : out.data) v = v > T(0) ? v : T(0);
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            const auto& xv = val(x);
            for (std::size_t i = 0; i < xv.size(); ++i)
                if (xv.data[i] > T(0)) accumulate(x, i, node.grad.data[i]);
        });
    }

    // Per-example normalization over channel and length dims of [B, C, L]:
    // y = (x - mean_b) / sqrt(var_b + eps).
    int channel_norm(int x) {
        const auto& xv = val(x);
        if (xv.shape.size() != 3) throw DataError("channel_norm: rank mismatch");
        const std::size_t B = xv.shape[0];
        const std::size_t M = xv.shape[1] * xv.shape[2];

        Tensor out(xv.shape);
        std::vector<T> inv_std(B);
        for (std::size_t bi = 0; bi < B; ++bi) {
            const T* xr = &xv.data[bi * M];
            T mean = T(0);
            for (std::size_t i = 0; i < M; ++i) mean += xr[i];
            mean /= static_cast<T>(M);
            T var = T(0);
            for (std::size_t i = 0; i < M; ++i) {
                const T d = xr[i] - mean;
                var += d * d;
            }
            var /= static_cast<T>(M);
            inv_std[bi] = T(1) / std::sqrt(var + kNormEps);
            for (std::size_t i = 0; i < M; ++i)
                out.data[bi * M + i] = (xr[i] - mean) * inv_std[bi];
        }
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            // dx = inv_std * (dy - mean(dy) - y * mean(dy * y))
            for (std::size_t bi = 0; bi < B; ++bi) {
                const T* gy = &node.grad.data[bi * M];
                const T* y = &node.value.data[bi * M];
                T mean_g = T(0), mean_gy = T(0);
                for (std::size_t i = 0; i < M; ++i) {
                    mean_g += gy[i];
                    mean_gy += gy[i] * y[i];
                }
                mean_g /= static_cast<T>(M);
                mean_gy /= static_cast<T>(M);
                for (std::size_t i = 0; i < M; ++i)
                    accumulate(x, bi * M + i,
                               inv_std[bi] * (gy[i] - mean_g - y[i] * mean_gy));
            }
        });
    }

    // [B, C, L] -> [B, C]
    int global_avg_pool(int x) {
        const auto& xv = val(x);
        if (xv.shape.size() != 3) throw DataError("global_avg_pool: rank mismatch");
        const std::size_t B = xv.shape[0], C = xv.shape[1], L = xv.shape[2];
        Tensor out({B, C});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t c = 0; c < C; ++c) {
                T acc = T(0);
                for (std::size_t l = 0; l < L; ++l)
                    acc += xv.data[(bi * C + c) * L + l];
                out.data[bi * C + c] = acc / static_cast<T>(L);
            }
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            const T inv = T(1) / static_cast<T>(L);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t c = 0; c < C; ++c) {
                    const T g = node.grad.data[bi * C + c] * inv;
                    for (std::size_t l = 0; l < L; ++l)
                        accumulate(x, (bi * C + c) * L + l, g);
                }
        });
    }

    // x [B, n], w [m, n], b [m] -> [B, m]
    int linear(int x, int w, int b) {
        const auto& xv = val(x);
        const auto& wv = val(w);
        const auto& bv = val(b);
        if (xv.shape.size() != 2 || wv.shape.size() != 2 || bv.shape.size() != 1)
            throw DataError("linear: rank mismatch");
        const std::size_t B = xv.shape[0], n = xv.shape[1], m = wv.shape[0];
        if (wv.shape[1] != n || bv.shape[0] != m)
            throw DataError("linear: dimension mismatch");
        Tensor out({B, m});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t j = 0; j < m; ++j) {
                T acc = bv.data[j];
                const T* xr = &xv.data[bi * n];
                const T* wr = &wv.data[j * n];
                for (std::size_t i = 0; i < n; ++i) acc += wr[i] * xr[i];
                out.data[bi * m + j] = acc;
            }
        return add_op(std::move(out), {x, w, b}, [=, this](Node& node) {
            const auto& xv2 = val(x);
            const auto& wv2 = val(w);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t j = 0; j < m; ++j) {
                    const T g = node.grad.data[bi * m + j];
                    if (g == T(0)) continue;
                    accumulate(b, j, g);
                    for (std::size_t i = 0; i < n; ++i) {
                        accumulate(w, j * n + i, g * xv2.data[bi * n + i]);
                        accumulate(x, bi * n + i, g * wv2.data[j * n + i]);
                    }
                }
        });
    }

    // [a, k] x [k, c] -> [a, c]
    int matmul(int a, int b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[1] != bv.shape[0])
            throw DataError("matmul: dimension mismatch");
        const std::size_t A = av.shape[0], K = av.shape[1], C = bv.shape[1];
        Tensor out({A, C});
        for (std::size_t i = 0; i < A; ++i)
            for (std::size_t k = 0; k < K; ++k) {
                const T ai = av.data[i * K + k];
                for (std::size_t j = 0; j < C; ++j)
                    out.data[i * C + j] += ai * bv.data[k * C + j];
            }
        return add_op(std::move(out), {a, b}, [=, this](Node& node) {
            const auto& av2 = val(a);
            const auto& bv2 = val(b);
            for (std::size_t i = 0; i < A; ++i)
                for (std::size_t j = 0; j < C; ++j) {
                    const T g = node.grad.data[i * C + j];
                    if (g == T(0)) continue;
                    for (std::size_t k = 0; k < K; ++k) {
                        accumulate(a, i * K + k, g * bv2.data[k * C + j]);
                        accumulate(b, k * C + j, g * av2.data[i * K + k]);
                    }
                }
        });
    }

    int add(int a, int b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (av.shape != bv.shape) throw DataError("add: shape mismatch");
        Tensor out = av;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
        return add_op(std::move(out), {a, b}, [=, this](Node& node) {
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
                accumulate(a, i, node.grad.data[i]);
                accumulate(b, i, node.grad.data[i]);
            }
        });
    }

    int mul(int a, int b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (av.shape != bv.shape) throw DataError("mul: shape mismatch");
        Tensor out = av;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
        return add_op(std::move(out), {a, b}, [=, this](Node& node) {
            const auto& av2 = val(a);
            const auto& bv2 = val(b);
            for (std::size_t i = 0; i < node.grad.size(); ++i) {
                accumulate(a, i, node.grad.data[i] * bv2.data[i]);
                accumulate(b, i, node.grad.data[i] * av2.data[i]);
            }
        });
    }

    int scale(int x, T s) {
        Tensor out = val(x);
        for (auto& v : out.data) v *= s;
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            for (std::size_t i = 0; i < node.grad.size(); ++i)
                accumulate(x, i, node.grad.data[i] * s);
        });
    }

    int sum(int x) {
        T acc = T(0);
        for (T v : val(x).data) acc += v;
        Tensor out({1});
        out.data[0] = acc;
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            const T g = node.grad.data[0];
            for (std::size_t i = 0; i < val(x).size(); ++i) accumulate(x, i, g);
        });
    }

    int mean(int x) {
        const auto n = static_cast<T>(val(x).size());
        return scale(sum(x), T(1) / n);
    }

    // Mean softmax cross entropy of logits [B, C] against integer labels.
    int softmax_cross_entropy(int logits, const std::vector<std::size_t>& labels) {
        const auto& lv = val(logits);
        if (lv.shape.size() != 2) throw DataError("softmax_cross_entropy: rank mismatch");
        const std::size_t B = lv.shape[0], C = lv.shape[1];
        if (labels.size() != B)
            throw DataError("softmax_cross_entropy: label count mismatch");
        auto probs = std::make_shared<std::vector<T>>(B * C);
        T loss = T(0);
        for (std::size_t bi = 0; bi < B; ++bi) {
            if (labels[bi] >= C) throw DataError("softmax_cross_entropy: label out of range");
            const T* row = &lv.data[bi * C];
            const T mx = *std::max_element(row, row + C);
            T z = T(0);
            for (std::size_t c = 0; c < C; ++c) {
                const T e = std::exp(row[c] - mx);
                (*probs)[bi * C + c] = e;
                z += e;
            }
            for (std::size_t c = 0; c < C; ++c) (*probs)[bi * C + c] /= z;
            loss -= std::log((*probs)[bi * C + labels[bi]] + kNormEps);
        }
        Tensor out({1});
        out.data[0] = loss / static_cast<T>(B);
        return add_op(std::move(out), {logits}, [=, this](Node& node) {
            const T g = node.grad.data[0] / static_cast<T>(B);
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t c = 0; c < C; ++c) {
                    T d = (*probs)[bi * C + c];
                    if (c == labels[bi]) d -= T(1);
                    accumulate(logits, bi * C + c, g * d);
                }
        });
    }

    // Mean squared error against a constant target of identical shape.
    int mean_squared_error(int pred, const Tensor& target) {
        const auto& pv = val(pred);
        if (pv.shape != target.shape)
            throw DataError("mean_squared_error: shape mismatch");
        const auto n = static_cast<T>(pv.size());
        T loss = T(0);
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const T d = pv.data[i] - target.data[i];
            loss += d * d;
        }
        Tensor out({1});
        out.data[0] = loss / n;
        auto tgt = std::make_shared<Tensor>(target);
        return add_op(std::move(out), {pred}, [=, this](Node& node) {
            const T g = node.grad.data[0] * T(2) / n;
            const auto& pv2 = val(pred);
            for (std::size_t i = 0; i < pv2.size(); ++i)
                accumulate(pred, i, g * (pv2.data[i] - tgt->data[i]));
        });
    }

    // Row-wise cosine similarity. [d] x [d] -> scalar; [B, d] x [B, d] -> [B].
    // Output clamped to [-1, 1]. Zero-norm rows raise NumericError.
    int cosine_similarity(int a, int b) {
        const auto& av = val(a);
        const auto& bv = val(b);
        if (av.shape != bv.shape || av.shape.empty())
            throw DataError("cosine_similarity: shape mismatch");
        const std::size_t d = av.shape.back();
        const std::size_t B = av.size() / d;

        auto na = std::make_shared<std::vector<T>>(B);
        auto nb = std::make_shared<std::vector<T>>(B);
        auto cs = std::make_shared<std::vector<T>>(B);
        Tensor out(av.shape.size() == 1 ? std::vector<std::size_t>{1}
                                        : std::vector<std::size_t>{B});
        for (std::size_t r = 0; r < B; ++r) {
            const T* ar = &av.data[r * d];
            const T* br = &bv.data[r * d];
            T dot = T(0), sa = T(0), sb = T(0);
            for (std::size_t i = 0; i < d; ++i) {
                dot += ar[i] * br[i];
                sa += ar[i] * ar[i];
                sb += br[i] * br[i];
            }
            if (sa == T(0) || sb == T(0))
                throw NumericError("degenerate vector in cosine similarity");
            (*na)[r] = std::sqrt(sa);
            (*nb)[r] = std::sqrt(sb);
            const T c = dot / ((*na)[r] * (*nb)[r]);
            (*cs)[r] = c;
            out.data[r] = std::clamp(c, T(-1), T(1));
        }
        return add_op(std::move(out), {a, b}, [=, this](Node& node) {
            const auto& av2 = val(a);
            const auto& bv2 = val(b);
            for (std::size_t r = 0; r < B; ++r) {
                const T g = node.grad.data[r];
                if (g == T(0)) continue;
                const T inv = T(1) / ((*na)[r] * (*nb)[r]);
                const T ca = (*cs)[r] / ((*na)[r] * (*na)[r]);
                const T cb = (*cs)[r] / ((*nb)[r] * (*nb)[r]);
                for (std::size_t i = 0; i < d; ++i) {
                    accumulate(a, r * d + i,
                               g * (bv2.data[r * d + i] * inv - ca * av2.data[r * d + i]));
                    accumulate(b, r * d + i,
                               g * (av2.data[r * d + i] * inv - cb * bv2.data[r * d + i]));
                }
            }
        });
    }

    // Same data, new shape; backward passes gradients straight through.
    int reshape(int x, std::vector<std::size_t> new_shape) {
        const auto& xv = val(x);
        if (Tensor::count(new_shape) != xv.size())
            throw DataError("reshape: element count mismatch");
        Tensor out(std::move(new_shape), xv.data);
        return add_op(std::move(out), {x}, [=, this](Node& node) {
            for (std::size_t i = 0; i < node.grad.size(); ++i)
                accumulate(x, i, node.grad.data[i]);
        });
    }

    // Forward identity, no backward edge.
    int stop_gradient(int x) {
        Tensor out = val(x);
        int id = add_node(std::move(out), false);
        nodes_[id].backprop = nullptr;
        return id;
    }

    void backward(int loss) {
        if (backward_done_)
            throw NumericError("backward called twice without reset");
        const auto& lv = val(loss);
        if (lv.size() != 1) throw NumericError("backward requires a scalar loss");
        backward_done_ = true;
        for (auto& n : nodes_) n.grad = Tensor(n.value.shape);
        nodes_[loss].grad.data[0] = T(1);
        for (int i = loss; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.backprop) n.backprop(n);
        }
    }

    void reset() {
        nodes_.clear();
        backward_done_ = false;
    }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Node&)> backprop;
    };

    int check(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw DataError("invalid graph node id");
        return id;
    }

    int add_node(Tensor v, bool requires_grad) {
        if (backward_done_)
            throw NumericError("graph extended after backward; call reset first");
        Node n;
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int add_op(Tensor out, std::initializer_list<int> parents,
               std::function<void(Node&)> backprop) {
        bool rg = false;
        for (int p : parents) rg = rg || nodes_[check(p)].requires_grad;
        int id = add_node(std::move(out), rg);
        if (rg) nodes_[id].backprop = std::move(backprop);
        return id;
    }

    void accumulate(int id, std::size_t flat_index, T g) {
        Node& n = nodes_[id];
        if (n.requires_grad) n.grad.data[flat_index] += g;
    }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

using GraphF = GraphT<float>;
using GraphD = GraphT<double>;

// Symmetric halved SimSiam objective with stop-gradient targets:
//   L = -1/2 [ mean cos(p1, sg(z2)) + mean cos(p2, sg(z1)) ],  L in [-1, 1].
template <typename T>
int pair_loss(GraphT<T>& g, int p1, int z1, int p2, int z2) {
    const int c1 = g.mean(g.cosine_similarity(p1, g.stop_gradient(z2)));
    const int c2 = g.mean(g.cosine_similarity(p2, g.stop_gradient(z1)));
    return g.scale(g.add(c1, c2), static_cast<T>(-0.5));
}

}  // namespace siamq::ad
