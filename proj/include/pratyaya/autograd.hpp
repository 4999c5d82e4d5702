#pragma once

// Dense-tensor numeric core with tape-based reverse-mode differentiation.
// Templated on the scalar type: training runs in float, while the finite
// difference verification path instantiates the same graphs in double.
// Broadcasting is limited to scalars; the structured cases a recurrent
// model needs (row bias, per-row scaling, row gather) are explicit ops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pratyaya/common.hpp"

namespace pratyaya::autograd {

class shape_mismatch : public error {
 public:
  using error::error;
};

class not_scalar : public error {
 public:
  not_scalar() : error("backward requires a scalar loss") {}
};

class index_out_of_range : public error {
 public:
  using error::error;
};

class non_finite : public error {
 public:
  using error::error;
};

class all_masked : public error {
 public:
  all_masked() : error("softmax row has no unmasked position") {}
};

template <typename S>
struct tensor_store {
  std::vector<std::size_t> shape;
  std::vector<S> value;
  std::vector<S> grad;  // same length as value when requires_grad
  bool requires_grad = false;

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? size() / rows() : shape[1]; }
  void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

template <typename S>
using tensor = std::shared_ptr<tensor_store<S>>;

template <typename S>
tensor<S> make_tensor(std::vector<std::size_t> shape, bool requires_grad = false) {
  auto t = std::make_shared<tensor_store<S>>();
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  t->shape = std::move(shape);
  t->value.assign(n, S(0));
  if (requires_grad) t->grad.assign(n, S(0));
  t->requires_grad = requires_grad;
  return t;
}

template <typename S>
tensor<S> make_scalar(S value) {
  auto t = make_tensor<S>({1});
  t->value[0] = value;
  return t;
}

template <typename S>
void zero_grads(const std::vector<tensor<S>>& tensors) {
  for (const auto& t : tensors) t->zero_grad();
}

// mt19937_64 bits -> [0,1) with 53-bit resolution; language-portable.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

template <typename S>
void fill_uniform(const tensor<S>& t, std::mt19937_64& rng, double scale) {
  for (S& v : t->value) v = static_cast<S>((2.0 * uniform_unit(rng) - 1.0) * scale);
}

namespace detail {

// Mul-add count above which a matmul is worth spreading across threads.
inline constexpr std::size_t parallel_threshold = std::size_t(1) << 18;

// c[m,n] (+)= a[m,k] b[k,n]
template <typename S>
void matmul_nn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
  const bool parallel = m * k * n > parallel_threshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    S* row_c = c + i * static_cast<std::ptrdiff_t>(n);
    if (!accumulate) std::fill(row_c, row_c + n, S(0));
    const S* row_a = a + i * static_cast<std::ptrdiff_t>(k);
    for (std::size_t l = 0; l < k; ++l) {
      const S s = row_a[l];
      const S* row_b = b + l * n;
      for (std::size_t j = 0; j < n; ++j) row_c[j] += s * row_b[j];
    }
  }
}

// c[m,k] += a[m,n] b[k,n]^T
template <typename S>
void matmul_nt(const S* a, const S* b, S* c, std::size_t m, std::size_t n, std::size_t k) {
  const bool parallel = m * k * n > parallel_threshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const S* row_a = a + i * static_cast<std::ptrdiff_t>(n);
    S* row_c = c + i * static_cast<std::ptrdiff_t>(k);
    for (std::size_t j = 0; j < k; ++j) {
      const S* row_b = b + j * n;
      S acc = S(0);
      for (std::size_t l = 0; l < n; ++l) acc += row_a[l] * row_b[l];
      row_c[j] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T b[m,n]
template <typename S>
void matmul_tn(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n) {
  const bool parallel = m * k * n > parallel_threshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i) {
    S* row_c = c + i * static_cast<std::ptrdiff_t>(n);
    for (std::size_t l = 0; l < m; ++l) {
      const S s = a[l * k + i];
      const S* row_b = b + l * n;
      for (std::size_t j = 0; j < n; ++j) row_c[j] += s * row_b[j];
    }
  }
}

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) {
    return S(1) / (S(1) + std::exp(-x));
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace detail

// Records one backward closure per operation, in execution order; backward
// replays them once, in reverse. A tape is confined to one execution
// context; leaf tensors (parameters) outlive it.
template <typename S>
class tape {
 public:
  explicit tape(bool record_gradients = true) : record_(record_gradients) {}

  std::size_t node_count() const { return nodes_.size(); }

  tensor<S> constant(std::vector<std::size_t> shape, std::vector<S> values) {
    auto t = make_tensor<S>(std::move(shape));
    if (t->value.size() != values.size()) throw shape_mismatch("constant: value count");
    t->value = std::move(values);
    return t;
  }

  tensor<S> matmul(const tensor<S>& a, const tensor<S>& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
    if (b->rows() != k) {
      throw shape_mismatch("matmul: inner dimensions " + std::to_string(k) + " vs " +
                           std::to_string(b->rows()));
    }
    auto out = result({m, n}, a, b);
    detail::matmul_nn(a->value.data(), b->value.data(), out->value.data(), m, k, n, false);
    if (out->requires_grad) {
      record([a, b, out, m, k, n] {
        if (a->requires_grad) {
          detail::matmul_nt(out->grad.data(), b->value.data(), a->grad.data(), m, n, k);
        }
        if (b->requires_grad) {
          detail::matmul_tn(a->value.data(), out->grad.data(), b->grad.data(), m, k, n);
        }
      });
    }
    return out;
  }

  tensor<S> add(const tensor<S>& a, const tensor<S>& b) { return binary(a, b, /*is_add=*/true); }
  tensor<S> mul(const tensor<S>& a, const tensor<S>& b) { return binary(a, b, /*is_add=*/false); }

  tensor<S> sigmoid(const tensor<S>& x) {
    auto out = result(x->shape, x);
    for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = detail::stable_sigmoid(x->value[i]);
    if (out->requires_grad) {
      record([x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) {
          const S s = out->value[i];
          x->grad[i] += s * (S(1) - s) * out->grad[i];
        }
      });
    }
    return out;
  }

  tensor<S> tanh(const tensor<S>& x) {
    auto out = result(x->shape, x);
    for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = std::tanh(x->value[i]);
    if (out->requires_grad) {
      record([x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) {
          const S t = out->value[i];
          x->grad[i] += (S(1) - t * t) * out->grad[i];
        }
      });
    }
    return out;
  }

  tensor<S> relu(const tensor<S>& x) {
    auto out = result(x->shape, x);
    for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = std::max(S(0), x->value[i]);
    if (out->requires_grad) {
      record([x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) {
          if (x->value[i] > S(0)) x->grad[i] += out->grad[i];
        }
      });
    }
    return out;
  }

  tensor<S> scale(const tensor<S>& x, S factor) {
    auto out = result(x->shape, x);
    for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = factor * x->value[i];
    if (out->requires_grad) {
      record([x, out, factor] {
        for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += factor * out->grad[i];
      });
    }
    return out;
  }

  // mat[m,n] + bias[n], one bias row added to every matrix row
  tensor<S> add_row_bias(const tensor<S>& mat, const tensor<S>& bias) {
    require_matrix(mat, "add_row_bias mat");
    const std::size_t m = mat->rows(), n = mat->cols();
    if (bias->size() != n) {
      throw shape_mismatch("add_row_bias: bias size " + std::to_string(bias->size()) +
                           " vs cols " + std::to_string(n));
    }
    auto out = result(mat->shape, mat, bias);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        out->value[i * n + j] = mat->value[i * n + j] + bias->value[j];
      }
    }
    if (out->requires_grad) {
      record([mat, bias, out, m, n] {
        if (mat->requires_grad) {
          for (std::size_t i = 0; i < m * n; ++i) mat->grad[i] += out->grad[i];
        }
        if (bias->requires_grad) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) bias->grad[j] += out->grad[i * n + j];
          }
        }
      });
    }
    return out;
  }

  // mat[m,n] with row i multiplied by col[i]
  tensor<S> scale_rows(const tensor<S>& mat, const tensor<S>& col) {
    require_matrix(mat, "scale_rows mat");
    const std::size_t m = mat->rows(), n = mat->cols();
    if (col->size() != m) {
      throw shape_mismatch("scale_rows: column size " + std::to_string(col->size()) + " vs rows " +
                           std::to_string(m));
    }
    auto out = result(mat->shape, mat, col);
    for (std::size_t i = 0; i < m; ++i) {
      const S s = col->value[i];
      for (std::size_t j = 0; j < n; ++j) out->value[i * n + j] = s * mat->value[i * n + j];
    }
    if (out->requires_grad) {
      record([mat, col, out, m, n] {
        for (std::size_t i = 0; i < m; ++i) {
          const S s = col->value[i];
          S dot = S(0);
          for (std::size_t j = 0; j < n; ++j) {
            const S g = out->grad[i * n + j];
            if (mat->requires_grad) mat->grad[i * n + j] += s * g;
            dot += mat->value[i * n + j] * g;
          }
          if (col->requires_grad) col->grad[i] += dot;
        }
      });
    }
    return out;
  }

  tensor<S> concat_cols(const std::vector<tensor<S>>& parts) {
    if (parts.empty()) throw shape_mismatch("concat_cols: no inputs");
    const std::size_t m = parts[0]->rows();
    std::size_t total = 0;
    bool needs = false;
    for (const auto& p : parts) {
      require_matrix(p, "concat_cols part");
      if (p->rows() != m) throw shape_mismatch("concat_cols: row mismatch");
      total += p->cols();
      needs = needs || p->requires_grad;
    }
    auto out = alloc({m, total}, needs);
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t n = p->cols();
      for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(p->value.data() + i * n, n, out->value.data() + i * total + offset);
      }
      offset += n;
    }
    if (out->requires_grad) {
      record([parts, out, m, total] {
        std::size_t off = 0;
        for (const auto& p : parts) {
          const std::size_t n = p->cols();
          if (p->requires_grad) {
            for (std::size_t i = 0; i < m; ++i) {
              for (std::size_t j = 0; j < n; ++j) {
                p->grad[i * n + j] += out->grad[i * total + off + j];
              }
            }
          }
          off += n;
        }
      });
    }
    return out;
  }

  tensor<S> slice_cols(const tensor<S>& x, std::size_t from, std::size_t to) {
    require_matrix(x, "slice_cols");
    const std::size_t m = x->rows(), n = x->cols();
    if (from > to || to > n) throw shape_mismatch("slice_cols: bad range");
    const std::size_t w = to - from;
    auto out = result({m, w}, x);
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(x->value.data() + i * n + from, w, out->value.data() + i * w);
    }
    if (out->requires_grad) {
      record([x, out, m, n, from, w] {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < w; ++j) x->grad[i * n + from + j] += out->grad[i * w + j];
        }
      });
    }
    return out;
  }

  // out[i,:] = mat[indices[i],:]; the one-hot matmul, without the zeros
  tensor<S> gather_rows(const tensor<S>& mat, const std::vector<int>& indices) {
    require_matrix(mat, "gather_rows");
    const std::size_t v = mat->rows(), n = mat->cols();
    for (int idx : indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
        throw index_out_of_range("gather_rows: index " + std::to_string(idx));
      }
    }
    const std::size_t m = indices.size();
    auto out = result({m, n}, mat);
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(mat->value.data() + static_cast<std::size_t>(indices[i]) * n, n,
                  out->value.data() + i * n);
    }
    if (out->requires_grad) {
      record([mat, out, indices, m, n] {
        for (std::size_t i = 0; i < m; ++i) {
          S* dst = mat->grad.data() + static_cast<std::size_t>(indices[i]) * n;
          const S* src = out->grad.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
        }
      });
    }
    return out;
  }

  // Row-wise softmax with masked positions forced to zero weight.
  // mask has one byte per element of scores; throws all_masked when a row
  // has no usable position.
  tensor<S> masked_softmax(const tensor<S>& scores, const std::vector<unsigned char>& mask) {
    require_matrix(scores, "masked_softmax");
    const std::size_t m = scores->rows(), n = scores->cols();
    if (mask.size() != m * n) throw shape_mismatch("masked_softmax: mask size");
    auto out = result(scores->shape, scores);
    for (std::size_t i = 0; i < m; ++i) {
      const S* row = scores->value.data() + i * n;
      const unsigned char* row_mask = mask.data() + i * n;
      S max_score = std::numeric_limits<S>::lowest();
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (row_mask[j]) {
          max_score = any ? std::max(max_score, row[j]) : row[j];
          any = true;
        }
      }
      if (!any) throw all_masked();
      S denom = S(0);
      S* out_row = out->value.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        out_row[j] = row_mask[j] ? std::exp(row[j] - max_score) : S(0);
        denom += out_row[j];
      }
      for (std::size_t j = 0; j < n; ++j) out_row[j] /= denom;
    }
    if (out->requires_grad) {
      record([scores, out, m, n] {
        for (std::size_t i = 0; i < m; ++i) {
          const S* p = out->value.data() + i * n;
          const S* g = out->grad.data() + i * n;
          S dot = S(0);
          for (std::size_t j = 0; j < n; ++j) dot += p[j] * g[j];
          for (std::size_t j = 0; j < n; ++j) scores->grad[i * n + j] += p[j] * (g[j] - dot);
        }
      });
    }
    return out;
  }

  // Mean of -log softmax(logits)[target] over unmasked rows; masked rows
  // contribute nothing to value or gradient. Fully masked batch -> 0.
  tensor<S> softmax_cross_entropy(const tensor<S>& logits, const std::vector<int>& targets,
                                  const std::vector<unsigned char>& mask) {
    require_matrix(logits, "softmax_cross_entropy");
    const std::size_t m = logits->rows(), v = logits->cols();
    if (targets.size() != m || mask.size() != m) {
      throw shape_mismatch("softmax_cross_entropy: batch size");
    }
    for (int t : targets) {
      if (t < 0 || static_cast<std::size_t>(t) >= v) {
        throw index_out_of_range("softmax_cross_entropy: target " + std::to_string(t));
      }
    }

    auto probs = std::make_shared<std::vector<S>>(m * v);
    std::size_t count = 0;
    S total = S(0);
    for (std::size_t i = 0; i < m; ++i) {
      if (!mask[i]) continue;
      ++count;
      const S* row = logits->value.data() + i * v;
      S max_logit = row[0];
      for (std::size_t j = 1; j < v; ++j) max_logit = std::max(max_logit, row[j]);
      S denom = S(0);
      S* prob_row = probs->data() + i * v;
      for (std::size_t j = 0; j < v; ++j) {
        prob_row[j] = std::exp(row[j] - max_logit);
        denom += prob_row[j];
      }
      for (std::size_t j = 0; j < v; ++j) prob_row[j] /= denom;
      total -= std::log(prob_row[static_cast<std::size_t>(targets[i])]);
    }

    auto out = result({1}, logits);
    out->value[0] = count == 0 ? S(0) : total / static_cast<S>(count);
    if (out->requires_grad && count > 0) {
      record([logits, out, probs, targets, mask, m, v, count] {
        const S upstream = out->grad[0] / static_cast<S>(count);
        for (std::size_t i = 0; i < m; ++i) {
          if (!mask[i]) continue;
          const S* prob_row = probs->data() + i * v;
          S* grad_row = logits->grad.data() + i * v;
          const auto target = static_cast<std::size_t>(targets[i]);
          for (std::size_t j = 0; j < v; ++j) {
            grad_row[j] += (prob_row[j] - (j == target ? S(1) : S(0))) * upstream;
          }
        }
      });
    }
    return out;
  }

  tensor<S> sum(const tensor<S>& x) {
    auto out = result({1}, x);
    out->value[0] = std::accumulate(x->value.begin(), x->value.end(), S(0));
    if (out->requires_grad) {
      record([x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
      });
    }
    return out;
  }

  // Seeds d(loss)/d(loss) = 1 and replays the recorded closures in reverse;
  // grads of tensors not reachable from the loss stay zero.
  void backward(const tensor<S>& loss) {
    if (loss->size() != 1) throw not_scalar();
    if (loss->requires_grad) loss->grad[0] += S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

 private:
  bool record_;
  std::vector<std::function<void()>> nodes_;

  static void require_matrix(const tensor<S>& t, const char* what) {
    if (t->shape.size() > 2 || t->size() == 0) {
      throw shape_mismatch(std::string(what) + ": expected a non-empty matrix");
    }
  }

  bool track(const tensor<S>& a) const { return record_ && a->requires_grad; }

  tensor<S> alloc(std::vector<std::size_t> shape, bool needs_grad) {
    return make_tensor<S>(std::move(shape), record_ && needs_grad);
  }

  tensor<S> result(std::vector<std::size_t> shape, const tensor<S>& a) {
    return alloc(std::move(shape), track(a));
  }

  tensor<S> result(std::vector<std::size_t> shape, const tensor<S>& a, const tensor<S>& b) {
    return alloc(std::move(shape), track(a) || track(b));
  }

  void record(std::function<void()> node) { nodes_.push_back(std::move(node)); }

  // add/mul over exact shapes, or with one side a 1-element scalar
  tensor<S> binary(const tensor<S>& a, const tensor<S>& b, bool is_add) {
    const bool a_scalar = a->size() == 1, b_scalar = b->size() == 1;
    if (a->shape != b->shape && !a_scalar && !b_scalar) {
      throw shape_mismatch(is_add ? "add: shape mismatch" : "mul: shape mismatch");
    }
    const tensor<S>& big = b_scalar && !a_scalar ? a : (a_scalar && !b_scalar ? b : a);
    auto out = result(big->shape, a, b);
    const std::size_t n = out->size();
    for (std::size_t i = 0; i < n; ++i) {
      const S av = a->value[a_scalar ? 0 : i];
      const S bv = b->value[b_scalar ? 0 : i];
      out->value[i] = is_add ? av + bv : av * bv;
    }
    if (out->requires_grad) {
      record([a, b, out, is_add, a_scalar, b_scalar, n] {
        for (std::size_t i = 0; i < n; ++i) {
          const S g = out->grad[i];
          if (a->requires_grad) {
            a->grad[a_scalar ? 0 : i] += is_add ? g : g * b->value[b_scalar ? 0 : i];
          }
          if (b->requires_grad) {
            b->grad[b_scalar ? 0 : i] += is_add ? g : g * a->value[a_scalar ? 0 : i];
          }
        }
      });
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Finite-difference verification

template <typename S>
struct gradient_check_result {
  S max_rel_error = S(0);
  std::size_t components = 0;
};

namespace detail {

template <typename S, typename Eval>
S central_difference(tensor_store<S>& p, std::size_t i, S step, Eval&& eval) {
  const S original = p.value[i];
  p.value[i] = original + step;
  const S plus = eval();
  p.value[i] = original - step;
  const S minus = eval();
  p.value[i] = original;
  return (plus - minus) / (S(2) * step);
}

template <typename S>
S relative_error(S analytic, S numeric) {
  const S denom = std::max({std::abs(analytic), std::abs(numeric), S(1e-8)});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace detail

// Compares analytic gradients of build_loss against central differences
// (f(x+h) - f(x-h)) / 2h for every component of every parameter.
// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
template <typename S>
gradient_check_result<S> gradient_check(const std::vector<tensor<S>>& params,
                                        const std::function<tensor<S>(tape<S>&)>& build_loss,
                                        S step) {
  zero_grads(params);
  tape<S> t;
  auto loss = build_loss(t);
  if (loss->size() != 1) throw not_scalar();
  if (!std::isfinite(static_cast<double>(loss->value[0]))) {
    throw non_finite("loss is not finite at the evaluation point");
  }
  t.backward(loss);

  std::vector<std::vector<S>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    tape<S> forward_only(false);
    auto l = build_loss(forward_only);
    const S v = l->value[0];
    if (!std::isfinite(static_cast<double>(v))) throw non_finite("perturbed loss is not finite");
    return v;
  };

  gradient_check_result<S> outcome;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    if (!p.requires_grad) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const S numeric = detail::central_difference(p, i, step, eval);
      outcome.max_rel_error =
          std::max(outcome.max_rel_error, detail::relative_error(analytic[pi][i], numeric));
      ++outcome.components;
    }
  }
  return outcome;
}

// Multi-step variant for graphs whose gradients span many orders of
// magnitude: no single step size works, because components near zero need
// a large step to climb above f64 cancellation noise while large
// components need a small one to keep truncation down. Each component is
// scored with its best step from the grid; every comparison is still
// analytic versus central difference.
template <typename S>
gradient_check_result<S> gradient_check_best(const std::vector<tensor<S>>& params,
                                             const std::function<tensor<S>(tape<S>&)>& build_loss,
                                             const std::vector<S>& steps) {
  if (steps.empty()) throw error("gradient_check_best: empty step grid");
  zero_grads(params);
  tape<S> t;
  auto loss = build_loss(t);
  if (loss->size() != 1) throw not_scalar();
  if (!std::isfinite(static_cast<double>(loss->value[0]))) {
    throw non_finite("loss is not finite at the evaluation point");
  }
  t.backward(loss);

  std::vector<std::vector<S>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    tape<S> forward_only(false);
    auto l = build_loss(forward_only);
    const S v = l->value[0];
    if (!std::isfinite(static_cast<double>(v))) throw non_finite("perturbed loss is not finite");
    return v;
  };

  gradient_check_result<S> outcome;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    if (!p.requires_grad) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      S best = std::numeric_limits<S>::infinity();
      for (S step : steps) {
        const S numeric = detail::central_difference(p, i, step, eval);
        best = std::min(best, detail::relative_error(analytic[pi][i], numeric));
        if (best == S(0)) break;
      }
      outcome.max_rel_error = std::max(outcome.max_rel_error, best);
      ++outcome.components;
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Adam

template <typename S>
struct adam_config {
  S learning_rate = S(1e-3);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S epsilon = S(1e-7);
};

template <typename S>
class adam_state {
 public:
  explicit adam_state(std::vector<tensor<S>> params, adam_config<S> config = {})
      : params_(std::move(params)), config_(config) {
    for (const auto& p : params_) {
      if (!p->requires_grad) throw shape_mismatch("adam: parameter without gradient buffer");
      first_moment_.emplace_back(p->size(), S(0));
      second_moment_.emplace_back(p->size(), S(0));
    }
  }

  // One update from the gradients currently on the parameters.
  void step() {
    ++step_count_;
    const double bias1 = 1.0 - std::pow(static_cast<double>(config_.beta1), step_count_);
    const double bias2 = 1.0 - std::pow(static_cast<double>(config_.beta2), step_count_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& p = *params_[pi];
      if (p.grad.size() != p.value.size()) throw shape_mismatch("adam: gradient shape changed");
      auto& m = first_moment_[pi];
      auto& v = second_moment_[pi];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const S g = p.grad[i];
        m[i] = config_.beta1 * m[i] + (S(1) - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (S(1) - config_.beta2) * g * g;
        const S m_hat = static_cast<S>(m[i] / bias1);
        const S v_hat = static_cast<S>(v[i] / bias2);
        p.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

  long step_count() const { return step_count_; }
  const adam_config<S>& config() const { return config_; }
  const std::vector<S>& first_moment(std::size_t i) const { return first_moment_[i]; }
  const std::vector<S>& second_moment(std::size_t i) const { return second_moment_[i]; }

 private:
  std::vector<tensor<S>> params_;
  std::vector<std::vector<S>> first_moment_;
  std::vector<std::vector<S>> second_moment_;
  adam_config<S> config_;
  long step_count_ = 0;
};

}  // namespace pratyaya::autograd
