#include "spades/tape.hpp"

#include "spades/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spades {

void Tape::backward(const Var& output) {
    if (output->size() != 1) throw std::invalid_argument("backward: output must be scalar");
    output->ensure_grad();
    output->g[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Var make_output(std::vector<std::size_t> shape) {
    auto out = make_var(Tensor(std::move(shape)));
    out->ensure_grad();
    return out;
}

} // namespace

Var linear(Tape& tape, const Var& x, const Var& W, const Var& b) {
    require(W->rank() == 2, "linear: W must be rank-2");
    require(b->rank() == 1 && b->dim(0) == W->dim(1), "linear: b/W mismatch");
    const std::size_t in = W->dim(0);
    const std::size_t out_dim = W->dim(1);
    const bool vec = (x->rank() == 1);
    require(vec ? x->dim(0) == in : (x->rank() == 2 && x->dim(1) == in),
            "linear: x/W inner dimensions disagree");
    const std::size_t n = vec ? 1 : x->dim(0);

    Var y = make_output(vec ? std::vector<std::size_t>{out_dim}
                            : std::vector<std::size_t>{n, out_dim});
    for (std::size_t r = 0; r < n; ++r) {
        const double* xr = x->v.data() + r * in;
        double* yr = y->v.data() + r * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) yr[j] = b->v[j];
        for (std::size_t i = 0; i < in; ++i) {
            const double xv = xr[i];
            const double* wrow = W->v.data() + i * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) yr[j] += xv * wrow[j];
        }
    }

    x->ensure_grad();
    W->ensure_grad();
    b->ensure_grad();
    tape.record([x, W, b, y, n, in, out_dim]() {
        for (std::size_t r = 0; r < n; ++r) {
            const double* xr = x->v.data() + r * in;
            const double* gy = y->g.data() + r * out_dim;
            double* gx = x->g.data() + r * in;
            for (std::size_t j = 0; j < out_dim; ++j) b->g[j] += gy[j];
            for (std::size_t i = 0; i < in; ++i) {
                const double* wrow = W->v.data() + i * out_dim;
                double* gwrow = W->g.data() + i * out_dim;
                double acc = 0.0;
                for (std::size_t j = 0; j < out_dim; ++j) {
                    acc += wrow[j] * gy[j];
                    gwrow[j] += xr[i] * gy[j];
                }
                gx[i] += acc;
            }
        }
    });
    return y;
}

Var dilated_causal_conv(Tape& tape, const Var& x, const Var& kernel, const Var& bias,
                        std::size_t dilation) {
    require(x->rank() == 2, "conv: x must be rank-2 [T,Cin]");
    require(kernel->rank() == 3, "conv: kernel must be rank-3 [W,Cin,Cout]");
    require(dilation >= 1, "conv: dilation must be >= 1");
    const std::size_t T = x->dim(0);
    const std::size_t cin = x->dim(1);
    const std::size_t width = kernel->dim(0);
    require(width >= 1, "conv: kernel width must be >= 1");
    require(kernel->dim(1) == cin, "conv: kernel input channels mismatch");
    const std::size_t cout = kernel->dim(2);
    require(bias->rank() == 1 && bias->dim(0) == cout, "conv: bias mismatch");

    Var y = make_output({T, cout});
    for (std::size_t t = 0; t < T; ++t) {
        double* yr = y->v.data() + t * cout;
        for (std::size_t co = 0; co < cout; ++co) yr[co] = bias->v[co];
        for (std::size_t k = 0; k < width; ++k) {
            // k = width-1 is the current step; smaller k reach further back.
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t) -
                static_cast<std::ptrdiff_t>((width - 1 - k) * dilation);
            if (src < 0) continue;
            const double* xr = x->v.data() + static_cast<std::size_t>(src) * cin;
            const double* kr = kernel->v.data() + (k * cin) * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double xv = xr[ci];
                for (std::size_t co = 0; co < cout; ++co) yr[co] += xv * kr[ci * cout + co];
            }
        }
    }

    x->ensure_grad();
    kernel->ensure_grad();
    bias->ensure_grad();
    tape.record([x, kernel, bias, y, T, cin, cout, width, dilation]() {
        for (std::size_t t = 0; t < T; ++t) {
            const double* gy = y->g.data() + t * cout;
            for (std::size_t co = 0; co < cout; ++co) bias->g[co] += gy[co];
            for (std::size_t k = 0; k < width; ++k) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(t) -
                    static_cast<std::ptrdiff_t>((width - 1 - k) * dilation);
                if (src < 0) continue;
                const double* xr = x->v.data() + static_cast<std::size_t>(src) * cin;
                double* gx = x->g.data() + static_cast<std::size_t>(src) * cin;
                const double* kr = kernel->v.data() + (k * cin) * cout;
                double* gk = kernel->g.data() + (k * cin) * cout;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    double acc = 0.0;
                    for (std::size_t co = 0; co < cout; ++co) {
                        acc += kr[ci * cout + co] * gy[co];
                        gk[ci * cout + co] += xr[ci] * gy[co];
                    }
                    gx[ci] += acc;
                }
            }
        }
    });
    return y;
}

std::vector<bool> left_pad_mask(std::size_t T, std::size_t receptive_field) {
    std::vector<bool> mask(T, false);
    for (std::size_t t = 0; t < T && t + 1 < receptive_field; ++t) mask[t] = true;
    return mask;
}

namespace {

template <typename Fwd, typename Grad>
Var elementwise(Tape& tape, const Var& x, Fwd fwd, Grad grad) {
    Var y = make_output(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) y->v[i] = fwd(x->v[i]);
    x->ensure_grad();
    tape.record([x, y, grad]() {
        for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += grad(x->v[i]) * y->g[i];
    });
    return y;
}

} // namespace

Var tanh_op(Tape& tape, const Var& x) {
    return elementwise(
        tape, x, [](double v) { return std::tanh(v); },
        [](double v) {
            const double t = std::tanh(v);
            return 1.0 - t * t;
        });
}

Var relu_op(Tape& tape, const Var& x) {
    return elementwise(
        tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus_op(Tape& tape, const Var& x) {
    return elementwise(
        tape, x, [](double v) { return softplus(v); },
        [](double v) { return softplus_grad(v); });
}

Var square_op(Tape& tape, const Var& x) {
    return elementwise(
        tape, x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var softmax_vec(Tape& tape, const Var& x) {
    require(x->rank() == 1, "softmax: rank-1 input expected");
    const std::size_t n = x->dim(0);
    Var y = make_output({n});
    const double mx = *std::max_element(x->v.begin(), x->v.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y->v[i] = std::exp(x->v[i] - mx);
        denom += y->v[i];
    }
    for (std::size_t i = 0; i < n; ++i) y->v[i] /= denom;
    x->ensure_grad();
    tape.record([x, y, n]() {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += y->v[i] * y->g[i];
        for (std::size_t i = 0; i < n; ++i) x->g[i] += y->v[i] * (y->g[i] - dot);
    });
    return y;
}

Var concat_cols(Tape& tape, const std::vector<Var>& xs) {
    require(!xs.empty(), "concat_cols: no inputs");
    const std::size_t T = xs.front()->dim(0);
    std::size_t total = 0;
    for (const auto& x : xs) {
        require(x->rank() == 2 && x->dim(0) == T, "concat_cols: time axes disagree");
        total += x->dim(1);
    }
    Var y = make_output({T, total});
    std::size_t off = 0;
    for (const auto& x : xs) {
        const std::size_t c = x->dim(1);
        for (std::size_t t = 0; t < T; ++t) {
            std::copy_n(x->v.data() + t * c, c, y->v.data() + t * total + off);
        }
        off += c;
    }
    for (const auto& x : xs) x->ensure_grad();
    tape.record([xs, y, T, total]() {
        std::size_t off = 0;
        for (const auto& x : xs) {
            const std::size_t c = x->dim(1);
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t j = 0; j < c; ++j) x->g[t * c + j] += y->g[t * total + off + j];
            }
            off += c;
        }
    });
    return y;
}

Var concat_vec(Tape& tape, const std::vector<Var>& xs) {
    require(!xs.empty(), "concat_vec: no inputs");
    std::size_t total = 0;
    for (const auto& x : xs) {
        require(x->rank() == 1, "concat_vec: rank-1 inputs expected");
        total += x->dim(0);
    }
    Var y = make_output({total});
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x->v.begin(), x->v.end(), y->v.begin() + static_cast<std::ptrdiff_t>(off));
        off += x->size();
    }
    for (const auto& x : xs) x->ensure_grad();
    tape.record([xs, y]() {
        std::size_t off = 0;
        for (const auto& x : xs) {
            for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += y->g[off + i];
            off += x->size();
        }
    });
    return y;
}

Var row_of(Tape& tape, const Var& x, std::size_t i) {
    require(x->rank() == 2 && i < x->dim(0), "row_of: index out of range");
    const std::size_t c = x->dim(1);
    Var y = make_output({c});
    std::copy_n(x->v.data() + i * c, c, y->v.data());
    x->ensure_grad();
    tape.record([x, y, i, c]() {
        for (std::size_t j = 0; j < c; ++j) x->g[i * c + j] += y->g[j];
    });
    return y;
}

Var mean_rows(Tape& tape, const Var& x) {
    require(x->rank() == 2 && x->dim(0) >= 1, "mean_rows: non-empty rank-2 input expected");
    const std::size_t n = x->dim(0);
    const std::size_t c = x->dim(1);
    Var y = make_output({c});
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < c; ++j) y->v[j] += x->v[t * c + j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < c; ++j) y->v[j] *= inv;
    x->ensure_grad();
    tape.record([x, y, n, c, inv]() {
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t j = 0; j < c; ++j) x->g[t * c + j] += inv * y->g[j];
        }
    });
    return y;
}

Var scale_by_gate(Tape& tape, const Var& x, const Var& gate, std::size_t g) {
    require(gate->rank() == 1 && g < gate->dim(0), "scale_by_gate: gate index out of range");
    Var y = make_output(x->shape());
    const double w = gate->v[g];
    for (std::size_t i = 0; i < x->size(); ++i) y->v[i] = w * x->v[i];
    x->ensure_grad();
    gate->ensure_grad();
    tape.record([x, gate, y, g, w]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < x->size(); ++i) {
            x->g[i] += w * y->g[i];
            acc += x->v[i] * y->g[i];
        }
        gate->g[g] += acc;
    });
    return y;
}

Var stack_rows(Tape& tape, const std::vector<Var>& rows) {
    require(!rows.empty(), "stack_rows: no inputs");
    const std::size_t c = rows.front()->size();
    for (const auto& r : rows) {
        require(r->rank() == 1 && r->size() == c, "stack_rows: row lengths disagree");
    }
    Var y = make_output({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i]->v.begin(), rows[i]->v.end(), y->v.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    for (const auto& r : rows) r->ensure_grad();
    tape.record([rows, y, c]() {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < c; ++j) rows[i]->g[j] += y->g[i * c + j];
        }
    });
    return y;
}

Var sum_all(Tape& tape, const Var& x) {
    Var y = make_output({1});
    double acc = 0.0;
    for (double v : x->v) acc += v;
    y->v[0] = acc;
    x->ensure_grad();
    tape.record([x, y]() {
        for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += y->g[0];
    });
    return y;
}

Var scale_const(Tape& tape, const Var& x, double factor) {
    Var y = make_output(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) y->v[i] = factor * x->v[i];
    x->ensure_grad();
    tape.record([x, y, factor]() {
        for (std::size_t i = 0; i < x->size(); ++i) x->g[i] += factor * y->g[i];
    });
    return y;
}

Var monotone_quantile_head(Tape& tape, const Var& raw) {
    require(raw->rank() == 1 && raw->dim(0) >= 1, "monotone head: rank-1 input expected");
    const std::size_t n = raw->dim(0);
    Var y = make_output({n});
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += softplus(raw->v[i]);
        y->v[i] = acc;
    }
    raw->ensure_grad();
    tape.record([raw, y, n]() {
        double suffix = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            suffix += y->g[i];
            raw->g[i] += softplus_grad(raw->v[i]) * suffix;
        }
    });
    return y;
}

Var pinball_loss_matrix(Tape& tape, const Var& preds, const std::vector<double>& actuals,
                        const std::vector<double>& spans, const std::vector<double>& quantiles,
                        double scale) {
    require(preds->rank() == 2, "pinball: preds must be rank-2 [H,Q]");
    const std::size_t H = preds->dim(0);
    const std::size_t Q = preds->dim(1);
    require(actuals.size() == H && spans.size() == H, "pinball: horizon arity mismatch");
    require(quantiles.size() == Q, "pinball: quantile arity mismatch");

    Var y = make_output({1});
    double total = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
        const double inv_span = 1.0 / spans[h];
        const double yv = actuals[h] * inv_span;
        for (std::size_t q = 0; q < Q; ++q) {
            const double fv = preds->v[h * Q + q] * inv_span;
            const double quant = quantiles[q];
            total += quant * std::max(yv - fv, 0.0) + (1.0 - quant) * std::max(fv - yv, 0.0);
        }
    }
    y->v[0] = scale * total;

    preds->ensure_grad();
    tape.record([preds, y, actuals, spans, quantiles, scale, H, Q]() {
        const double gy = y->g[0] * scale;
        for (std::size_t h = 0; h < H; ++h) {
            const double inv_span = 1.0 / spans[h];
            const double yv = actuals[h] * inv_span;
            for (std::size_t q = 0; q < Q; ++q) {
                const double fv = preds->v[h * Q + q] * inv_span;
                // Tie at fv == yv resolved on the "forecast >= actual" branch.
                const double d = (fv >= yv) ? (1.0 - quantiles[q]) : -quantiles[q];
                preds->g[h * Q + q] += gy * d * inv_span;
            }
        }
    });
    return y;
}

} // namespace spades
