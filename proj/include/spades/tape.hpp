#pragma once

#include "spades/series.hpp"
#include "spades/tensor.hpp"

#include <functional>
#include <vector>

namespace spades {

/// Reverse-mode autodiff over a recorded operation tape. Forward values
/// are computed eagerly; each op pushes a closure that scatters adjoints
/// back to its inputs. A tape is single-threaded for the duration of a
/// forward/backward pass.
class Tape {
public:
    void record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }

    /// Seeds d(output)=1 and runs the recorded closures in reverse.
    /// `output` must be a scalar (size-1) tensor.
    void backward(const Var& output);

    void clear() { ops_.clear(); }
    std::size_t size() const { return ops_.size(); }

private:
    std::vector<std::function<void()>> ops_;
};

// ---- ops ----------------------------------------------------------------
// Inputs may be rank-1 [in] or rank-2 [n,in] where noted. All ops check
// shapes and throw std::invalid_argument on mismatch.

/// y = x W + b with W [in,out], b [out]; x rank-1 or rank-2.
Var linear(Tape& tape, const Var& x, const Var& W, const Var& b);

/// Causal dilated 1-D convolution. x [T,Cin], kernel [width,Cin,Cout],
/// bias [Cout]; output [T,Cout] where position t sees inputs at
/// t, t-d, ..., t-(width-1)*d only; out-of-range taps are zero.
Var dilated_causal_conv(Tape& tape, const Var& x, const Var& kernel, const Var& bias,
                        std::size_t dilation);

/// Positions of [T] outputs that involve left zero-padding for a stack
/// with the given receptive field: t < receptive_field - 1.
std::vector<bool> left_pad_mask(std::size_t T, std::size_t receptive_field);

Var tanh_op(Tape& tape, const Var& x);
Var relu_op(Tape& tape, const Var& x);
Var softplus_op(Tape& tape, const Var& x);
Var square_op(Tape& tape, const Var& x);

/// Softmax over a rank-1 input.
Var softmax_vec(Tape& tape, const Var& x);

/// Column-wise concatenation of rank-2 tensors sharing the time axis.
Var concat_cols(Tape& tape, const std::vector<Var>& xs);

/// Concatenation of rank-1 tensors.
Var concat_vec(Tape& tape, const std::vector<Var>& xs);

/// Row i of a rank-2 tensor as a rank-1 tensor.
Var row_of(Tape& tape, const Var& x, std::size_t i);

/// Mean over the first axis of a rank-2 tensor.
Var mean_rows(Tape& tape, const Var& x);

/// x scaled by the g-th element of a rank-1 gate vector.
Var scale_by_gate(Tape& tape, const Var& x, const Var& gate, std::size_t g);

/// Stacks rank-1 tensors of equal length into a rank-2 tensor.
Var stack_rows(Tape& tape, const std::vector<Var>& rows);

/// Sum of all elements as a scalar.
Var sum_all(Tape& tape, const Var& x);

/// x scaled by a constant (gradient flows through x only).
Var scale_const(Tape& tape, const Var& x, double factor);

/// Monotone quantile head: y_j = sum_{k<=j} softplus(raw_k). Guarantees
/// positive, non-crossing outputs for a sorted quantile set.
Var monotone_quantile_head(Tape& tape, const Var& raw);

/// Multi-quantile pinball loss over a [H,Q] prediction matrix:
///   scale * sum_h sum_q QL(y_h / span_h, pred(h,q) / span_h; q).
/// Targets and forecasts are normalized by the horizon span inside the
/// loss only. The subgradient at y == yhat takes the "yhat >= y" branch.
Var pinball_loss_matrix(Tape& tape, const Var& preds, const std::vector<double>& actuals,
                        const std::vector<double>& spans, const std::vector<double>& quantiles,
                        double scale);

} // namespace spades
