#include "spades/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace spades {

std::vector<double> peak_filter(const std::vector<double>& series, const PeakFilterConfig& cfg) {
    if (cfg.identity) return series;
    if (cfg.cap_multiplier <= 0.0 || cfg.mean_window < 1) {
        throw std::invalid_argument("peak_filter: bad config");
    }
    std::vector<double> out = series;
    double window_sum = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t avail = std::min<std::size_t>(t, static_cast<std::size_t>(cfg.mean_window));
        if (avail > 0) {
            const double mean = window_sum / static_cast<double>(avail);
            if (mean > 0.0) out[t] = std::min(series[t], cfg.cap_multiplier * mean);
        }
        // Note: the cap uses raw (unfiltered) trailing values.
        window_sum += series[t];
        if (t + 1 > static_cast<std::size_t>(cfg.mean_window)) {
            window_sum -= series[t - static_cast<std::size_t>(cfg.mean_window)];
        }
    }
    return out;
}

int EncoderConfig::receptive_field() const {
    int field = 1;
    for (int d : dilations) field += (kernel_width - 1) * d;
    return field;
}

void EncoderConfig::validate() const {
    if (heads < 1) throw std::invalid_argument("encoder: heads must be >= 1");
    if (hidden_channels < 1) throw std::invalid_argument("encoder: hidden_channels must be >= 1");
    if (kernel_width < 1) throw std::invalid_argument("encoder: kernel_width must be >= 1");
    if (dilations.empty()) throw std::invalid_argument("encoder: dilation schedule empty");
    for (int d : dilations) {
        if (d < 1) throw std::invalid_argument("encoder: dilation must be >= 1");
    }
    if (combine_width < 1) throw std::invalid_argument("encoder: combine_width must be >= 1");
    if (gating == GatingMode::MomentGated && gate_hidden < 1) {
        throw std::invalid_argument("encoder: gate_hidden must be >= 1");
    }
}

MomentGate::MomentGate(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix,
                       ParamInit mode) {
    const auto hidden = static_cast<std::size_t>(cfg.gate_hidden);
    const auto heads = static_cast<std::size_t>(cfg.heads);
    w1_ = store.acquire(mode, prefix + ".w1", {2, hidden});
    b1_ = store.acquire(mode, prefix + ".b1", {hidden});
    // Zero-initialized final layer: the untrained gate is uniform 1/G.
    w2_ = store.acquire(mode, prefix + ".w2", {hidden, heads});
    b2_ = store.acquire(mode, prefix + ".b2", {heads});
}

Var MomentGate::forward(Tape& tape, const std::vector<double>& target_history) const {
    if (target_history.empty()) throw std::invalid_argument("moment_gate: empty history");
    double mean = 0.0;
    for (double v : target_history) mean += v;
    mean /= static_cast<double>(target_history.size());
    double var = 0.0;
    for (double v : target_history) var += (v - mean) * (v - mean);
    var /= static_cast<double>(target_history.size());

    Var moments = make_var(Tensor::from({2}, {mean, var}));
    Var h = tanh_op(tape, linear(tape, moments, w1_, b1_));
    return softmax_vec(tape, linear(tape, h, w2_, b2_));
}

MultiHeadEncoder::MultiHeadEncoder(const EncoderConfig& cfg, std::size_t in_channels,
                                   ParamStore& store, const std::string& prefix, ParamInit mode)
    : cfg_(cfg), in_channels_(in_channels) {
    cfg_.validate();
    const auto hidden = static_cast<std::size_t>(cfg_.hidden_channels);
    const auto width = static_cast<std::size_t>(cfg_.kernel_width);
    for (int g = 0; g < cfg_.heads; ++g) {
        Head head;
        std::size_t cin = in_channels_;
        for (std::size_t l = 0; l < cfg_.dilations.size(); ++l) {
            const std::string base =
                prefix + ".head" + std::to_string(g) + ".conv" + std::to_string(l);
            head.kernels.push_back(store.acquire(mode, base + ".kernel", {width, cin, hidden}));
            head.biases.push_back(store.acquire(mode, base + ".bias", {hidden}));
            cin = hidden;
        }
        heads_.push_back(std::move(head));
    }
    combine_w_ = store.acquire(mode, prefix + ".combine.w",
                              {static_cast<std::size_t>(cfg_.heads) * hidden,
                               static_cast<std::size_t>(cfg_.combine_width)});
    combine_b_ = store.acquire(mode, prefix + ".combine.b",
                              {static_cast<std::size_t>(cfg_.combine_width)});
}

Encoding MultiHeadEncoder::forward(Tape& tape, const Var& x, const Var* gate) const {
    if (x->rank() != 2 || x->dim(1) != in_channels_) {
        throw std::invalid_argument("encoder: input must be [T, in_channels]");
    }
    std::vector<Var> head_outputs;
    head_outputs.reserve(heads_.size());
    for (std::size_t g = 0; g < heads_.size(); ++g) {
        Var h = x;
        for (std::size_t l = 0; l < cfg_.dilations.size(); ++l) {
            h = dilated_causal_conv(tape, h, heads_[g].kernels[l], heads_[g].biases[l],
                                    static_cast<std::size_t>(cfg_.dilations[l]));
            h = tanh_op(tape, h);
        }
        if (gate) h = scale_by_gate(tape, h, *gate, g);
        head_outputs.push_back(h);
    }
    Var cat = head_outputs.size() == 1 ? head_outputs.front() : concat_cols(tape, head_outputs);
    Encoding enc;
    enc.values = linear(tape, cat, combine_w_, combine_b_);
    enc.pad_mask = left_pad_mask(x->dim(0), static_cast<std::size_t>(cfg_.receptive_field()));
    return enc;
}

} // namespace spades
