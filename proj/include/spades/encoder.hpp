#pragma once

#include "spades/params.hpp"
#include "spades/tape.hpp"

#include <string>
#include <vector>

namespace spades {

/// Spike attenuation applied to demand history before encoding. Values
/// above cap_multiplier times the strictly-trailing mean (over up to
/// mean_window previous periods) are clipped to that cap; periods whose
/// trailing mean is zero pass through, as does everything in identity
/// mode.
struct PeakFilterConfig {
    bool identity = false;
    double cap_multiplier = 4.0;
    int mean_window = 13;
};

std::vector<double> peak_filter(const std::vector<double>& series, const PeakFilterConfig& cfg);

enum class GatingMode { UniformConcatLinear, MomentGated };

struct EncoderConfig {
    int heads = 6;                  // G
    int hidden_channels = 8;
    int kernel_width = 2;
    std::vector<int> dilations = {1, 2, 4, 8, 16, 32};
    int combine_width = 16;
    GatingMode gating = GatingMode::UniformConcatLinear;
    int gate_hidden = 8;

    int receptive_field() const;
    void validate() const;
};

/// Encoder output: per-time representation plus the left-padding mask
/// (true where the receptive field ran past the series start).
struct Encoding {
    Var values; // [T, combine_width]
    std::vector<bool> pad_mask;
};

/// Small MLP mapping (mean, variance) of the target history to a softmax
/// mixture over the G heads.
class MomentGate {
public:
    MomentGate(const EncoderConfig& cfg, ParamStore& store, const std::string& prefix,
               ParamInit mode = ParamInit::Create);

    Var forward(Tape& tape, const std::vector<double>& target_history) const;

private:
    Var w1_, b1_, w2_, b2_;
};

/// G structurally identical dilated causal convolution stacks applied in
/// parallel to the same input, concatenated and combined with a
/// per-time-step linear map. Heads are independently initialized.
class MultiHeadEncoder {
public:
    MultiHeadEncoder(const EncoderConfig& cfg, std::size_t in_channels, ParamStore& store,
                     const std::string& prefix, ParamInit mode = ParamInit::Create);

    /// x is a [T, in_channels] leaf. `gate` (from MomentGate) weights the
    /// head outputs before the combine; pass nullptr for plain
    /// concat-linear.
    Encoding forward(Tape& tape, const Var& x, const Var* gate = nullptr) const;

    const EncoderConfig& config() const { return cfg_; }

private:
    struct Head {
        std::vector<Var> kernels;
        std::vector<Var> biases;
    };
    EncoderConfig cfg_;
    std::size_t in_channels_;
    std::vector<Head> heads_;
    Var combine_w_, combine_b_;
};

} // namespace spades
