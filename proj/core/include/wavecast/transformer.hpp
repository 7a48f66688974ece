#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavecast/adam.hpp"
#include "wavecast/checkpoint.hpp"
#include "wavecast/rng.hpp"
#include "wavecast/tensor.hpp"

namespace wavecast::nn {

using autograd::Tape;
using autograd::Tensor;

struct TransformerConfig {
	std::size_t input_len = 12;
	std::size_t output_len = 1;
	std::size_t d_model = 16;
	std::size_t num_heads = 8;
	std::size_t encoder_layers = 2;
	std::size_t decoder_layers = 2;
	std::size_t ffn_hidden = 64;
	double dropout = 0.1;
	std::size_t epochs = 200;
	std::size_t batch_size = 32;
	autograd::AdamOptions optimizer{};

	std::size_t head_dim() const { return d_model / num_heads; }

	/// Throws InputError on an unusable combination.
	void validate() const;

	friend bool operator==(const TransformerConfig &, const TransformerConfig &) = default;
};

/// Positions where attention is forbidden (true = masked), row-major [rows, cols].
struct AttentionMask {
	std::size_t rows = 0;
	std::size_t cols = 0;
	std::vector<bool> masked;

	/// Query i may only see keys 0..i.
	static AttentionMask causal(std::size_t len);
};

struct Linear {
	Tensor weight; // [in, out]
	Tensor bias;   // [out]
};

/// Per-head projections are stored side by side: columns [p*d, (p+1)*d) of
/// `query` hold the head-p query projection, likewise `key` and `value`.
/// `output` maps the concatenated heads back to d_model.
struct MultiHeadAttention {
	Tensor query;  // [d_model, d_model]
	Tensor key;    // [d_model, d_model]
	Tensor value;  // [d_model, d_model]
	Tensor output; // [d_model, d_model]
};

struct LayerNorm {
	Tensor gain;
	Tensor bias;
};

struct FeedForward {
	Linear hidden;
	Linear output;
};

struct EncoderLayer {
	MultiHeadAttention attention;
	LayerNorm attention_norm;
	FeedForward feed_forward;
	LayerNorm feed_forward_norm;
};

/// Masked self-attention stage followed by a stage shaped like an encoder
/// layer whose attention reads the encoder output.
struct DecoderLayer {
	MultiHeadAttention self_attention;
	LayerNorm self_attention_norm;
	MultiHeadAttention cross_attention;
	LayerNorm cross_attention_norm;
	FeedForward feed_forward;
	LayerNorm feed_forward_norm;
};

/// softmax(Q K^T / sqrt(d)) for Q [.., q, d] and K [.., k, d].
Tensor attention_weights(Tape &tape, const Tensor &query, const Tensor &key, const AttentionMask *mask = nullptr);

/// attention_weights(Q, K) V.
Tensor attention(Tape &tape, const Tensor &query, const Tensor &key, const Tensor &value,
                 const AttentionMask *mask = nullptr);

/// Concat(head_1..head_m) W^O with head_p = attention(Q W^Q_p, K W^K_p, V W^V_p).
/// Inputs are [batch, len, d_model].
Tensor multi_head(Tape &tape, const MultiHeadAttention &weights, std::size_t heads, const Tensor &query,
                  const Tensor &key_value, const AttentionMask *mask = nullptr);

/// Sinusoidal table [len, d_model].
Tensor positional_encoding(std::size_t len, std::size_t d_model);

struct TrainReport {
	std::vector<double> epoch_loss;
};

/// One-step forecaster: encoder over the input window, decoder seeded with the
/// window's last value, linear head producing the next value.
class TransformerModel {
public:
	TransformerModel(TransformerConfig config, std::uint64_t seed);

	// Parameters are shared-storage tensors, so a copy would alias the original.
	TransformerModel(const TransformerModel &) = delete;
	TransformerModel &operator=(const TransformerModel &) = delete;
	TransformerModel(TransformerModel &&) = default;
	TransformerModel &operator=(TransformerModel &&) = default;

	const TransformerConfig &config() const { return config_; }
	std::uint64_t seed() const { return seed_; }

	std::vector<std::pair<std::string, Tensor>> named_parameters() const;
	std::vector<Tensor> parameters() const;
	std::size_t parameter_count() const;

	/// Batched forward. `windows` holds `batch` rows of input_len values; the
	/// result has shape [batch]. Dropout is active iff `dropout_rng` is given.
	Tensor forward(Tape &tape, std::span<const double> windows, std::size_t batch, Rng *dropout_rng = nullptr) const;

	/// Eval-mode prediction for one window.
	double predict(std::span<const double> window) const;

	/// Eval-mode predictions for every full window of `series`: element i
	/// forecasts series[i + input_len].
	std::vector<double> predict_windows(std::span<const double> series) const;

	/// Runs config().epochs epochs of shuffled mini-batch Adam on MSE over all
	/// sliding windows of `series`. Continues from the current optimizer state.
	TrainReport train(std::span<const double> series);

	/// Feeds each prediction back as input, h times.
	std::vector<double> predict_recursive(std::span<const double> history, std::size_t horizon) const;

	autograd::Checkpoint to_checkpoint() const;
	static TransformerModel from_checkpoint(const autograd::Checkpoint &checkpoint);
	void save(const std::filesystem::path &path) const;
	static TransformerModel load(const std::filesystem::path &path);

	/// Exposed for tests and tools; layers are fixed once constructed.
	const std::vector<EncoderLayer> &encoder() const { return encoder_; }
	const std::vector<DecoderLayer> &decoder() const { return decoder_; }
	const Linear &head() const { return head_; }

private:
	void initialize();

	TransformerConfig config_;
	std::uint64_t seed_;
	Rng rng_;

	Linear input_embedding_;
	Linear output_embedding_;
	Tensor positions_;
	std::vector<EncoderLayer> encoder_;
	std::vector<DecoderLayer> decoder_;
	Linear head_;

	autograd::AdamState optimizer_state_;
	std::size_t epochs_done_ = 0;
};

/// Mean squared one-step error of eval-mode predictions over all windows.
double one_step_mse(const TransformerModel &model, std::span<const double> series);

} // namespace wavecast::nn
