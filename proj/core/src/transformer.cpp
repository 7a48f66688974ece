#include "wavecast/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wavecast/errors.hpp"
#include "wavecast/series.hpp"

namespace wavecast::nn {

namespace {

using autograd::Shape;

Tensor uniform_tensor(Shape shape, double bound, Rng &rng) {
	std::vector<double> values(autograd::element_count(shape));
	for (auto &v : values) {
		v = rng.uniform(-bound, bound);
	}
	return Tensor(std::move(shape), std::move(values), true);
}

Linear make_linear(std::size_t in, std::size_t out, Rng &rng) {
	const double bound = 1.0 / std::sqrt(static_cast<double>(in));
	Linear layer;
	layer.weight = uniform_tensor({in, out}, bound, rng);
	layer.bias = uniform_tensor({out}, bound, rng);
	return layer;
}

MultiHeadAttention make_attention(std::size_t d_model, Rng &rng) {
	const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
	MultiHeadAttention mha;
	mha.query = uniform_tensor({d_model, d_model}, bound, rng);
	mha.key = uniform_tensor({d_model, d_model}, bound, rng);
	mha.value = uniform_tensor({d_model, d_model}, bound, rng);
	mha.output = uniform_tensor({d_model, d_model}, bound, rng);
	return mha;
}

LayerNorm make_norm(std::size_t d_model) {
	return {Tensor({d_model}, std::vector<double>(d_model, 1.0), true), Tensor::zeros({d_model}, true)};
}

FeedForward make_feed_forward(std::size_t d_model, std::size_t hidden, Rng &rng) {
	FeedForward ffn;
	ffn.hidden = make_linear(d_model, hidden, rng);
	ffn.output = make_linear(hidden, d_model, rng);
	return ffn;
}

Tensor apply_linear(Tape &tape, const Linear &layer, const Tensor &x) {
	return tape.add(tape.matmul(x, layer.weight), layer.bias);
}

Tensor apply_norm(Tape &tape, const LayerNorm &norm, const Tensor &x) {
	return tape.layer_norm(x, norm.gain, norm.bias, 1e-5);
}

Tensor maybe_dropout(Tape &tape, const Tensor &x, double p, Rng *rng) {
	return rng ? tape.dropout(x, p, *rng, true) : x;
}

Tensor apply_feed_forward(Tape &tape, const FeedForward &ffn, const Tensor &x) {
	return apply_linear(tape, ffn.output, tape.relu(apply_linear(tape, ffn.hidden, x)));
}

void add_linear(std::vector<std::pair<std::string, Tensor>> &out, const std::string &prefix, const Linear &l) {
	out.emplace_back(prefix + ".weight", l.weight);
	out.emplace_back(prefix + ".bias", l.bias);
}

void add_attention(std::vector<std::pair<std::string, Tensor>> &out, const std::string &prefix,
                   const MultiHeadAttention &a) {
	out.emplace_back(prefix + ".query", a.query);
	out.emplace_back(prefix + ".key", a.key);
	out.emplace_back(prefix + ".value", a.value);
	out.emplace_back(prefix + ".output", a.output);
}

void add_norm(std::vector<std::pair<std::string, Tensor>> &out, const std::string &prefix, const LayerNorm &n) {
	out.emplace_back(prefix + ".gain", n.gain);
	out.emplace_back(prefix + ".bias", n.bias);
}

std::size_t meta_size(const autograd::Checkpoint &c, const std::string &key) {
	std::size_t v = 0;
	std::istringstream in(c.get(key));
	if (!(in >> v)) {
		throw InputError("checkpoint meta '" + key + "' is not an integer");
	}
	return v;
}

double meta_double(const autograd::Checkpoint &c, const std::string &key) {
	double v = 0.0;
	if (!parse_double(c.get(key), v)) {
		throw InputError("checkpoint meta '" + key + "' is not a number");
	}
	return v;
}

} // namespace

void TransformerConfig::validate() const {
	if (input_len < 1) {
		throw InputError("input_len must be at least 1");
	}
	if (output_len != 1) {
		throw InputError("only one-step output heads are supported (output_len = 1)");
	}
	if (d_model == 0 || num_heads == 0 || d_model % num_heads != 0) {
		throw InputError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of num_heads (" +
		                 std::to_string(num_heads) + ")");
	}
	if (ffn_hidden == 0) {
		throw InputError("ffn_hidden must be positive");
	}
	if (!(dropout >= 0.0 && dropout < 1.0)) {
		throw InputError("dropout must lie in [0, 1)");
	}
	if (batch_size == 0) {
		throw InputError("batch_size must be positive");
	}
	if (!(optimizer.lr > 0.0)) {
		throw InputError("learning rate must be positive");
	}
}

AttentionMask AttentionMask::causal(std::size_t len) {
	AttentionMask mask{len, len, std::vector<bool>(len * len, false)};
	for (std::size_t i = 0; i < len; ++i) {
		for (std::size_t j = i + 1; j < len; ++j) {
			mask.masked[i * len + j] = true;
		}
	}
	return mask;
}

Tensor attention_weights(Tape &tape, const Tensor &query, const Tensor &key, const AttentionMask *mask) {
	if (query.rank() != key.rank() || query.rank() < 2 || query.dim(query.rank() - 1) != key.dim(key.rank() - 1)) {
		throw InputError("attention: query " + autograd::to_string(query.shape()) + " and key " +
		                 autograd::to_string(key.shape()) + " are incompatible");
	}
	const double d = static_cast<double>(query.dim(query.rank() - 1));
	Tensor scores = tape.scale(tape.matmul(query, tape.transpose(key)), 1.0 / std::sqrt(d));
	if (mask) {
		scores = tape.masked_fill(scores, mask->masked, mask->rows, mask->cols);
	}
	return tape.softmax(scores);
}

Tensor attention(Tape &tape, const Tensor &query, const Tensor &key, const Tensor &value, const AttentionMask *mask) {
	return tape.attention(query, key, value, 1, mask ? mask->masked : std::vector<bool>{});
}

Tensor multi_head(Tape &tape, const MultiHeadAttention &weights, std::size_t heads, const Tensor &query,
                  const Tensor &key_value, const AttentionMask *mask) {
	const std::size_t d_model = weights.query.dim(0);
	if (heads == 0 || d_model % heads != 0) {
		throw InputError("multi_head: d_model " + std::to_string(d_model) + " is not divisible by " +
		                 std::to_string(heads) + " heads");
	}
	// Head p reads column block p of each projection, so attending per column
	// group and writing the groups side by side is Concat(head_1..head_m).
	const Tensor q = tape.matmul(query, weights.query);
	const Tensor k = tape.matmul(key_value, weights.key);
	const Tensor v = tape.matmul(key_value, weights.value);
	const Tensor heads_out = tape.attention(q, k, v, heads, mask ? mask->masked : std::vector<bool>{});
	return tape.matmul(heads_out, weights.output);
}

Tensor positional_encoding(std::size_t len, std::size_t d_model) {
	std::vector<double> table(len * d_model);
	for (std::size_t pos = 0; pos < len; ++pos) {
		for (std::size_t i = 0; i < d_model; ++i) {
			const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
			const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
			table[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
		}
	}
	return Tensor({len, d_model}, std::move(table));
}

TransformerModel::TransformerModel(TransformerConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), rng_(seed) {
	config_.validate();
	initialize();
}

void TransformerModel::initialize() {
	const std::size_t d = config_.d_model;
	input_embedding_ = make_linear(1, d, rng_);
	output_embedding_ = make_linear(1, d, rng_);
	positions_ = positional_encoding(config_.input_len, d);
	encoder_.clear();
	for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
		EncoderLayer layer;
		layer.attention = make_attention(d, rng_);
		layer.attention_norm = make_norm(d);
		layer.feed_forward = make_feed_forward(d, config_.ffn_hidden, rng_);
		layer.feed_forward_norm = make_norm(d);
		encoder_.push_back(std::move(layer));
	}
	decoder_.clear();
	for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
		DecoderLayer layer;
		layer.self_attention = make_attention(d, rng_);
		layer.self_attention_norm = make_norm(d);
		layer.cross_attention = make_attention(d, rng_);
		layer.cross_attention_norm = make_norm(d);
		layer.feed_forward = make_feed_forward(d, config_.ffn_hidden, rng_);
		layer.feed_forward_norm = make_norm(d);
		decoder_.push_back(std::move(layer));
	}
	head_ = make_linear(d, 1, rng_);
	optimizer_state_ = autograd::AdamState::for_params(parameters());
	epochs_done_ = 0;
}

std::vector<std::pair<std::string, Tensor>> TransformerModel::named_parameters() const {
	std::vector<std::pair<std::string, Tensor>> out;
	add_linear(out, "input_embedding", input_embedding_);
	add_linear(out, "output_embedding", output_embedding_);
	for (std::size_t i = 0; i < encoder_.size(); ++i) {
		const auto p = "encoder." + std::to_string(i);
		add_attention(out, p + ".attention", encoder_[i].attention);
		add_norm(out, p + ".attention_norm", encoder_[i].attention_norm);
		add_linear(out, p + ".ffn.hidden", encoder_[i].feed_forward.hidden);
		add_linear(out, p + ".ffn.output", encoder_[i].feed_forward.output);
		add_norm(out, p + ".ffn_norm", encoder_[i].feed_forward_norm);
	}
	for (std::size_t i = 0; i < decoder_.size(); ++i) {
		const auto p = "decoder." + std::to_string(i);
		add_attention(out, p + ".self_attention", decoder_[i].self_attention);
		add_norm(out, p + ".self_attention_norm", decoder_[i].self_attention_norm);
		add_attention(out, p + ".cross_attention", decoder_[i].cross_attention);
		add_norm(out, p + ".cross_attention_norm", decoder_[i].cross_attention_norm);
		add_linear(out, p + ".ffn.hidden", decoder_[i].feed_forward.hidden);
		add_linear(out, p + ".ffn.output", decoder_[i].feed_forward.output);
		add_norm(out, p + ".ffn_norm", decoder_[i].feed_forward_norm);
	}
	add_linear(out, "head", head_);
	return out;
}

std::vector<Tensor> TransformerModel::parameters() const {
	std::vector<Tensor> out;
	for (auto &[name, t] : named_parameters()) {
		out.push_back(t);
	}
	return out;
}

std::size_t TransformerModel::parameter_count() const {
	std::size_t n = 0;
	for (const auto &t : parameters()) {
		n += t.size();
	}
	return n;
}

Tensor TransformerModel::forward(Tape &tape, std::span<const double> windows, std::size_t batch,
                                 Rng *dropout_rng) const {
	const std::size_t len = config_.input_len;
	const std::size_t d = config_.d_model;
	const std::size_t heads = config_.num_heads;
	if (batch == 0 || windows.size() != batch * len) {
		throw InputError("forward expects " + std::to_string(batch) + " windows of length " + std::to_string(len) +
		                 ", got " + std::to_string(windows.size()) + " values");
	}
	const double p = config_.dropout;

	const Tensor source({batch, len, 1}, std::vector<double>(windows.begin(), windows.end()));
	std::vector<double> last(batch);
	for (std::size_t b = 0; b < batch; ++b) {
		last[b] = windows[b * len + len - 1];
	}
	const Tensor target_seed({batch, 1, 1}, std::move(last));

	Tensor memory = tape.add(apply_linear(tape, input_embedding_, source), positions_);
	memory = maybe_dropout(tape, memory, p, dropout_rng);
	for (const auto &layer : encoder_) {
		Tensor attended = maybe_dropout(tape, multi_head(tape, layer.attention, heads, memory, memory), p, dropout_rng);
		memory = apply_norm(tape, layer.attention_norm, tape.add(memory, attended));
		Tensor ff = maybe_dropout(tape, apply_feed_forward(tape, layer.feed_forward, memory), p, dropout_rng);
		memory = apply_norm(tape, layer.feed_forward_norm, tape.add(memory, ff));
	}

	// Decoder sees a single token at position 0.
	const Tensor first_position({1, d}, std::vector<double>(positions_.data().begin(), positions_.data().begin() + d));
	const AttentionMask causal = AttentionMask::causal(1);
	Tensor x = tape.add(apply_linear(tape, output_embedding_, target_seed), first_position);
	x = maybe_dropout(tape, x, p, dropout_rng);
	for (const auto &layer : decoder_) {
		Tensor self = maybe_dropout(tape, multi_head(tape, layer.self_attention, heads, x, x, &causal), p, dropout_rng);
		x = apply_norm(tape, layer.self_attention_norm, tape.add(x, self));
		Tensor cross = maybe_dropout(tape, multi_head(tape, layer.cross_attention, heads, x, memory), p, dropout_rng);
		x = apply_norm(tape, layer.cross_attention_norm, tape.add(x, cross));
		Tensor ff = maybe_dropout(tape, apply_feed_forward(tape, layer.feed_forward, x), p, dropout_rng);
		x = apply_norm(tape, layer.feed_forward_norm, tape.add(x, ff));
	}
	return tape.reshape(apply_linear(tape, head_, x), {batch});
}

double TransformerModel::predict(std::span<const double> window) const {
	Tape tape(false);
	return forward(tape, window, 1).item();
}

std::vector<double> TransformerModel::predict_windows(std::span<const double> series) const {
	const std::size_t len = config_.input_len;
	if (series.size() <= len) {
		throw InputError("series of length " + std::to_string(series.size()) + " has no complete window of " +
		                 std::to_string(len) + " inputs plus a target");
	}
	const std::size_t count = series.size() - len;
	constexpr std::size_t chunk = 256;
	std::vector<double> out;
	out.reserve(count);
	std::vector<double> windows;
	for (std::size_t begin = 0; begin < count; begin += chunk) {
		const std::size_t batch = std::min(chunk, count - begin);
		windows.clear();
		for (std::size_t b = 0; b < batch; ++b) {
			const auto first = series.begin() + static_cast<std::ptrdiff_t>(begin + b);
			windows.insert(windows.end(), first, first + static_cast<std::ptrdiff_t>(len));
		}
		Tape tape(false);
		const Tensor pred = forward(tape, windows, batch);
		out.insert(out.end(), pred.data().begin(), pred.data().end());
	}
	return out;
}

TrainReport TransformerModel::train(std::span<const double> series) {
	const std::size_t len = config_.input_len;
	if (series.size() <= len) {
		throw InputError("training series of length " + std::to_string(series.size()) +
		                 " is too short for input length " + std::to_string(len) + " (need at least " +
		                 std::to_string(len + 1) + ")");
	}
	const std::size_t count = series.size() - len;
	std::vector<std::size_t> order(count);

	auto params = parameters();
	TrainReport report;
	report.epoch_loss.reserve(config_.epochs);
	std::vector<double> windows;
	std::vector<double> targets;

	for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
		// Each epoch shuffles from the identity so a resumed run sees the same batches.
		std::iota(order.begin(), order.end(), std::size_t{0});
		rng_.shuffle(std::span<std::size_t>(order));
		double total = 0.0;
		for (std::size_t begin = 0; begin < count; begin += config_.batch_size) {
			const std::size_t batch = std::min(config_.batch_size, count - begin);
			windows.clear();
			targets.clear();
			for (std::size_t b = 0; b < batch; ++b) {
				const std::size_t start = order[begin + b];
				windows.insert(windows.end(), series.begin() + static_cast<std::ptrdiff_t>(start),
				               series.begin() + static_cast<std::ptrdiff_t>(start + len));
				targets.push_back(series[start + len]);
			}
			try {
				Tape tape;
				const Tensor pred = forward(tape, windows, batch, &rng_);
				const Tensor loss = tape.mse_loss(pred, Tensor({batch}, targets));
				for (auto &p : params) {
					p.zero_grad();
				}
				tape.backward(loss);
				autograd::adam_step(params, optimizer_state_, config_.optimizer);
				total += loss.item() * static_cast<double>(batch);
			} catch (const NumericError &e) {
				throw NumericError("training diverged at epoch " + std::to_string(epochs_done_ + 1) + ", batch " +
				                   std::to_string(begin / config_.batch_size + 1) + ": " + e.what());
			}
		}
		report.epoch_loss.push_back(total / static_cast<double>(count));
		++epochs_done_;
	}
	for (auto &p : params) {
		p.zero_grad();
	}
	return report;
}

std::vector<double> TransformerModel::predict_recursive(std::span<const double> history, std::size_t horizon) const {
	const std::size_t len = config_.input_len;
	if (horizon < 1) {
		throw InputError("forecast horizon must be at least 1");
	}
	if (history.size() < len) {
		throw InputError("history of length " + std::to_string(history.size()) + " is shorter than the input window (" +
		                 std::to_string(len) + ")");
	}
	std::vector<double> window(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
	std::vector<double> out;
	out.reserve(horizon);
	for (std::size_t step = 0; step < horizon; ++step) {
		const double next = predict(window);
		out.push_back(next);
		window.erase(window.begin());
		window.push_back(next);
	}
	return out;
}

autograd::Checkpoint TransformerModel::to_checkpoint() const {
	autograd::Checkpoint c;
	c.set("kind", "transformer");
	c.set("seed", std::to_string(seed_));
	c.set("input_len", std::to_string(config_.input_len));
	c.set("output_len", std::to_string(config_.output_len));
	c.set("d_model", std::to_string(config_.d_model));
	c.set("num_heads", std::to_string(config_.num_heads));
	c.set("encoder_layers", std::to_string(config_.encoder_layers));
	c.set("decoder_layers", std::to_string(config_.decoder_layers));
	c.set("ffn_hidden", std::to_string(config_.ffn_hidden));
	c.set("dropout", format_double(config_.dropout));
	c.set("epochs", std::to_string(config_.epochs));
	c.set("batch_size", std::to_string(config_.batch_size));
	c.set("adam.lr", format_double(config_.optimizer.lr));
	c.set("adam.beta1", format_double(config_.optimizer.beta1));
	c.set("adam.beta2", format_double(config_.optimizer.beta2));
	c.set("adam.eps", format_double(config_.optimizer.eps));
	c.set("adam.step", std::to_string(optimizer_state_.step));
	c.set("epochs_done", std::to_string(epochs_done_));
	c.set("rng", rng_.state());
	const auto named = named_parameters();
	for (const auto &[name, t] : named) {
		c.tensors.emplace_back(name, t.clone());
	}
	for (std::size_t k = 0; k < named.size(); ++k) {
		const auto &shape = named[k].second.shape();
		c.tensors.emplace_back("adam.m." + named[k].first, Tensor(shape, optimizer_state_.m[k]));
		c.tensors.emplace_back("adam.v." + named[k].first, Tensor(shape, optimizer_state_.v[k]));
	}
	return c;
}

TransformerModel TransformerModel::from_checkpoint(const autograd::Checkpoint &c) {
	if (!c.has("kind") || c.get("kind") != "transformer") {
		throw InputError("checkpoint does not hold a transformer");
	}
	TransformerConfig config;
	config.input_len = meta_size(c, "input_len");
	config.output_len = meta_size(c, "output_len");
	config.d_model = meta_size(c, "d_model");
	config.num_heads = meta_size(c, "num_heads");
	config.encoder_layers = meta_size(c, "encoder_layers");
	config.decoder_layers = meta_size(c, "decoder_layers");
	config.ffn_hidden = meta_size(c, "ffn_hidden");
	config.dropout = meta_double(c, "dropout");
	config.epochs = meta_size(c, "epochs");
	config.batch_size = meta_size(c, "batch_size");
	config.optimizer.lr = meta_double(c, "adam.lr");
	config.optimizer.beta1 = meta_double(c, "adam.beta1");
	config.optimizer.beta2 = meta_double(c, "adam.beta2");
	config.optimizer.eps = meta_double(c, "adam.eps");
	std::uint64_t seed = 0;
	{
		std::istringstream in(c.get("seed"));
		in >> seed;
	}

	TransformerModel model(config, seed);
	auto named = model.named_parameters();
	for (std::size_t k = 0; k < named.size(); ++k) {
		auto &[name, param] = named[k];
		const Tensor &stored = c.tensor(name);
		if (stored.shape() != param.shape()) {
			throw InputError("checkpoint tensor '" + name + "' has shape " + autograd::to_string(stored.shape()) +
			                 ", model expects " + autograd::to_string(param.shape()));
		}
		std::copy(stored.data().begin(), stored.data().end(), param.data().begin());
		const auto m = c.tensor("adam.m." + name).data();
		const auto v = c.tensor("adam.v." + name).data();
		model.optimizer_state_.m[k].assign(m.begin(), m.end());
		model.optimizer_state_.v[k].assign(v.begin(), v.end());
	}
	model.optimizer_state_.step = static_cast<std::int64_t>(meta_size(c, "adam.step"));
	model.epochs_done_ = meta_size(c, "epochs_done");
	model.rng_.restore(c.get("rng"));
	return model;
}

void TransformerModel::save(const std::filesystem::path &path) const { autograd::save_checkpoint(path, to_checkpoint()); }

TransformerModel TransformerModel::load(const std::filesystem::path &path) {
	return from_checkpoint(autograd::load_checkpoint(path));
}

double one_step_mse(const TransformerModel &model, std::span<const double> series) {
	const auto pred = model.predict_windows(series);
	const std::size_t len = model.config().input_len;
	double total = 0.0;
	for (std::size_t i = 0; i < pred.size(); ++i) {
		const double e = pred[i] - series[i + len];
		total += e * e;
	}
	return total / static_cast<double>(pred.size());
}

} // namespace wavecast::nn
