#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavecast/rng.hpp"

namespace wavecast::autograd {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape &shape);
std::string to_string(const Shape &shape);

/// Dense row-major float64 array. Copies share storage (handle semantics), so a
/// parameter held by a model and by the tape that used it is the same object.
class Tensor {
public:
	Tensor();
	Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

	static Tensor zeros(Shape shape, bool requires_grad = false);
	static Tensor scalar(double value, bool requires_grad = false);

	const Shape &shape() const { return node_->shape; }
	std::size_t rank() const { return shape().size(); }
	std::size_t dim(std::size_t axis) const { return shape().at(axis); }
	std::size_t size() const { return node_->data.size(); }

	std::span<const double> data() const { return node_->data; }
	std::span<double> data() { return node_->data; }
	double item() const;

	bool requires_grad() const { return node_->requires_grad; }
	void set_requires_grad(bool on) { node_->requires_grad = on; }

	/// Empty until the tensor takes part in a backward pass.
	std::span<const double> grad() const { return node_->grad; }
	// Const because the gradient lives in shared storage, not in the handle.
	std::span<double> grad_buffer() const; // allocates zeros on first use
	bool has_grad() const { return !node_->grad.empty(); }
	void zero_grad();

	bool same_storage(const Tensor &other) const { return node_ == other.node_; }

	/// Deep copy with fresh storage and no grad.
	Tensor clone() const;

private:
	struct Node {
		Shape shape;
		std::vector<double> data;
		std::vector<double> grad;
		bool requires_grad = false;
	};
	std::shared_ptr<Node> node_;
};

/// Records differentiable operations in execution order and replays their
/// adjoints in reverse on backward(). A non-recording tape evaluates ops
/// without keeping anything, for inference.
///
/// All reductions and normalizations act on the last axis. Every op checks its
/// output for NaN/inf and throws NumericError.
class Tape {
public:
	explicit Tape(bool recording = true) : recording_(recording) {}

	Tape(const Tape &) = delete;
	Tape &operator=(const Tape &) = delete;

	bool recording() const { return recording_; }
	std::size_t size() const { return records_.size(); }

	/// [m,k]x[k,n], [b,m,k]x[k,n] (shared right operand) or [b,m,k]x[b,k,n].
	Tensor matmul(const Tensor &a, const Tensor &b);
	/// Same shapes, or `b`'s shape equal to a trailing suffix of `a`'s (broadcast
	/// over the leading axes; covers bias rows and positional tables).
	Tensor add(const Tensor &a, const Tensor &b);
	Tensor mul(const Tensor &a, const Tensor &b); // same shapes
	Tensor scale(const Tensor &a, double factor);
	Tensor relu(const Tensor &a);
	/// Softmax over `axis`, which must be the last axis. Entries equal to -inf
	/// get probability exactly 0.
	Tensor softmax(const Tensor &a, int axis = -1);
	/// Sets entries where mask[i,j] is true to -inf. `a` is [..., q, k] and the
	/// mask [q, k] row-major.
	Tensor masked_fill(const Tensor &a, const std::vector<bool> &mask, std::size_t rows, std::size_t cols);
	/// (x - mean) / sqrt(var + eps) * gain + bias over `axis` (last only).
	Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps = 1e-5, int axis = -1);
	/// Inverted dropout; identity when !training or p == 0.
	Tensor dropout(const Tensor &a, double p, Rng &rng, bool training);
	Tensor concat(const std::vector<Tensor> &parts, int axis);
	/// Swaps the last two axes.
	Tensor transpose(const Tensor &a);
	Tensor reshape(const Tensor &a, Shape shape);
	/// [b, l, heads*d] -> [b*heads, l, d]
	Tensor split_heads(const Tensor &a, std::size_t heads);
	/// [b*heads, l, d] -> [b, l, heads*d]
	Tensor merge_heads(const Tensor &a, std::size_t heads);
	/// Fused scaled dot-product attention over `heads` column groups:
	/// q and k [b, lq|lk, heads*d], v [b, lk, heads*dv] -> [b, lq, heads*dv],
	/// where column group p of the output is softmax(q_p k_p^T / sqrt(d)) v_p.
	/// Rank-2 inputs are treated as a batch of one. `mask` is [lq, lk] or empty.
	Tensor attention(const Tensor &q, const Tensor &k, const Tensor &v, std::size_t heads,
	                 const std::vector<bool> &mask = {});
	Tensor sum(const Tensor &a);
	/// mean((pred - target)^2) over all elements; target is a constant.
	Tensor mse_loss(const Tensor &pred, const Tensor &target);

	/// Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint in reverse.
	/// Gradients accumulate into each requires_grad tensor.
	void backward(const Tensor &loss);

	/// Drops all records so the tape can be reused.
	void reset();

private:
	Tensor make_output(Shape shape, std::vector<double> data, std::initializer_list<const Tensor *> inputs,
	                   const char *op);
	void record(std::function<void()> adjoint);

	std::vector<std::function<void()>> records_;
	bool recording_ = true;
	bool consumed_ = false;
};

} // namespace wavecast::autograd
