#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "wavecast/errors.hpp"
#include "wavecast/tensor.hpp"

namespace wavecast::autograd {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double *a, const double *b, double *c, std::size_t m, std::size_t k, std::size_t n) {
	const auto rows = static_cast<Eigen::Index>(m), inner = static_cast<Eigen::Index>(k),
	           cols = static_cast<Eigen::Index>(n);
	Map(c, rows, cols).noalias() += ConstMap(a, rows, inner) * ConstMap(b, inner, cols);
}

// C[m,k] += A[m,n] * B[k,n]^T
void gemm_nt(const double *a, const double *b, double *c, std::size_t m, std::size_t n, std::size_t k) {
	const auto rows = static_cast<Eigen::Index>(m), inner = static_cast<Eigen::Index>(n),
	           cols = static_cast<Eigen::Index>(k);
	Map(c, rows, cols).noalias() += ConstMap(a, rows, inner) * ConstMap(b, cols, inner).transpose();
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(const double *a, const double *b, double *c, std::size_t m, std::size_t k, std::size_t n) {
	const auto rows = static_cast<Eigen::Index>(k), inner = static_cast<Eigen::Index>(m),
	           cols = static_cast<Eigen::Index>(n);
	Map(c, rows, cols).noalias() += ConstMap(a, inner, rows).transpose() * ConstMap(b, inner, cols);
}

std::size_t last_axis(const Tensor &a, int axis, const char *op) {
	const auto rank = static_cast<int>(a.rank());
	if (!(rank >= 1)) {
		throw InputError(std::string(op) + ": scalar input");
	}
	const int resolved = axis < 0 ? rank + axis : axis;
	if (!(resolved == rank - 1)) {
		throw InputError(std::string(op) + ": only the last axis is supported");
	}
	return a.dim(a.rank() - 1);
}

bool is_suffix(const Shape &full, const Shape &tail) {
	if (tail.size() > full.size()) {
		return false;
	}
	return std::equal(tail.rbegin(), tail.rend(), full.rbegin());
}

} // namespace

Tensor Tape::make_output(Shape shape, std::vector<double> data, std::initializer_list<const Tensor *> inputs,
                         const char *op) {
	for (double v : data) {
		if (!std::isfinite(v)) {
			throw NumericError(std::string(op) + " produced a non-finite value");
		}
	}
	bool needs_grad = false;
	if (recording_) {
		for (const auto *t : inputs) {
			needs_grad = needs_grad || t->requires_grad();
		}
	}
	return Tensor(std::move(shape), std::move(data), needs_grad);
}

void Tape::record(std::function<void()> adjoint) { records_.push_back(std::move(adjoint)); }

Tensor Tape::matmul(const Tensor &a, const Tensor &b) {
	std::size_t batch = 1, m = 0, k = 0, n = 0;
	bool shared_rhs = true;
	Shape out_shape;
	if (a.rank() == 2 && b.rank() == 2) {
		m = a.dim(0);
		k = a.dim(1);
		n = b.dim(1);
		if (!(b.dim(0) == k)) {
			throw InputError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
		}
		out_shape = {m, n};
	} else if (a.rank() == 3 && b.rank() == 2) {
		// Shared weight matrix: fold the batch into rows.
		m = a.dim(0) * a.dim(1);
		k = a.dim(2);
		n = b.dim(1);
		if (!(b.dim(0) == k)) {
			throw InputError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
		}
		out_shape = {a.dim(0), a.dim(1), n};
	} else if (a.rank() == 3 && b.rank() == 3) {
		batch = a.dim(0);
		m = a.dim(1);
		k = a.dim(2);
		n = b.dim(2);
		if (!(b.dim(0) == batch && b.dim(1) == k)) {
			throw InputError("matmul: incompatible batched shapes " + to_string(a.shape()) + " x " + to_string(b.shape()));
		}
		shared_rhs = false;
		out_shape = {batch, m, n};
	} else {
		throw InputError("matmul: unsupported ranks " + to_string(a.shape()) + " x " + to_string(b.shape()));
	}

	std::vector<double> out(batch * m * n, 0.0);
	for (std::size_t s = 0; s < batch; ++s) {
		gemm_nn(a.data().data() + s * m * k, b.data().data() + (shared_rhs ? 0 : s * k * n), out.data() + s * m * n, m,
		        k, n);
	}
	Tensor y = make_output(std::move(out_shape), std::move(out), {&a, &b}, "matmul");
	if (y.requires_grad()) {
		record([a, b, y, batch, m, k, n, shared_rhs]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const double *dy = y.grad().data();
			for (std::size_t s = 0; s < batch; ++s) {
				const std::size_t b_off = shared_rhs ? 0 : s * k * n;
				if (a.requires_grad()) {
					gemm_nt(dy + s * m * n, b.data().data() + b_off, a.grad_buffer().data() + s * m * k, m, n, k);
				}
				if (b.requires_grad()) {
					gemm_tn(a.data().data() + s * m * k, dy + s * m * n, b.grad_buffer().data() + b_off, m, k, n);
				}
			}
		});
	}
	return y;
}

Tensor Tape::add(const Tensor &a, const Tensor &b) {
	if (!(is_suffix(a.shape(), b.shape()))) {
		throw InputError("add: shape " + to_string(b.shape()) + " does not broadcast onto " + to_string(a.shape()));
	}
	const std::size_t inner = b.size();
	const std::size_t outer = a.size() / inner;
	std::vector<double> out(a.data().begin(), a.data().end());
	for (std::size_t o = 0; o < outer; ++o) {
		for (std::size_t i = 0; i < inner; ++i) {
			out[o * inner + i] += b.data()[i];
		}
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a, &b}, "add");
	if (y.requires_grad()) {
		record([a, b, y, outer, inner]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			if (a.requires_grad()) {
				auto da = a.grad_buffer();
				for (std::size_t i = 0; i < dy.size(); ++i) {
					da[i] += dy[i];
				}
			}
			if (b.requires_grad()) {
				auto db = b.grad_buffer();
				for (std::size_t o = 0; o < outer; ++o) {
					for (std::size_t i = 0; i < inner; ++i) {
						db[i] += dy[o * inner + i];
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::mul(const Tensor &a, const Tensor &b) {
	if (!(a.shape() == b.shape())) {
		throw InputError("mul: shapes differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
	}
	std::vector<double> out(a.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		out[i] = a.data()[i] * b.data()[i];
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a, &b}, "mul");
	if (y.requires_grad()) {
		record([a, b, y]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			if (a.requires_grad()) {
				auto da = a.grad_buffer();
				for (std::size_t i = 0; i < dy.size(); ++i) {
					da[i] += dy[i] * b.data()[i];
				}
			}
			if (b.requires_grad()) {
				auto db = b.grad_buffer();
				for (std::size_t i = 0; i < dy.size(); ++i) {
					db[i] += dy[i] * a.data()[i];
				}
			}
		});
	}
	return y;
}

Tensor Tape::scale(const Tensor &a, double factor) {
	std::vector<double> out(a.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		out[i] = a.data()[i] * factor;
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a}, "scale");
	if (y.requires_grad()) {
		record([a, y, factor]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t i = 0; i < dy.size(); ++i) {
				da[i] += dy[i] * factor;
			}
		});
	}
	return y;
}

Tensor Tape::relu(const Tensor &a) {
	std::vector<double> out(a.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a}, "relu");
	if (y.requires_grad()) {
		record([a, y]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t i = 0; i < dy.size(); ++i) {
				if (a.data()[i] > 0.0) {
					da[i] += dy[i];
				}
			}
		});
	}
	return y;
}

Tensor Tape::softmax(const Tensor &a, int axis) {
	const std::size_t width = last_axis(a, axis, "softmax");
	const std::size_t rows = a.size() / width;
	std::vector<double> out(a.size());
	for (std::size_t r = 0; r < rows; ++r) {
		const double *x = a.data().data() + r * width;
		double *p = out.data() + r * width;
		const double peak = *std::max_element(x, x + width);
		double total = 0.0;
		for (std::size_t i = 0; i < width; ++i) {
			p[i] = std::exp(x[i] - peak);
			total += p[i];
		}
		for (std::size_t i = 0; i < width; ++i) {
			p[i] /= total;
		}
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a}, "softmax");
	if (y.requires_grad()) {
		record([a, y, rows, width]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			const auto p = y.data();
			auto da = a.grad_buffer();
			for (std::size_t r = 0; r < rows; ++r) {
				const std::size_t off = r * width;
				double dot = 0.0;
				for (std::size_t i = 0; i < width; ++i) {
					dot += dy[off + i] * p[off + i];
				}
				for (std::size_t i = 0; i < width; ++i) {
					da[off + i] += p[off + i] * (dy[off + i] - dot);
				}
			}
		});
	}
	return y;
}

Tensor Tape::masked_fill(const Tensor &a, const std::vector<bool> &mask, std::size_t rows, std::size_t cols) {
	if (!(a.rank() >= 2 && a.dim(a.rank() - 2) == rows && a.dim(a.rank() - 1) == cols && mask.size() == rows * cols)) {
		throw InputError("masked_fill: mask [" + std::to_string(rows) + "," + std::to_string(cols) + "] does not fit " + to_string(a.shape()));
	}
	const std::size_t block = rows * cols;
	std::vector<double> out(a.data().begin(), a.data().end());
	for (std::size_t i = 0; i < out.size(); ++i) {
		if (mask[i % block]) {
			out[i] = -std::numeric_limits<double>::infinity();
		} else if (!std::isfinite(out[i])) {
			throw NumericError("masked_fill produced a non-finite value");
		}
	}
	const bool needs_grad = recording_ && a.requires_grad();
	Tensor y(a.shape(), std::move(out), needs_grad);
	if (needs_grad) {
		record([a, y, mask, block]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t i = 0; i < dy.size(); ++i) {
				if (!mask[i % block]) {
					da[i] += dy[i];
				}
			}
		});
	}
	return y;
}

Tensor Tape::layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps, int axis) {
	const std::size_t width = last_axis(x, axis, "layer_norm");
	if (!(gain.size() == width && bias.size() == width)) {
		throw InputError("layer_norm: gain/bias width differs from input");
	}
	const std::size_t rows = x.size() / width;
	std::vector<double> out(x.size());
	std::vector<double> normalized(x.size());
	std::vector<double> inv_std(rows);
	for (std::size_t r = 0; r < rows; ++r) {
		const double *in = x.data().data() + r * width;
		double mean = 0.0;
		for (std::size_t i = 0; i < width; ++i) {
			mean += in[i];
		}
		mean /= static_cast<double>(width);
		double var = 0.0;
		for (std::size_t i = 0; i < width; ++i) {
			var += (in[i] - mean) * (in[i] - mean);
		}
		var /= static_cast<double>(width);
		inv_std[r] = 1.0 / std::sqrt(var + eps);
		for (std::size_t i = 0; i < width; ++i) {
			const double n = (in[i] - mean) * inv_std[r];
			normalized[r * width + i] = n;
			out[r * width + i] = n * gain.data()[i] + bias.data()[i];
		}
	}
	Tensor y = make_output(x.shape(), std::move(out), {&x, &gain, &bias}, "layer_norm");
	if (y.requires_grad()) {
		record([x, gain, bias, y, normalized = std::move(normalized), inv_std = std::move(inv_std), rows,
		        width]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			if (gain.requires_grad() || bias.requires_grad()) {
				for (std::size_t r = 0; r < rows; ++r) {
					for (std::size_t i = 0; i < width; ++i) {
						const std::size_t at = r * width + i;
						if (gain.requires_grad()) {
							gain.grad_buffer()[i] += dy[at] * normalized[at];
						}
						if (bias.requires_grad()) {
							bias.grad_buffer()[i] += dy[at];
						}
					}
				}
			}
			if (!x.requires_grad()) {
				return;
			}
			auto dx = x.grad_buffer();
			const double inv_width = 1.0 / static_cast<double>(width);
			for (std::size_t r = 0; r < rows; ++r) {
				double mean_d = 0.0;
				double mean_dn = 0.0;
				for (std::size_t i = 0; i < width; ++i) {
					const std::size_t at = r * width + i;
					const double d = dy[at] * gain.data()[i];
					mean_d += d;
					mean_dn += d * normalized[at];
				}
				mean_d *= inv_width;
				mean_dn *= inv_width;
				for (std::size_t i = 0; i < width; ++i) {
					const std::size_t at = r * width + i;
					const double d = dy[at] * gain.data()[i];
					dx[at] += inv_std[r] * (d - mean_d - normalized[at] * mean_dn);
				}
			}
		});
	}
	return y;
}

Tensor Tape::dropout(const Tensor &a, double p, Rng &rng, bool training) {
	if (!(p >= 0.0 && p < 1.0)) {
		throw InputError("dropout: probability must lie in [0, 1)");
	}
	if (!training || p == 0.0) {
		return a;
	}
	const double keep_scale = 1.0 / (1.0 - p);
	std::vector<double> factors(a.size());
	std::vector<double> out(a.size());
	for (std::size_t i = 0; i < out.size(); ++i) {
		factors[i] = rng.uniform() < p ? 0.0 : keep_scale;
		out[i] = a.data()[i] * factors[i];
	}
	Tensor y = make_output(a.shape(), std::move(out), {&a}, "dropout");
	if (y.requires_grad()) {
		record([a, y, factors = std::move(factors)]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t i = 0; i < dy.size(); ++i) {
				da[i] += dy[i] * factors[i];
			}
		});
	}
	return y;
}

Tensor Tape::concat(const std::vector<Tensor> &parts, int axis) {
	if (!(!parts.empty())) {
		throw InputError("concat: no inputs");
	}
	const auto rank = static_cast<int>(parts.front().rank());
	const int resolved = axis < 0 ? rank + axis : axis;
	if (!(resolved >= 0 && resolved < rank)) {
		throw InputError("concat: axis out of range");
	}
	const auto ax = static_cast<std::size_t>(resolved);

	Shape out_shape = parts.front().shape();
	out_shape[ax] = 0;
	for (const auto &p : parts) {
		if (!(static_cast<int>(p.rank()) == rank)) {
			throw InputError("concat: rank mismatch");
		}
		for (std::size_t d = 0; d < p.rank(); ++d) {
			if (!(d == ax || p.dim(d) == out_shape[d])) {
				throw InputError("concat: non-axis dimensions differ");
			}
		}
		out_shape[ax] += p.dim(ax);
	}
	std::size_t outer = 1;
	for (std::size_t d = 0; d < ax; ++d) {
		outer *= out_shape[d];
	}
	std::size_t inner = 1;
	for (std::size_t d = ax + 1; d < out_shape.size(); ++d) {
		inner *= out_shape[d];
	}
	const std::size_t out_stride = out_shape[ax] * inner;

	std::vector<double> out(element_count(out_shape));
	std::vector<std::size_t> offsets;
	std::size_t offset = 0;
	for (const auto &p : parts) {
		offsets.push_back(offset);
		const std::size_t block = p.dim(ax) * inner;
		for (std::size_t o = 0; o < outer; ++o) {
			std::copy_n(p.data().data() + o * block, block, out.data() + o * out_stride + offset);
		}
		offset += block;
	}

	bool needs_grad = false;
	for (const auto &p : parts) {
		needs_grad = needs_grad || p.requires_grad();
	}
	for (double v : out) {
		if (!std::isfinite(v)) {
			throw NumericError("concat produced a non-finite value");
		}
	}
	needs_grad = needs_grad && recording_;
	Tensor y(std::move(out_shape), std::move(out), needs_grad);
	if (needs_grad) {
		record([parts, y, offsets, outer, inner, out_stride, ax]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			for (std::size_t k = 0; k < parts.size(); ++k) {
				if (!parts[k].requires_grad()) {
					continue;
				}
				auto dp = parts[k].grad_buffer();
				const std::size_t block = parts[k].dim(ax) * inner;
				for (std::size_t o = 0; o < outer; ++o) {
					for (std::size_t i = 0; i < block; ++i) {
						dp[o * block + i] += dy[o * out_stride + offsets[k] + i];
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::transpose(const Tensor &a) {
	if (!(a.rank() >= 2)) {
		throw InputError("transpose: rank must be at least 2");
	}
	const std::size_t rows = a.dim(a.rank() - 2);
	const std::size_t cols = a.dim(a.rank() - 1);
	const std::size_t block = rows * cols;
	const std::size_t batch = a.size() / block;
	Shape out_shape = a.shape();
	std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
	std::vector<double> out(a.size());
	for (std::size_t s = 0; s < batch; ++s) {
		for (std::size_t i = 0; i < rows; ++i) {
			for (std::size_t j = 0; j < cols; ++j) {
				out[s * block + j * rows + i] = a.data()[s * block + i * cols + j];
			}
		}
	}
	Tensor y = make_output(std::move(out_shape), std::move(out), {&a}, "transpose");
	if (y.requires_grad()) {
		record([a, y, batch, rows, cols, block]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t s = 0; s < batch; ++s) {
				for (std::size_t i = 0; i < rows; ++i) {
					for (std::size_t j = 0; j < cols; ++j) {
						da[s * block + i * cols + j] += dy[s * block + j * rows + i];
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::reshape(const Tensor &a, Shape shape) {
	if (!(element_count(shape) == a.size())) {
		throw InputError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
	}
	Tensor y = make_output(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), {&a}, "reshape");
	if (y.requires_grad()) {
		record([a, y]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t i = 0; i < dy.size(); ++i) {
				da[i] += dy[i];
			}
		});
	}
	return y;
}

Tensor Tape::split_heads(const Tensor &a, std::size_t heads) {
	if (!(a.rank() == 3 && heads > 0 && a.dim(2) % heads == 0)) {
		throw InputError("split_heads: cannot split " + to_string(a.shape()) + " into " + std::to_string(heads) + " heads");
	}
	const std::size_t batch = a.dim(0), len = a.dim(1), width = a.dim(2), d = width / heads;
	std::vector<double> out(a.size());
	// out[(b*H + h), l, e] = a[b, l, h*d + e]
	for (std::size_t b = 0; b < batch; ++b) {
		for (std::size_t l = 0; l < len; ++l) {
			for (std::size_t h = 0; h < heads; ++h) {
				std::copy_n(a.data().data() + (b * len + l) * width + h * d, d,
				            out.data() + ((b * heads + h) * len + l) * d);
			}
		}
	}
	Tensor y = make_output({batch * heads, len, d}, std::move(out), {&a}, "split_heads");
	if (y.requires_grad()) {
		record([a, y, batch, len, width, heads, d]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t b = 0; b < batch; ++b) {
				for (std::size_t l = 0; l < len; ++l) {
					for (std::size_t h = 0; h < heads; ++h) {
						for (std::size_t e = 0; e < d; ++e) {
							da[(b * len + l) * width + h * d + e] += dy[((b * heads + h) * len + l) * d + e];
						}
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::merge_heads(const Tensor &a, std::size_t heads) {
	if (!(a.rank() == 3 && heads > 0 && a.dim(0) % heads == 0)) {
		throw InputError("merge_heads: cannot merge " + to_string(a.shape()) + " over " + std::to_string(heads) + " heads");
	}
	const std::size_t batch = a.dim(0) / heads, len = a.dim(1), d = a.dim(2), width = heads * d;
	std::vector<double> out(a.size());
	for (std::size_t b = 0; b < batch; ++b) {
		for (std::size_t h = 0; h < heads; ++h) {
			for (std::size_t l = 0; l < len; ++l) {
				std::copy_n(a.data().data() + ((b * heads + h) * len + l) * d, d,
				            out.data() + (b * len + l) * width + h * d);
			}
		}
	}
	Tensor y = make_output({batch, len, width}, std::move(out), {&a}, "merge_heads");
	if (y.requires_grad()) {
		record([a, y, batch, len, width, heads, d]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const auto dy = y.grad();
			auto da = a.grad_buffer();
			for (std::size_t b = 0; b < batch; ++b) {
				for (std::size_t h = 0; h < heads; ++h) {
					for (std::size_t l = 0; l < len; ++l) {
						for (std::size_t e = 0; e < d; ++e) {
							da[((b * heads + h) * len + l) * d + e] += dy[(b * len + l) * width + h * d + e];
						}
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::attention(const Tensor &q, const Tensor &k, const Tensor &v, std::size_t heads,
                       const std::vector<bool> &mask) {
	const bool batched = q.rank() == 3;
	if (!(q.rank() == 2 || q.rank() == 3) || k.rank() != q.rank() || v.rank() != q.rank()) {
		throw InputError("attention: q, k, v must all be rank 2 or all rank 3");
	}
	const std::size_t batch = batched ? q.dim(0) : 1;
	const std::size_t lq = q.dim(q.rank() - 2), lk = k.dim(k.rank() - 2);
	const std::size_t width = q.dim(q.rank() - 1);
	const std::size_t vwidth = v.dim(v.rank() - 1);
	if ((batched && (k.dim(0) != batch || v.dim(0) != batch)) || k.dim(k.rank() - 1) != width ||
	    v.dim(v.rank() - 2) != lk) {
		throw InputError("attention: incompatible shapes q" + to_string(q.shape()) + " k" + to_string(k.shape()) +
		                 " v" + to_string(v.shape()));
	}
	if (heads == 0 || width % heads != 0 || vwidth % heads != 0) {
		throw InputError("attention: widths " + std::to_string(width) + " and " + std::to_string(vwidth) +
		                 " are not divisible by " + std::to_string(heads) + " heads");
	}
	if (!mask.empty() && mask.size() != lq * lk) {
		throw InputError("attention: mask size does not match [lq, lk]");
	}
	const std::size_t d = width / heads;
	const std::size_t dvh = vwidth / heads;
	const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

	// probs[b][h][i][j]
	std::vector<double> probs(batch * heads * lq * lk);
	std::vector<double> out(batch * lq * vwidth, 0.0);
	const double *qd = q.data().data();
	const double *kd = k.data().data();
	const double *vd = v.data().data();
	for (std::size_t b = 0; b < batch; ++b) {
		for (std::size_t h = 0; h < heads; ++h) {
			const std::size_t col = h * d;
			for (std::size_t i = 0; i < lq; ++i) {
				double *p = probs.data() + ((b * heads + h) * lq + i) * lk;
				const double *qi = qd + (b * lq + i) * width + col;
				double peak = -std::numeric_limits<double>::infinity();
				for (std::size_t j = 0; j < lk; ++j) {
					if (!mask.empty() && mask[i * lk + j]) {
						p[j] = -std::numeric_limits<double>::infinity();
						continue;
					}
					const double *kj = kd + (b * lk + j) * width + col;
					double s = 0.0;
					for (std::size_t e = 0; e < d; ++e) {
						s += qi[e] * kj[e];
					}
					p[j] = s * inv_sqrt_d;
					peak = std::max(peak, p[j]);
				}
				double total = 0.0;
				for (std::size_t j = 0; j < lk; ++j) {
					p[j] = std::exp(p[j] - peak);
					total += p[j];
				}
				double *oi = out.data() + (b * lq + i) * vwidth + h * dvh;
				for (std::size_t j = 0; j < lk; ++j) {
					p[j] /= total;
					const double *vj = vd + (b * lk + j) * vwidth + h * dvh;
					for (std::size_t e = 0; e < dvh; ++e) {
						oi[e] += p[j] * vj[e];
					}
				}
			}
		}
	}
	Shape out_shape = q.shape();
	out_shape.back() = vwidth;
	Tensor y = make_output(std::move(out_shape), std::move(out), {&q, &k, &v}, "attention");
	if (y.requires_grad()) {
		record([q, k, v, y, probs = std::move(probs), batch, heads, lq, lk, width, vwidth, d, dvh, inv_sqrt_d]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const double *dy = y.grad().data();
			const double *qd = q.data().data();
			const double *kd = k.data().data();
			const double *vd = v.data().data();
			double *dq = q.requires_grad() ? q.grad_buffer().data() : nullptr;
			double *dk = k.requires_grad() ? k.grad_buffer().data() : nullptr;
			double *dv = v.requires_grad() ? v.grad_buffer().data() : nullptr;
			std::vector<double> dp(lk);
			for (std::size_t b = 0; b < batch; ++b) {
				for (std::size_t h = 0; h < heads; ++h) {
					const std::size_t col = h * d;
					for (std::size_t i = 0; i < lq; ++i) {
						const double *p = probs.data() + ((b * heads + h) * lq + i) * lk;
						const double *gi = dy + (b * lq + i) * vwidth + h * dvh;
						double dot = 0.0;
						for (std::size_t j = 0; j < lk; ++j) {
							const std::size_t row = (b * lk + j) * vwidth + h * dvh;
							double acc = 0.0;
							for (std::size_t e = 0; e < dvh; ++e) {
								acc += gi[e] * vd[row + e];
								if (dv) {
									dv[row + e] += p[j] * gi[e];
								}
							}
							dp[j] = acc;
							dot += acc * p[j];
						}
						const std::size_t qrow = (b * lq + i) * width + col;
						for (std::size_t j = 0; j < lk; ++j) {
							const double ds = p[j] * (dp[j] - dot) * inv_sqrt_d;
							if (ds == 0.0) {
								continue;
							}
							const std::size_t krow = (b * lk + j) * width + col;
							for (std::size_t e = 0; e < d; ++e) {
								if (dq) {
									dq[qrow + e] += ds * kd[krow + e];
								}
								if (dk) {
									dk[krow + e] += ds * qd[qrow + e];
								}
							}
						}
					}
				}
			}
		});
	}
	return y;
}

Tensor Tape::sum(const Tensor &a) {
	double total = 0.0;
	for (double v : a.data()) {
		total += v;
	}
	Tensor y = make_output({}, {total}, {&a}, "sum");
	if (y.requires_grad()) {
		record([a, y]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const double g = y.grad()[0];
			for (auto &d : a.grad_buffer()) {
				d += g;
			}
		});
	}
	return y;
}

Tensor Tape::mse_loss(const Tensor &pred, const Tensor &target) {
	if (!(pred.size() == target.size() && pred.size() > 0)) {
		throw InputError("mse_loss: sizes differ " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
	}
	const double n = static_cast<double>(pred.size());
	double total = 0.0;
	for (std::size_t i = 0; i < pred.size(); ++i) {
		const double e = pred.data()[i] - target.data()[i];
		total += e * e;
	}
	Tensor y = make_output({}, {total / n}, {&pred}, "mse_loss");
	if (y.requires_grad()) {
		record([pred, target, y, n]() mutable {
			if (!y.has_grad()) {
				return;
			}
			const double g = y.grad()[0] * 2.0 / n;
			auto dp = pred.grad_buffer();
			for (std::size_t i = 0; i < dp.size(); ++i) {
				dp[i] += g * (pred.data()[i] - target.data()[i]);
			}
		});
	}
	return y;
}

void Tape::backward(const Tensor &loss) {
	if (!recording_) {
		throw InputError("backward on a tape that does not record");
	}
	if (loss.size() != 1) {
		throw InputError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
	}
	if (consumed_) {
		throw InputError("backward called twice without reset");
	}
	consumed_ = true;
	if (!loss.requires_grad()) {
		return;
	}
	Tensor seed = loss;
	seed.grad_buffer()[0] += 1.0;
	for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
		(*it)();
	}
}

void Tape::reset() {
	records_.clear();
	consumed_ = false;
}

} // namespace wavecast::autograd
