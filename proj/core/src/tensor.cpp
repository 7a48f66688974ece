#include "wavecast/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "wavecast/errors.hpp"

namespace wavecast::autograd {

std::size_t element_count(const Shape &shape) {
	std::size_t n = 1;
	for (auto d : shape) {
		n *= d;
	}
	return n;
}

std::string to_string(const Shape &shape) {
	std::ostringstream out;
	out << '[';
	for (std::size_t i = 0; i < shape.size(); ++i) {
		out << (i ? "," : "") << shape[i];
	}
	out << ']';
	return out.str();
}

Tensor::Tensor() : node_(std::make_shared<Node>()) {
	node_->data.assign(1, 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) : node_(std::make_shared<Node>()) {
	if (element_count(shape) != data.size()) {
		throw InputError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
		                 to_string(shape));
	}
	node_->shape = std::move(shape);
	node_->data = std::move(data);
	node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
	const auto n = element_count(shape);
	return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(Shape{}, {value}, requires_grad); }


double Tensor::item() const {
	if (size() != 1) {
		throw InputError("item() on tensor of shape " + to_string(shape()));
	}
	return node_->data[0];
}



std::span<double> Tensor::grad_buffer() const {
	if (node_->grad.empty()) {
		node_->grad.assign(node_->data.size(), 0.0);
	}
	return node_->grad;
}


void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone() const { return Tensor(node_->shape, node_->data, node_->requires_grad); }

} // namespace wavecast::autograd
