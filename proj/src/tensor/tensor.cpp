#include "rf/tensor/tensor.hpp"

#include <numeric>
#include <sstream>

namespace rf {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

void TensorData::accumulate(const std::vector<double>& g) {
    ensure_grad();
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

static std::shared_ptr<TensorData> make_data(Shape shape, std::vector<double> values) {
    const int64_t n = shape_numel(shape);
    if (static_cast<size_t>(n) != values.size()) {
        throw ShapeError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    }
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    return d;
}

Tensor Tensor::zeros(Shape shape) {
    const auto n = static_cast<size_t>(shape_numel(shape));
    return Tensor(make_data(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(Shape shape, double v) {
    const auto n = static_cast<size_t>(shape_numel(shape));
    return Tensor(make_data(std::move(shape), std::vector<double>(n, v)));
}

Tensor Tensor::scalar(double v) { return full({1}, v); }

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    return Tensor(make_data(std::move(shape), std::move(values)));
}

Tensor Tensor::randn(Shape shape, Rng& rng) {
    const auto n = static_cast<size_t>(shape_numel(shape));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return Tensor(make_data(std::move(shape), std::move(v)));
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi) {
    const auto n = static_cast<size_t>(shape_numel(shape));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor(make_data(std::move(shape), std::move(v)));
}

double Tensor::value() const {
    if (numel() != 1) {
        throw ShapeError("scalar access on tensor of shape " + shape_str(shape()));
    }
    return d_->values[0];
}

std::span<const double> Tensor::grad() const {
    if (d_->grad.empty()) {
        throw Error("gradient not populated; run backward() first");
    }
    return d_->grad;
}

Tensor Tensor::clone() const {
    return Tensor::from(d_->shape, d_->values);
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

int64_t Tape::record(TapeNode node) {
    nodes_.push_back(std::move(node));
    const auto id = static_cast<int64_t>(nodes_.size()) - 1;
    nodes_.back().out->node_id = id;
    return id;
}

void Tape::backward(const Tensor& objective) {
    if (objective.numel() != 1) {
        throw ShapeError("backward objective must be scalar, got shape " +
                         shape_str(objective.shape()));
    }
    const int64_t start = objective.impl()->node_id;
    if (start < 0 || static_cast<size_t>(start) >= nodes_.size() ||
        nodes_[static_cast<size_t>(start)].out != objective.impl()) {
        throw UsageError("backward objective was not produced under this record");
    }
    objective.impl()->ensure_grad();
    objective.impl()->grad[0] += 1.0;
    for (int64_t i = start; i >= 0; --i) {
        TapeNode& node = nodes_[static_cast<size_t>(i)];
        if (node.out->grad.empty()) continue;  // not on the path to the objective
        node.backward(node);
    }
    // Tracked leaves the objective does not depend on still end with a
    // (zero) gradient, so every leaf reads consistently after backward.
    for (auto& node : nodes_) {
        for (auto& in : node.inputs) {
            if (in->requires_grad && in->node_id < 0) in->ensure_grad();
        }
    }
}

void Tape::clear() { nodes_.clear(); }

NoGradGuard::NoGradGuard() : saved_(g_active_tape) { g_active_tape = nullptr; }

NoGradGuard::~NoGradGuard() { g_active_tape = saved_; }

}  // namespace rf
