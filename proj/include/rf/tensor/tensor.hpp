#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rf/core/error.hpp"
#include "rf/core/rng.hpp"

namespace rf {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major value storage shared by tensor handles and tape nodes.
struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward touches this node
    bool requires_grad = false;
    int64_t node_id = -1;  // position in the recording tape, -1 for leaves

    void accumulate(const std::vector<double>& g);
    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), 0.0);
    }
};

// Cheap value-semantics handle over shared storage.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor scalar(double v);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor randn(Shape shape, Rng& rng);
    static Tensor uniform(Shape shape, Rng& rng, double lo, double hi);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    int64_t numel() const { return static_cast<int64_t>(d_->values.size()); }
    int64_t rank() const { return static_cast<int64_t>(d_->shape.size()); }

    std::span<const double> data() const { return d_->values; }
    std::span<double> mut_data() { return d_->values; }
    double at(int64_t i) const { return d_->values[static_cast<size_t>(i)]; }

    // Scalar accessor; rejects non-scalars.
    double value() const;

    Tensor& set_requires_grad(bool b) {
        d_->requires_grad = b;
        return *this;
    }
    bool requires_grad() const { return d_->requires_grad; }

    bool has_grad() const { return !d_->grad.empty(); }
    std::span<const double> grad() const;
    void zero_grad() { d_->grad.clear(); }

    // Deep copy of values (no grad, no tape linkage).
    Tensor clone() const;

    std::shared_ptr<TensorData>& impl() { return d_; }
    const std::shared_ptr<TensorData>& impl() const { return d_; }

private:
    std::shared_ptr<TensorData> d_;
};

// One primitive-op record: inputs, output, and the local gradient rule.
struct TapeNode {
    const char* op = "";
    std::vector<std::shared_ptr<TensorData>> inputs;
    std::shared_ptr<TensorData> out;
    std::function<void(TapeNode&)> backward;
};

// Computation record. Constructing one makes it the active tape for the
// current thread (RAII); ops record into it when any input requires grad.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    int64_t record(TapeNode node);
    size_t size() const { return nodes_.size(); }

    // Reverse sweep from a scalar objective; populates grads on every
    // tracked leaf. Reusable: a second backward accumulates again.
    void backward(const Tensor& objective);

    void clear();

private:
    std::vector<TapeNode> nodes_;
    Tape* prev_ = nullptr;
};

// Suppresses recording within a scope (model evaluation inside solvers).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();

private:
    Tape* saved_;
};

}  // namespace rf
