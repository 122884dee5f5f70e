#pragma once

#include <memory>

#include "rf/core/rng.hpp"
#include "rf/tensor/tensor.hpp"

namespace rf {

// Source of data samples x1 for flow training.
class DataSource {
public:
    virtual ~DataSource() = default;
    virtual const Shape& sample_shape() const = 0;
    virtual Tensor draw(int64_t n, Rng& rng) const = 0;  // [n, *sample_shape]
};

// 2-D ring of eight Gaussian modes, the standard toy transport target.
class EightGaussians : public DataSource {
public:
    explicit EightGaussians(double radius = 3.0, double sigma = 0.2)
        : radius_(radius), sigma_(sigma) {}
    const Shape& sample_shape() const override { return shape_; }
    Tensor draw(int64_t n, Rng& rng) const override;

private:
    Shape shape_{2};
    double radius_, sigma_;
};

// Standard normal in d dimensions (matches the latent distribution).
class GaussianSource : public DataSource {
public:
    explicit GaussianSource(int64_t dim) : shape_{dim} {}
    const Shape& sample_shape() const override { return shape_; }
    Tensor draw(int64_t n, Rng& rng) const override;

private:
    Shape shape_;
};

// Single point mass at a fixed location.
class PointMassSource : public DataSource {
public:
    explicit PointMassSource(std::vector<double> point)
        : shape_{static_cast<int64_t>(point.size())}, point_(std::move(point)) {}
    const Shape& sample_shape() const override { return shape_; }
    Tensor draw(int64_t n, Rng& rng) const override;

private:
    Shape shape_;
    std::vector<double> point_;
};

// Draws uniformly (with replacement) from a fixed tensor of samples.
class TensorDataset : public DataSource {
public:
    explicit TensorDataset(Tensor samples);
    const Shape& sample_shape() const override { return shape_; }
    Tensor draw(int64_t n, Rng& rng) const override;
    int64_t size() const { return samples_.shape()[0]; }
    const Tensor& all() const { return samples_; }

private:
    Tensor samples_;  // [M, *sample_shape]
    Shape shape_;
};

}  // namespace rf
