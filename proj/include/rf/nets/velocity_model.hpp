#pragma once

#include <span>
#include <vector>

#include "rf/tensor/ops.hpp"
#include "rf/tensor/params.hpp"
#include "rf/tensor/tensor.hpp"

namespace rf {

// A parameterized velocity field v(x, t). Implementations provide a batched,
// gradient-tracked forward pass; solvers use the flat untracked eval.
class VelocityModel {
public:
    virtual ~VelocityModel() = default;

    // Shape of one sample, e.g. {2} for the toy task or {2,H,W} for images.
    virtual const Shape& sample_shape() const = 0;

    // x is [N, *sample_shape]; ts has one timestep per sample.
    virtual Tensor forward(const Tensor& x, const std::vector<double>& ts) = 0;

    virtual ParamMap& params() = 0;
    const ParamMap& params() const { return const_cast<VelocityModel*>(this)->params(); }

    int64_t sample_numel() const { return shape_numel(sample_shape()); }

    // Untracked single-sample evaluation for ODE integration.
    virtual void eval(std::span<const double> x, double t, std::span<double> out);
};

}  // namespace rf
