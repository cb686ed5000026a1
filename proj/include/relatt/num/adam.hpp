#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "relatt/num/tensor.hpp"

namespace relatt {

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Standard Adam with bias correction. One state per parameter list; moment
// shapes mirror parameter shapes, t advances by one per step.
class AdamState {
public:
    AdamState(std::span<const Tensor> params, AdamConfig cfg) : cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const Tensor& p : params) {
            m_.push_back(Tensor::zeros(p.shape()));
            v_.push_back(Tensor::zeros(p.shape()));
        }
    }

    int step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // params[i] <- params[i] - lr * m_hat / (sqrt(v_hat) + eps)
    void step(std::span<Tensor*> params, std::span<const Tensor> grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ContractError("adam: parameter/gradient count mismatch");
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t p = 0; p < m_.size(); ++p) {
            Tensor& x = *params[p];
            const Tensor& g = grads[p];
            if (!x.same_shape(m_[p]) || !g.same_shape(m_[p]))
                throw ContractError("adam: shape mismatch on parameter " + std::to_string(p));
            for (std::int64_t i = 0; i < x.numel(); ++i) {
                m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g[i];
                v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                double mhat = m_[p][i] / bc1;
                double vhat = v_[p][i] / bc2;
                x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

private:
    AdamConfig cfg_;
    int t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace relatt
