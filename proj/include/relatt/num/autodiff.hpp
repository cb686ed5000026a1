#pragma once

#include <functional>
#include <span>
#include <vector>

#include "relatt/num/tape.hpp"

namespace relatt {

// A recorded forward computation: given a tape and the parameter leaves,
// build the graph and return the scalar loss node.
using Program = std::function<ValueId(Tape&, const std::vector<ValueId>&)>;

struct EvalResult {
    double loss = 0.0;
    std::vector<Tensor> grads;  // one per parameter, same order and shapes
};

inline EvalResult evaluate_with_gradients(const Program& program,
                                          std::span<const Tensor> params) {
    Tape tape;
    std::vector<ValueId> ids;
    ids.reserve(params.size());
    for (const Tensor& p : params) ids.push_back(tape.param(p));
    ValueId loss = program(tape, ids);
    EvalResult res;
    res.loss = tape.backward(loss);
    res.grads.reserve(params.size());
    for (ValueId id : ids) res.grads.push_back(tape.grad(id));
    return res;
}

// Forward value only; no gradient pass.
inline double eval_loss(const Program& program, std::span<const Tensor> params) {
    Tape tape;
    std::vector<ValueId> ids;
    ids.reserve(params.size());
    for (const Tensor& p : params) ids.push_back(tape.param(p));
    ValueId loss = program(tape, ids);
    const Tensor& t = tape.value(loss);
    if (t.numel() != 1) throw ContractError("eval_loss: program output must be scalar");
    return t[0];
}

// Central finite differences against the analytic gradients, coordinate by
// coordinate. Relative error uses max(1, |analytic|, |numeric|) so near-zero
// gradients do not blow the ratio up. Returns the max over all coordinates.
inline double finite_difference_gradcheck(const Program& program,
                                          std::span<const Tensor> params, double step) {
    if (step <= 0.0) throw ContractError("gradcheck: step must be positive");
    EvalResult analytic = evaluate_with_gradients(program, params);
    std::vector<Tensor> work(params.begin(), params.end());
    double worst = 0.0;
    for (std::size_t p = 0; p < work.size(); ++p) {
        for (std::int64_t i = 0; i < work[p].numel(); ++i) {
            double orig = work[p][i];
            work[p][i] = orig + step;
            double fp = eval_loss(program, work);
            work[p][i] = orig - step;
            double fm = eval_loss(program, work);
            work[p][i] = orig;
            double numeric = (fp - fm) / (2.0 * step);
            double a = analytic.grads[p][i];
            double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace relatt
