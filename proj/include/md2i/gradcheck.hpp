#pragma once

#include <functional>
#include <string>
#include <vector>

#include "md2i/nn.hpp"

namespace md2i {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t checked = 0;
};

/// A scalar objective over a set of parameter blocks.
///   loss()          re-evaluates the objective at the current parameters
///   compute_grads() zeroes the blocks' grad buffers and fills them analytically
struct GradCheckProblem {
    std::function<double()> loss;
    std::function<void()> compute_grads;
    std::vector<ParamBlock> blocks;
};

/// Central finite differences (f(t+h)-f(t-h))/2h against analytic gradients.
/// Relative error uses a guarded denominator max(|a|,|fd|,guard).
GradCheckResult grad_check(GradCheckProblem& problem, double h = 1e-5, double guard = 1e-3);

/// Convenience wrapper: checks every parameter of one net against a scalar
/// loss on its output. loss_fn(out, grad_out) returns the loss and, when
/// grad_out is non-null, fills d loss / d out.
GradCheckResult grad_check_net(MlpNet& net,
                               const std::function<double(const Matrix&, Matrix*)>& loss_fn,
                               const Matrix& input, double h = 1e-5);

struct GradSuiteEntry {
    std::string name;
    double max_rel_err = 0.0;
};

/// Finite-difference verification of every loss in the framework on random
/// small instances: l_rec, l_m, l_d, l_c, l_mmd. `corrupt` perturbs one
/// analytic gradient so the failure path can be exercised.
std::vector<GradSuiteEntry> run_gradcheck_suite(uint64_t seed, bool corrupt = false);

}  // namespace md2i
