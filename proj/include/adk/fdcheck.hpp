#pragma once

#include <functional>
#include <string>
#include <vector>

namespace adk {

struct FdReport {
    double max_rel_err{0.0};
    std::ptrdiff_t worst_coord{-1};
    bool evaluable{true};  // false if f returned a non-finite value at a probe point
    std::string note;
};

// Central-difference check of an analytic gradient. Per coordinate i the
// relative error is |analytic[i] - central[i]| / (|central[i]| + 1e-12).
// A non-finite f at any probe point is reported via `evaluable` and the
// offending coordinate rather than thrown.
FdReport finite_difference_check(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> point,
                                 const std::vector<double>& analytic_grad, double step);

}  // namespace adk
