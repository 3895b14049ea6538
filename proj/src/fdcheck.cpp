#include "adk/fdcheck.hpp"

#include <cmath>

#include "adk/errors.hpp"

namespace adk {

FdReport finite_difference_check(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> point,
                                 const std::vector<double>& analytic_grad, double step) {
    if (point.size() != analytic_grad.size()) {
        throw UsageError("finite_difference_check: gradient length mismatch");
    }
    if (step <= 0.0) throw UsageError("finite_difference_check: step must be positive");

    FdReport report;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double x0 = point[i];
        point[i] = x0 + step;
        const double fp = f(point);
        point[i] = x0 - step;
        const double fm = f(point);
        point[i] = x0;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            report.evaluable = false;
            report.worst_coord = static_cast<std::ptrdiff_t>(i);
            report.note = "f non-finite at probe for coordinate " + std::to_string(i);
            return report;
        }
        const double central = (fp - fm) / (2.0 * step);
        const double rel = std::abs(analytic_grad[i] - central) / (std::abs(central) + 1e-12);
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = static_cast<std::ptrdiff_t>(i);
        }
    }
    return report;
}

}  // namespace adk
