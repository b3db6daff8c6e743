#include "crn/neural/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "crn/errors.hpp"

namespace crn::neural {

GradientCheckReport gradient_check(const Mlp& net, const Eigen::MatrixXd& input, const LossFn& loss,
                                   double tolerance, double h) {
    if (net.parameter_count() > 10000) throw ContractError("gradient check limited to 10,000 parameters");
    Mlp::Cache cache;
    const Eigen::MatrixXd out = net.forward(input, &cache);
    Eigen::MatrixXd upstream(out.rows(), out.cols());
    loss(out, &upstream);
    const Eigen::VectorXd analytic = net.backward(cache, upstream).params;

    Mlp probe = net;
    GradientCheckReport report;
    report.relative_errors.resize(net.parameter_count());
    for (Eigen::Index i = 0; i < probe.params().size(); ++i) {
        const double saved = probe.params()[i];
        probe.params()[i] = saved + h;
        const double plus = loss(probe.forward(input), nullptr);
        probe.params()[i] = saved - h;
        const double minus = loss(probe.forward(input), nullptr);
        probe.params()[i] = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        report.relative_errors[static_cast<std::size_t>(i)] = rel;
        report.max_relative_error = std::max(report.max_relative_error, rel);
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

}  // namespace crn::neural
