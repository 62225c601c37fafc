#include "cbid/losses.hpp"

#include "cbid/errors.hpp"
#include "cbid/weights.hpp"

#include <algorithm>
#include <cmath>

namespace cbid {

double logistic_value(double rho) noexcept {
    if (rho > 0.0) return std::log1p(std::exp(-rho));
    return -rho + std::log1p(std::exp(rho));
}

double dual_from_margin(double rho) noexcept {
    if (rho >= 0.0) {
        const double e = std::exp(-rho);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(rho));
}

double logistic_conjugate(double u) {
    if (!(u >= -1.0 && u <= 0.0)) {
        throw DomainError("logistic conjugate is infinite outside [-1, 0]");
    }
    const double p = -u;
    const double q = 1.0 + u;
    const double a = p > 0.0 ? p * std::log(p) : 0.0;
    const double b = q > 0.0 ? q * std::log(q) : 0.0;
    return a + b;
}

double LogisticLoss::value(double rho) const { return logistic_value(rho); }
double LogisticLoss::derivative(double rho) const { return -dual_from_margin(rho); }
double LogisticLoss::curvature(double rho) const { return dual_from_margin(rho) * dual_from_margin(-rho); }
double LogisticLoss::conjugate(double u) const { return logistic_conjugate(u); }

std::unique_ptr<LossPlugin> make_loss(const std::string& name) {
    if (name == "logistic") return std::make_unique<LogisticLoss>();
    throw DataError("unknown loss '" + name + "' (available: logistic)");
}

Penalty parse_penalty(const std::string& name) {
    if (name == "l1" || name == "ell1") return Penalty::ell1;
    if (name == "linf" || name == "ellinf") return Penalty::ellinf;
    throw DataError("unknown penalty '" + name + "' (expected l1 or linf)");
}

const char* to_string(Penalty p) noexcept { return p == Penalty::ell1 ? "l1" : "linf"; }

double reg_value(Penalty p, std::span<const double> entries) {
    double sum = 0.0;
    double largest = 0.0;
    for (double w : entries) {
        if (w < 0.0) throw DomainError("regularizer needs non-negative weights");
        sum += w;
        largest = std::max(largest, w);
    }
    return p == Penalty::ell1 ? sum : largest;
}

double reg_value(Penalty p, const WeightMatrix& w) { return reg_value(p, w.entries()); }

}  // namespace cbid
