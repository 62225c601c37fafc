#pragma once

#include <memory>
#include <span>
#include <string>

namespace cbid {

class WeightMatrix;

/// Convex margin loss L(rho) with its derivative and Fenchel conjugate L*(u).
class LossPlugin {
public:
    virtual ~LossPlugin() = default;

    virtual std::string name() const = 0;
    virtual double value(double rho) const = 0;
    virtual double derivative(double rho) const = 0;
    /// L''(rho).
    virtual double curvature(double rho) const = 0;
    /// sup_rho (u rho - L(rho)); throws DomainError where it is +infinity.
    virtual double conjugate(double u) const = 0;
};

/// L(rho) = log(1 + exp(-rho)).
class LogisticLoss final : public LossPlugin {
public:
    std::string name() const override { return "logistic"; }
    double value(double rho) const override;
    double derivative(double rho) const override;
    double curvature(double rho) const override;
    double conjugate(double u) const override;
};

/// Loss by configuration name. Only "logistic" is provided.
std::unique_ptr<LossPlugin> make_loss(const std::string& name);

double logistic_value(double rho) noexcept;
/// (-u) log(-u) + (1+u) log(1+u) on [-1, 0], with 0 log 0 = 0.
double logistic_conjugate(double u);
/// exp(-rho) / (1 + exp(-rho)) = -L'(rho), in (0, 1).
double dual_from_margin(double rho) noexcept;

enum class Penalty { ell1, ellinf };

Penalty parse_penalty(const std::string& name);
const char* to_string(Penalty p) noexcept;

/// ell1: sum of entries; ellinf: largest entry. Entries must be non-negative.
double reg_value(Penalty p, const WeightMatrix& w);
double reg_value(Penalty p, std::span<const double> entries);

}  // namespace cbid
