#pragma once

#include "rst/loss_model.hpp"
#include "rst/transmission.hpp"

#include <functional>
#include <optional>

namespace rst {

enum class RwaMode {
    IrbFull,          ///< sum_i EAD_i * RW_i(s)
    Linear,           ///< RWA_0 + sum_i alpha_i (PD_i(s) - PD_i^0)
    Constant,         ///< RWA_0
    LinearRiskWeight, ///< sum_i EAD_i (a_i + b_i (PD_i(s) - PD_i^0))
};

enum class LossBasis {
    Absolute,    ///< CET1_0 - L_q(s)
    Incremental, ///< CET1_0 - (L_q(s) - L_q(0)), so that R(0) = R_0
};

struct CapitalState {
    double cet1_0 = 0.0;
    double rwa_0 = 0.0;
    double depletion = 0.03;
    std::optional<double> r_star_override; ///< e.g. a Pillar 1 + buffer requirement
    RwaMode rwa_mode = RwaMode::IrbFull;
    bool maturity_adjustment = true;
    LossBasis loss_basis = LossBasis::Incremental;
    Vector alpha;         ///< Linear mode, one entry per credit line
    Vector rw_intercept;  ///< LinearRiskWeight mode
    Vector rw_slope;      ///< LinearRiskWeight mode
    Vector pnl_noncredit; ///< linear non-credit P&L loadings on s; empty means zero

    double r0() const { return cet1_0 / rwa_0; }
    double r_star() const;
    /// Checks 0 < r_star < r0 and that mode-specific vectors have the right size.
    void validate(std::size_t n_lines, std::size_t dimension) const;
};

/// Basel IRB maturity adjustment (1 + (M - 2.5) b) / (1 - 1.5 b), b = (0.11852 - 0.05478 ln pd)^2.
double maturity_adjustment(double pd, double maturity);

/// LGD * [tail_default_probability(pd) - pd] * gamma(M); gamma = 1 when the
/// maturity adjustment is disabled.
double risk_weight(double pd, double lgd, double rho, double maturity, const LossQuantileSpec& spec,
                   bool apply_maturity_adjustment = true);
double risk_weight(const ExposureRecord& exposure, double pd, double lgd, const LossQuantileSpec& spec,
                   bool apply_maturity_adjustment = true);
/// d RW / d pd at fixed lgd.
double risk_weight_pd_derivative(double pd, double lgd, double rho, double maturity, double systematic_quantile,
                                 bool apply_maturity_adjustment);

struct CapitalBreakdown {
    double loss = 0.0;          ///< L_q(s)
    double baseline_loss = 0.0; ///< L_q(0)
    double cet1 = 0.0;
    double rwa = 0.0;
    bool rwa_clamped = false;
    double ratio = 0.0;
};

/// Maps a scenario to the stressed CET1 ratio R(s). Implementations must be
/// immutable after construction; solver workers call them concurrently.
class CapitalModel {
public:
    virtual ~CapitalModel() = default;

    virtual std::size_t dimension() const = 0;
    virtual double ratio(const ScenarioVector& s) const = 0;
    virtual double baseline_ratio() const = 0;
    virtual double threshold() const = 0;

    virtual bool has_ratio_gradient() const { return false; }
    virtual Vector ratio_gradient(const ScenarioVector& s) const;

    virtual bool supports_monotonicity() const { return false; }
    virtual double monotonicity_violation(const ScenarioVector& s) const;
    /// Smooth stand-in for the monotonicity violation: temperature * log of the
    /// mean of exp(v_j / temperature) over relative deficits v_j. Feasible
    /// (<= 0) whenever no line deteriorates; optionally returns the gradient.
    virtual double smooth_monotonicity(const ScenarioVector& s, double temperature, Vector* gradient) const;

    bool breach(const ScenarioVector& s) const { return ratio(s) <= threshold(); }
};

/// One row of the credit engine. Exposure-level portfolios produce one line per
/// exposure, sector-level portfolios one line per sector.
struct CreditLine {
    std::string id;
    double ead = 0.0;
    double pd0 = 0.0;
    double lgd0 = 0.0;
    double rho = 0.0;
    double maturity = 1.0;
    std::size_t sensitivity = 0; ///< index into the loading table
};

class CreditCapitalModel final : public CapitalModel {
public:
    CreditCapitalModel(std::vector<CreditLine> lines, std::vector<SectorSensitivities> loadings,
                       SoftClip lgd_saturation, CapitalState state, LossQuantileSpec spec, std::size_t dimension);

    std::size_t dimension() const override { return dimension_; }
    double ratio(const ScenarioVector& s) const override { return evaluate(s).ratio; }
    double baseline_ratio() const override { return state_.r0(); }
    double threshold() const override { return state_.r_star(); }
    bool has_ratio_gradient() const override { return true; }
    Vector ratio_gradient(const ScenarioVector& s) const override;
    bool supports_monotonicity() const override { return true; }
    double monotonicity_violation(const ScenarioVector& s) const override;
    double smooth_monotonicity(const ScenarioVector& s, double temperature, Vector* gradient) const override;

    CapitalBreakdown evaluate(const ScenarioVector& s) const;
    double loss_quantile(const ScenarioVector& s) const;
    double rwa(const ScenarioVector& s, bool* clamped = nullptr) const;
    double cet1(const ScenarioVector& s) const;

    const CapitalState& state() const { return state_; }
    const LossQuantileSpec& spec() const { return spec_; }
    const std::vector<CreditLine>& lines() const { return lines_; }

private:
    struct LineState {
        double pd;
        double lgd;
    };
    LineState line_state(const CreditLine& line, const ScenarioVector& s) const;
    double pnl(const ScenarioVector& s) const;
    double raw_rwa(const ScenarioVector& s) const;

    std::vector<CreditLine> lines_;
    std::vector<SectorSensitivities> loadings_;
    SoftClip clip_;
    CapitalState state_;
    LossQuantileSpec spec_;
    std::size_t dimension_;
    double systematic_quantile_;
    double baseline_loss_;
};

CreditCapitalModel make_capital_model(const Portfolio& portfolio, const CapitalState& state,
                                      const LossQuantileSpec& spec, std::size_t dimension);

double cet1_stressed(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                     const LossQuantileSpec& spec);
double rwa_stressed(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                    const LossQuantileSpec& spec);
double cet1_ratio(const CapitalState& state, const Portfolio& portfolio, const ScenarioVector& s,
                  const LossQuantileSpec& spec);

/// alpha_i = EAD_i * dRW_i/dPD_i at the baseline, the first-order match of the
/// IRB risk weights used by RwaMode::Linear.
Vector calibrate_alpha(const Portfolio& portfolio, const LossQuantileSpec& spec, bool apply_maturity_adjustment);

/// Sum_i EAD_i RW_i(0): the RWA the IRB formula implies at the baseline.
double baseline_irb_rwa(const Portfolio& portfolio, const LossQuantileSpec& spec, bool apply_maturity_adjustment);

/// Capital map supplied as a plain function; used for synthetic test problems.
class FunctionCapitalModel final : public CapitalModel {
public:
    using RatioFn = std::function<double(const ScenarioVector&)>;
    using GradientFn = std::function<Vector(const ScenarioVector&)>;

    FunctionCapitalModel(std::size_t dimension, double r0, double r_star, RatioFn ratio, GradientFn gradient = {});

    std::size_t dimension() const override { return dimension_; }
    double ratio(const ScenarioVector& s) const override { return ratio_(s); }
    double baseline_ratio() const override { return r0_; }
    double threshold() const override { return r_star_; }
    bool has_ratio_gradient() const override { return static_cast<bool>(gradient_); }
    Vector ratio_gradient(const ScenarioVector& s) const override;

private:
    std::size_t dimension_;
    double r0_;
    double r_star_;
    RatioFn ratio_;
    GradientFn gradient_;
};

/// Breach set {w^T s >= c}: R(s) = r0 - slope * (w^T s - c) - (r0 - r_star).
FunctionCapitalModel affine_capital(const Vector& w, double c, double r0 = 0.1, double depletion = 0.03);

} // namespace rst
