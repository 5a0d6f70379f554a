#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poet {

enum class ShrinkageKind { hard, soft, scad, adaptive_lasso };

/// Generalized shrinkage s(z, tau): zero for |z| <= tau, |s(z) - z| <= tau,
/// sign preserved, odd in z.
struct ShrinkageRule {
    ShrinkageKind kind = ShrinkageKind::hard;
    double scad_a = 3.7;  // > 2
    double al_eta = 1.0;  // >= 1

    static ShrinkageRule hard() { return {ShrinkageKind::hard}; }
    static ShrinkageRule soft() { return {ShrinkageKind::soft}; }
    static ShrinkageRule scad(double a = 3.7) { return {ShrinkageKind::scad, a}; }
    static ShrinkageRule adaptive_lasso(double eta = 1.0) {
        return {ShrinkageKind::adaptive_lasso, 3.7, eta};
    }

    void validate() const {
        if (kind == ShrinkageKind::scad && !(scad_a > 2.0)) {
            throw std::invalid_argument("SCAD parameter a must exceed 2");
        }
        if (kind == ShrinkageKind::adaptive_lasso && !(al_eta >= 1.0)) {
            throw std::invalid_argument("adaptive lasso exponent eta must be >= 1");
        }
    }

    std::string name() const {
        switch (kind) {
            case ShrinkageKind::hard: return "hard";
            case ShrinkageKind::soft: return "soft";
            case ShrinkageKind::scad: return "scad";
            case ShrinkageKind::adaptive_lasso: return "adaptive_lasso";
        }
        return "unknown";
    }

    /// Accepts the names produced by name(); throws std::invalid_argument.
    static ShrinkageRule parse(const std::string& name) {
        if (name == "hard") return hard();
        if (name == "soft") return soft();
        if (name == "scad") return scad();
        if (name == "adaptive_lasso" || name == "alasso") return adaptive_lasso();
        throw std::invalid_argument("unknown shrinkage rule '" + name + "'");
    }
};

/// No argument checks; tau must be >= 0 (may be +inf).
inline double shrink_unchecked(double z, double tau, const ShrinkageRule& rule) noexcept {
    const double a = std::abs(z);
    if (!(a > tau)) return 0.0;  // |z| <= tau
    double r = 0.0;
    switch (rule.kind) {
        case ShrinkageKind::hard:
            r = a;
            break;
        case ShrinkageKind::soft:
            r = a - tau;
            break;
        case ShrinkageKind::scad:
            if (a <= 2.0 * tau) {
                r = a - tau;
            } else if (a <= rule.scad_a * tau) {
                // Analytically <= a; the min absorbs rounding at the knot a * tau.
                r = std::min(a, ((rule.scad_a - 1.0) * a - rule.scad_a * tau) / (rule.scad_a - 2.0));
            } else {
                r = a;
            }
            break;
        case ShrinkageKind::adaptive_lasso:
            r = a - tau * std::pow(tau / a, rule.al_eta);
            break;
    }
    if (r < 0.0) r = 0.0;
    return z < 0.0 ? -r : r;
}

/// Throws std::invalid_argument for tau < 0 or NaN.
inline double shrink(double z, double tau, const ShrinkageRule& rule) {
    if (!(tau >= 0.0)) throw std::invalid_argument("shrink: tau must be >= 0");
    rule.validate();
    return shrink_unchecked(z, tau, rule);
}

}  // namespace poet
