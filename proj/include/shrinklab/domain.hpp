#pragma once

#include <vector>

namespace shrinklab {

/// One factor of a product parameter domain.
struct Factor {
    enum class Kind { Circle, Polar, Line };
    Kind kind = Kind::Circle;
    double period = 2.0 * 3.14159265358979323846;  // Circle
    int sine_power = 1;                            // Polar: measure sin^m(theta) dtheta
    double res_fraction = 1.0;  // default node count = max(8, round(res * fraction))
};

struct ParamDomain {
    std::vector<Factor> factors;
    int dim() const { return static_cast<int>(factors.size()); }
    bool compact() const {
        for (const auto& f : factors)
            if (f.kind == Factor::Kind::Line) return false;
        return true;
    }
};

}  // namespace shrinklab
