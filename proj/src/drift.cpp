#include "spdelab/drift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spdelab {

DriftSpec DriftSpec::zero() {
    DriftSpec d;
    d.kind_ = Kind::Zero;
    return d;
}

DriftSpec DriftSpec::constant(double c, double cap) {
    DriftSpec d;
    d.kind_ = Kind::Constant;
    d.value_ = c;
    d.cap_ = cap;
    return d;
}

DriftSpec DriftSpec::deterministic(std::function<double(double, double)> fn, double cap) {
    DriftSpec d;
    d.kind_ = Kind::Deterministic;
    d.det_fn_ = std::move(fn);
    d.cap_ = cap;
    return d;
}

DriftSpec DriftSpec::state_feedback(
    std::function<double(double, double, const PastView&, int)> fn, double cap) {
    DriftSpec d;
    d.kind_ = Kind::StateFeedback;
    d.state_fn_ = std::move(fn);
    d.cap_ = cap;
    return d;
}

void DriftSpec::eval_row(int i, const Grid& grid, const PastView& past, double* out) const {
    const double t = grid.time(i);
    for (int j = 0; j < grid.nx; ++j) {
        double x;
        switch (kind_) {
            case Kind::Zero: x = 0.0; break;
            case Kind::Constant: x = value_; break;
            case Kind::Deterministic: x = det_fn_(t, grid.space(j)); break;
            case Kind::StateFeedback: x = state_fn_(t, grid.space(j), past, j); break;
            default: x = 0.0; break;
        }
        if (!std::isfinite(x)) {
            std::ostringstream msg;
            msg << "DriftSpec: non-finite value at cell (" << i << ", " << j << ")";
            throw NumericError(msg.str());
        }
        out[j] = std::clamp(x, -cap_, cap_);
    }
}

DriftField DriftSpec::eval_field(const FieldPath& u) const {
    const Grid& grid = u.grid;
    DriftField field(grid);
    for (int i = 0; i < grid.nt; ++i) {
        PastView past(u, i);
        eval_row(i, grid, past, field.v.data() + static_cast<std::size_t>(i) * grid.nx);
    }
    return field;
}

} // namespace spdelab
