#pragma once

#include <functional>
#include <memory>

#include "spdelab/field.hpp"
#include "spdelab/grid.hpp"

namespace spdelab {

// Adapted view of a trajectory under construction: only time slices up to the
// current step are readable, which is what makes Girsanov drifts predictable
// by construction.
class PastView {
public:
    PastView(const FieldPath& path, int current_step)
        : path_(&path), step_(current_step) {}

    double at(int i, int j) const {
        if (i > step_)
            throw DomainError("PastView: drift tried to read a future time slice");
        return path_->at(i, j);
    }
    double current(int j) const { return path_->at(step_, j); }
    int step() const { return step_; }
    const Grid& grid() const { return path_->grid; }

private:
    const FieldPath* path_;
    int step_;
};

// Girsanov drift X(t, x, u-past). Values are clamped to |X| <= cap.
class DriftSpec {
public:
    enum class Kind { Zero, Constant, Deterministic, StateFeedback };

    static DriftSpec zero();
    static DriftSpec constant(double c, double cap = 1e6);
    static DriftSpec deterministic(std::function<double(double t, double x)> fn, double cap = 1e6);
    static DriftSpec state_feedback(
        std::function<double(double t, double x, const PastView&, int j_cell)> fn, double cap = 1e6);

    Kind kind() const { return kind_; }
    double cap() const { return cap_; }
    // Deterministic drifts make the entropy estimate exact (zero CI).
    bool is_deterministic() const { return kind_ != Kind::StateFeedback; }

    // X(t_i, x_j) for every cell j at step i, clamped to the cap.
    void eval_row(int i, const Grid& grid, const PastView& past, double* out) const;

    // Full field along a fixed trajectory.
    DriftField eval_field(const FieldPath& u) const;

private:
    Kind kind_ = Kind::Zero;
    double cap_ = 1e6;
    double value_ = 0.0;
    std::function<double(double, double)> det_fn_;
    std::function<double(double, double, const PastView&, int)> state_fn_;
};

} // namespace spdelab
