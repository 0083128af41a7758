#ifndef WNDUMA_GRADCHECK_HPP
#define WNDUMA_GRADCHECK_HPP

// Central finite-difference checks of tape gradients.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wnduma/tensor.hpp"

namespace wnduma {

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is ~0 from reporting huge ratios out of round-off noise.
template <typename Scalar>
Scalar relative_error(Scalar analytic, Scalar numeric, Scalar floor = Scalar(1e-6)) {
    const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

/// Central differences of a scalar function over every entry of `x`.
/// `x` is perturbed in place and restored.
template <typename Scalar, typename F>
Matrix<Scalar> numerical_gradient(Matrix<Scalar>& x, F&& f, Scalar step = Scalar(1e-5)) {
    Matrix<Scalar> out(x.rows(), x.cols());
    for (Index i = 0; i < x.size(); ++i) {
        const Scalar saved = x.data()[i];
        x.data()[i] = saved + step;
        const Scalar plus = f();
        x.data()[i] = saved - step;
        const Scalar minus = f();
        x.data()[i] = saved;
        out.data()[i] = (plus - minus) / (Scalar(2) * step);
    }
    return out;
}

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    double floor = 1e-6;
    /// Entries sampled per parameter tensor; 0 checks every entry.
    std::size_t samples_per_tensor = 0;
    std::uint64_t seed = 0;
};

struct GradCheckEntry {
    std::string parameter;
    Index row = 0;
    Index col = 0;
    double analytic = 0;
    double numeric = 0;
    double rel_error = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0;
    std::string worst;
    std::size_t tensors = 0;

    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

/// Compares backprop gradients of `loss_fn` against central differences for
/// each listed parameter. `loss_fn(Tape&)` must build the loss from scratch
/// on the given tape and be deterministic.
///
/// With sampling enabled, half the probes go to the entries with the largest
/// analytic gradient and the rest are drawn uniformly, so sparse gradients
/// (embedding tables) still get exercised where they are nonzero.
template <typename Scalar, typename LossFn>
GradCheckReport check_gradients(std::span<Parameter<Scalar>* const> params, LossFn&& loss_fn,
                                const GradCheckOptions& opts = {}) {
    for (auto* p : params) p->zero_grad();
    {
        Tape<Scalar> tape;
        Var<Scalar> loss = loss_fn(tape);
        tape.backward(loss);
    }
    auto eval = [&]() {
        Tape<Scalar> tape;
        return loss_fn(tape).value()(0, 0);
    };

    GradCheckReport report;
    std::mt19937_64 rng(opts.seed);
    const Scalar step = Scalar(opts.step);
    for (auto* p : params) {
        ++report.tensors;
        const Index n = p->value.size();
        std::vector<Index> probe;
        if (opts.samples_per_tensor == 0 || static_cast<std::size_t>(n) <= opts.samples_per_tensor) {
            probe.resize(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) probe[static_cast<std::size_t>(i)] = i;
        } else {
            std::vector<Index> order(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
            const std::size_t top = opts.samples_per_tensor / 2;
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                              [&](Index a, Index b) {
                                  return std::abs(p->grad.data()[a]) > std::abs(p->grad.data()[b]);
                              });
            probe.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
            std::uniform_int_distribution<Index> pick(0, n - 1);
            while (probe.size() < opts.samples_per_tensor) {
                const Index i = pick(rng);
                if (std::find(probe.begin(), probe.end(), i) == probe.end()) probe.push_back(i);
            }
        }
        for (Index i : probe) {
            Scalar& x = p->value.data()[i];
            const Scalar saved = x;
            x = saved + step;
            const Scalar plus = eval();
            x = saved - step;
            const Scalar minus = eval();
            x = saved;
            const double numeric = static_cast<double>((plus - minus) / (Scalar(2) * step));
            const double analytic = static_cast<double>(p->grad.data()[i]);
            GradCheckEntry e{p->name, i / p->value.cols(), i % p->value.cols(), analytic, numeric,
                             relative_error(analytic, numeric, opts.floor)};
            if (e.rel_error > report.max_rel_error || report.entries.empty()) {
                report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
                report.worst = e.parameter + "(" + std::to_string(e.row) + "," + std::to_string(e.col) + ")";
            }
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

}  // namespace wnduma

#endif  // WNDUMA_GRADCHECK_HPP
