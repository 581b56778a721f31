#pragma once

#include <span>
#include <string>
#include <vector>

#include "chanest/dataset.hpp"
#include "chanest/estimator.hpp"
#include "chanest/grid.hpp"
#include "chanest/retrain.hpp"
#include "chanest/uncertainty.hpp"

namespace chanest {

/// Mean over all entries of |a - b|^2.
double mse(const ComplexGrid& a, const ComplexGrid& b);

/// Sample Pearson correlation. Throws DegenerateInput when either sequence
/// is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct EvalResult {
    std::vector<double> baseline_mse;  // per example: mse(input, target)
    std::vector<double> nn_mse;        // per example: mse(prediction, target)
    std::vector<double> uncertainty;   // per example: MC scalar entropy
    double mean_baseline_mse = 0.0;
    double mean_nn_mse = 0.0;
    double pearson_uncertainty_error = 0.0;
    bool pearson_defined = false;
    McConfig mc;
};

/// Per-example baseline vs network MSE and MC-dropout uncertainty over a
/// test set. T = 1 reports zero uncertainty (flagged undefined pearson).
EvalResult evaluate(const ChannelEstimator& est, const Dataset& test_set,
                    const McConfig& mc);

/// Writes eval.csv (example,baseline_mse,nn_mse,uncertainty) and an SVG
/// scatter of uncertainty vs squared error. Deterministic bytes.
void emit_eval_report(const EvalResult& result, const std::string& out_dir);

/// Writes iterations.csv and an SVG line plot of MSE per iteration.
void emit_iteration_report(std::span<const IterationRecord> records,
                           const std::string& out_dir);

}  // namespace chanest
