#include "chanest/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "chanest/errors.hpp"
#include "chanest/parallel.hpp"
#include "chanest/rng.hpp"

namespace chanest {

McPrediction mc_predict(const NeuralNet<float>& net, const Tensor3f& input,
                        const McConfig& cfg) {
    if (cfg.num_passes < 1) throw InvalidParameter("mc_predict: num_passes must be >= 1");

    const std::size_t T = static_cast<std::size_t>(cfg.num_passes);
    McPrediction pred;
    pred.samples.resize(T);
    parallel_for(T, [&](std::size_t i) {
        pred.samples[i] =
            net.forward(input, /*dropout_active=*/true, derive_seed(cfg.base_seed, i));
    });

    const Tensor3f& first = pred.samples.front();
    pred.mean = Tensor3d(first.c, first.h, first.w);
    pred.variance = Tensor3d(first.c, first.h, first.w);
    const std::size_t n = pred.mean.numel();

    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t p = 0; p < n; ++p)
            pred.mean.v[p] += static_cast<double>(pred.samples[i].v[p]);
    for (std::size_t p = 0; p < n; ++p) pred.mean.v[p] /= static_cast<double>(T);

    pred.variance_defined = T >= 2;
    if (pred.variance_defined) {
        for (std::size_t p = 0; p < n; ++p) {
            float lo = pred.samples[0].v[p], hi = lo;
            for (std::size_t i = 1; i < T; ++i) {
                lo = std::min(lo, pred.samples[i].v[p]);
                hi = std::max(hi, pred.samples[i].v[p]);
            }
            if (lo == hi) {
                pred.variance.v[p] = 0.0;  // exact for constant samples
                continue;
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < T; ++i) {
                const double d = static_cast<double>(pred.samples[i].v[p]) - pred.mean.v[p];
                acc += d * d;
            }
            pred.variance.v[p] = acc / static_cast<double>(T - 1);
        }
    }
    return pred;
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2)
        throw InsufficientSamples("sample_variance: need at least 2 values");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) return 0.0;

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(values.size() - 1);
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidParameter("inverse_normal_cdf: p must be in (0, 1)");

    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425, p_high = 1.0 - p_low;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= p_high) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the exact CDF.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

double ci_halfwidth(double sample_std, std::size_t num_samples, double alpha) {
    if (num_samples < 2) throw InsufficientSamples("ci_halfwidth: need T >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidParameter("ci_halfwidth: alpha must be in (0, 1)");
    const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    return z * sample_std / std::sqrt(static_cast<double>(num_samples));
}

std::pair<double, double> confidence_interval(std::span<const double> values,
                                              double alpha) {
    if (values.size() < 2)
        throw InsufficientSamples("confidence_interval: need at least 2 values");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidParameter("confidence_interval: alpha must be in (0, 1)");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    const double hw =
        ci_halfwidth(std::sqrt(sample_variance(values)), values.size(), alpha);
    return {mean - hw, mean + hw};
}

double predictive_entropy(std::span<const double> probs) {
    if (probs.empty()) throw InvalidDistribution("predictive_entropy: empty distribution");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw InvalidDistribution("predictive_entropy: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidDistribution("predictive_entropy: probabilities must sum to 1");

    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

UncertaintySummary summarize(const McPrediction& pred, double alpha) {
    if (!pred.variance_defined)
        throw InsufficientSamples("summarize: variance requires T >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidParameter("summarize: alpha must be in (0, 1)");

    const std::size_t n = pred.variance.numel();
    const std::size_t T = pred.samples.size();
    const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    const double inv_sqrt_t = 1.0 / std::sqrt(static_cast<double>(T));

    UncertaintySummary s;
    s.ci_halfwidth = Tensor3d(pred.variance.c, pred.variance.h, pred.variance.w);
    double var_acc = 0.0, ent_acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double var = pred.variance.v[p];
        var_acc += var;
        ent_acc += 0.5 * std::log(2.0 * M_PI * M_E * (var + kEntropyVarianceFloor));
        s.ci_halfwidth.v[p] = z * std::sqrt(var) * inv_sqrt_t;
    }
    s.scalar_variance = var_acc / static_cast<double>(n);
    s.scalar_entropy = ent_acc / static_cast<double>(n);
    return s;
}

}  // namespace chanest
