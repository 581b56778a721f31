#include "chanest/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chanest/errors.hpp"
#include "chanest/parallel.hpp"
#include "chanest/rng.hpp"

namespace fs = std::filesystem;

namespace chanest {

double mse(const ComplexGrid& a, const ComplexGrid& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mse: shape mismatch");
    if (a.size() == 0) throw ShapeMismatch("mse: empty grids");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a.data()[i] - b.data()[i]);
    return acc / static_cast<double>(a.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeMismatch("pearson: length mismatch");
    if (x.size() < 2) throw InvalidParameter("pearson: need at least 2 points");

    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInput("pearson: constant input sequence");
    return sxy / std::sqrt(sxx * syy);
}

EvalResult evaluate(const ChannelEstimator& est, const Dataset& test_set,
                    const McConfig& mc) {
    if (test_set.empty()) throw InvalidParameter("evaluate: empty test set");

    const std::size_t n = test_set.size();
    EvalResult res;
    res.mc = mc;
    res.baseline_mse.resize(n);
    res.nn_mse.resize(n);
    res.uncertainty.resize(n);

    parallel_for(n, [&](std::size_t i) {
        const DatasetExample& ex = test_set.examples[i];
        res.baseline_mse[i] = mse(ex.input, ex.target);
        res.nn_mse[i] = mse(est.estimate(ex.input), ex.target);
        if (mc.num_passes >= 2) {
            McConfig per = mc;
            per.base_seed = derive_seed(mc.base_seed, i);
            McPrediction pred = mc_predict(est.net, est.normalize(ex.input), per);
            res.uncertainty[i] = summarize(pred, mc.alpha).scalar_entropy;
        } else {
            res.uncertainty[i] = 0.0;
        }
    });

    for (std::size_t i = 0; i < n; ++i) {
        res.mean_baseline_mse += res.baseline_mse[i];
        res.mean_nn_mse += res.nn_mse[i];
    }
    res.mean_baseline_mse /= static_cast<double>(n);
    res.mean_nn_mse /= static_cast<double>(n);

    try {
        res.pearson_uncertainty_error = pearson(res.uncertainty, res.nn_mse);
        res.pearson_defined = true;
    } catch (const Error&) {
        res.pearson_uncertainty_error = 0.0;
        res.pearson_defined = false;
    }
    return res;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct SvgCanvas {
    std::ostringstream out;
    double width, height;

    SvgCanvas(double w, double h) : width(w), height(h) {
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
            << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
            << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const char* color,
              double sw = 1.0) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                      "stroke=\"%s\" stroke-width=\"%.2f\"/>\n",
                      x1, y1, x2, y2, color, sw);
        out << buf;
    }

    void circle(double x, double y, double r, const char* color) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n", x, y,
                      r, color);
        out << buf;
    }

    void text(double x, double y, const std::string& s, int size = 12,
              const char* anchor = "start") {
        char buf[320];
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" "
                      "font-size=\"%d\" text-anchor=\"%s\">%s</text>\n",
                      x, y, size, anchor, s.c_str());
        out << buf;
    }

    std::string finish() {
        out << "</svg>\n";
        return out.str();
    }
};

struct AxisMap {
    double lo, hi, plot_lo, plot_hi;
    double operator()(double v) const {
        if (hi == lo) return 0.5 * (plot_lo + plot_hi);
        return plot_lo + (v - lo) / (hi - lo) * (plot_hi - plot_lo);
    }
};

}  // namespace

void emit_eval_report(const EvalResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "example,baseline_mse,nn_mse,uncertainty\n";
    for (std::size_t i = 0; i < result.nn_mse.size(); ++i) {
        csv << i << ',' << fmt(result.baseline_mse[i]) << ',' << fmt(result.nn_mse[i])
            << ',' << fmt(result.uncertainty[i]) << '\n';
    }

    // Scatter: uncertainty (x) vs per-example squared error (y).
    const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    SvgCanvas svg(W, H);
    auto [ulo_it, uhi_it] =
        std::minmax_element(result.uncertainty.begin(), result.uncertainty.end());
    auto [elo_it, ehi_it] = std::minmax_element(result.nn_mse.begin(), result.nn_mse.end());
    AxisMap xmap{*ulo_it, *uhi_it, ml, W - mr};
    AxisMap ymap{*elo_it, *ehi_it, H - mb, mt};

    svg.line(ml, H - mb, W - mr, H - mb, "black");
    svg.line(ml, H - mb, ml, mt, "black");
    svg.text(W / 2, H - 12, "uncertainty (mean predictive entropy)", 12, "middle");
    svg.text(16, mt - 10, "squared error");
    svg.text(W / 2, 20, "Uncertainty vs squared error", 14, "middle");
    svg.text(ml, H - mb + 16, fmt(*ulo_it), 10);
    svg.text(W - mr, H - mb + 16, fmt(*uhi_it), 10, "end");
    svg.text(ml - 4, H - mb, fmt(*elo_it), 10, "end");
    svg.text(ml - 4, mt + 4, fmt(*ehi_it), 10, "end");
    for (std::size_t i = 0; i < result.nn_mse.size(); ++i)
        svg.circle(xmap(result.uncertainty[i]), ymap(result.nn_mse[i]), 3.0, "#1f77b4");

    atomic_write(fs::path(out_dir) / "eval.csv", csv.str());
    atomic_write(fs::path(out_dir) / "uncertainty_scatter.svg", svg.finish());
}

void emit_iteration_report(std::span<const IterationRecord> records,
                           const std::string& out_dir) {
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "iteration,val_mse_before,val_mse_after,mean_uncertainty_before,"
           "mean_uncertainty_after,num_selected,trainset_size\n";
    for (const IterationRecord& r : records) {
        csv << r.iteration << ',' << fmt(r.val_mse_before) << ',' << fmt(r.val_mse_after)
            << ',' << fmt(r.mean_uncertainty_before) << ','
            << fmt(r.mean_uncertainty_after) << ',' << r.num_selected << ','
            << r.train_set_size << '\n';
    }

    const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    SvgCanvas svg(W, H);
    double lo = 0.0, hi = 1.0;
    if (!records.empty()) {
        lo = records[0].val_mse_after;
        hi = records[0].val_mse_before;
        for (const IterationRecord& r : records) {
            lo = std::min({lo, r.val_mse_before, r.val_mse_after});
            hi = std::max({hi, r.val_mse_before, r.val_mse_after});
        }
    }
    AxisMap xmap{0.0, static_cast<double>(records.empty() ? 1 : records.size()), ml,
                 W - mr};
    AxisMap ymap{lo, hi, H - mb, mt};

    svg.line(ml, H - mb, W - mr, H - mb, "black");
    svg.line(ml, H - mb, ml, mt, "black");
    svg.text(W / 2, H - 12, "iteration", 12, "middle");
    svg.text(16, mt - 10, "validation MSE");
    svg.text(W / 2, 20, "Validation MSE per retraining iteration", 14, "middle");
    svg.text(ml - 4, H - mb, fmt(lo), 10, "end");
    svg.text(ml - 4, mt + 4, fmt(hi), 10, "end");

    // Polyline through (0, before_1), (1, after_1), (2, after_2), ...
    if (!records.empty()) {
        double px = xmap(0.0), py = ymap(records[0].val_mse_before);
        svg.circle(px, py, 3.0, "#d62728");
        for (std::size_t i = 0; i < records.size(); ++i) {
            const double x = xmap(static_cast<double>(i + 1));
            const double y = ymap(records[i].val_mse_after);
            svg.line(px, py, x, y, "#d62728", 1.5);
            svg.circle(x, y, 3.0, "#d62728");
            px = x;
            py = y;
        }
    }

    atomic_write(fs::path(out_dir) / "iterations.csv", csv.str());
    atomic_write(fs::path(out_dir) / "mse_iterations.svg", svg.finish());
}

}  // namespace chanest
