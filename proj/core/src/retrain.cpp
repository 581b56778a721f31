#include "chanest/retrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chanest/errors.hpp"
#include "chanest/parallel.hpp"
#include "chanest/report.hpp"
#include "chanest/rng.hpp"

namespace chanest {

void RetrainConfig::validate() const {
    if (max_iterations < 1) throw InvalidParameter("max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw InvalidParameter("tolerance must be positive");
    if (!(uncertain_fraction > 0.0 && uncertain_fraction <= 1.0))
        throw InvalidParameter("uncertain_fraction must be in (0, 1]");
    train.validate();
}

std::vector<double> score_uncertainty(const ChannelEstimator& est, const Dataset& ds,
                                      const McConfig& mc) {
    if (ds.empty()) throw InvalidParameter("score_uncertainty: empty dataset");
    std::vector<double> scores(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        McConfig per = mc;
        per.base_seed = derive_seed(mc.base_seed, i);
        McPrediction pred = mc_predict(est.net, est.normalize(ds.examples[i].input), per);
        scores[i] = summarize(pred, mc.alpha).scalar_entropy;
    });
    return scores;
}

std::vector<int> select_uncertain(std::span<const double> scores, double fraction) {
    if (scores.empty()) throw InvalidParameter("select_uncertain: empty scores");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InvalidParameter("select_uncertain: fraction must be in (0, 1]");

    const std::size_t k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(scores.size())));
    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Ties break toward the lower index.
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

DatasetExample fgsm_perturb(const ChannelEstimator& est, const DatasetExample& example,
                            double epsilon) {
    if (epsilon < 0.0) throw InvalidParameter("fgsm_perturb: epsilon must be >= 0");

    // sign(dL/dx) is invariant to the positive normalization scale, so the
    // gradient computed in normalized space serves the raw grid directly.
    BackwardResult<float> back =
        est.net.backward(est.normalize(example.input), est.normalize(example.target),
                         /*dropout_active=*/false, 0);

    DatasetExample out = example;
    out.meta.adversarial = true;
    auto& data = out.input.data();
    const std::size_t plane = data.size();
    for (std::size_t i = 0; i < plane; ++i) {
        const float gr = back.input_grad.v[i];
        const float gi = back.input_grad.v[plane + i];
        const double dr = gr > 0 ? epsilon : (gr < 0 ? -epsilon : 0.0);
        const double di = gi > 0 ? epsilon : (gi < 0 ? -epsilon : 0.0);
        data[i] += cd(dr, di);
    }
    return out;
}

double validation_mse(const ChannelEstimator& est, const Dataset& ds) {
    if (ds.empty()) throw InvalidParameter("validation_mse: empty dataset");
    std::vector<double> per(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        per[i] = mse(est.estimate(ds.examples[i].input), ds.examples[i].target);
    });
    double acc = 0.0;
    for (double v : per) acc += v;
    return acc / static_cast<double>(ds.size());
}

RetrainResult retrain_loop(ChannelEstimator est, const Dataset& train_set,
                           const Dataset& val_set, const RetrainConfig& cfg,
                           const McConfig& mc) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw InvalidParameter("retrain_loop: empty dataset");

    double eps = cfg.fgsm_epsilon;
    if (eps < 0.0) eps = 0.05 * est.norm_sigma;  // 0.05 x input std

    const std::vector<Sample> base_samples = make_samples(train_set, est.norm_sigma);
    const std::vector<Sample> val_samples = make_samples(val_set, est.norm_sigma);

    RetrainResult result;
    for (int t = 1; t <= cfg.max_iterations; ++t) {
        IterationRecord rec;
        rec.iteration = t;
        rec.val_mse_before = validation_mse(est, val_set);

        McConfig iter_mc = mc;
        iter_mc.base_seed = derive_seed(mc.base_seed, static_cast<std::uint64_t>(t));
        const std::vector<double> scores = score_uncertainty(est, val_set, iter_mc);
        rec.mean_uncertainty_before =
            std::accumulate(scores.begin(), scores.end(), 0.0) /
            static_cast<double>(scores.size());

        rec.selected = select_uncertain(scores, cfg.uncertain_fraction);
        rec.num_selected = static_cast<int>(rec.selected.size());

        // Fresh augmentation set each iteration; the base training set is
        // never mutated.
        std::vector<Sample> samples = base_samples;
        if (cfg.mode == AugmentationMode::AdversarialOnly) {
            std::vector<DatasetExample> adv(rec.selected.size());
            parallel_for(rec.selected.size(), [&](std::size_t i) {
                adv[i] = fgsm_perturb(est, val_set.examples[rec.selected[i]], eps);
            });
            for (const DatasetExample& ex : adv) {
                Sample s{est.normalize(ex.input), est.normalize(ex.target)};
                samples.push_back(std::move(s));
            }
        } else {
            samples.insert(samples.end(), val_samples.begin(), val_samples.end());
        }
        rec.train_set_size = static_cast<int>(samples.size());

        TrainConfig iter_train = cfg.train;
        iter_train.seed = derive_seed(cfg.train.seed, static_cast<std::uint64_t>(t));
        train_network(est.net, samples, val_samples, iter_train);

        rec.val_mse_after = validation_mse(est, val_set);
        McConfig after_mc = mc;
        after_mc.base_seed =
            derive_seed(mc.base_seed, 0x10000u + static_cast<std::uint64_t>(t));
        const std::vector<double> after = score_uncertainty(est, val_set, after_mc);
        rec.mean_uncertainty_after =
            std::accumulate(after.begin(), after.end(), 0.0) /
            static_cast<double>(after.size());

        result.records.push_back(std::move(rec));
        if (result.records.back().val_mse_after < cfg.tolerance) break;
    }
    result.estimator = std::move(est);
    return result;
}

}  // namespace chanest
