// chanest: 5G channel-estimation workbench CLI.
//
// Subcommands mirror the experiment lifecycle:
//   generate  - simulate a fading-channel dataset to a directory
//   train     - fit the dropout CNN estimator on a dataset
//   retrain   - uncertainty-aware adversarial retraining loop
//   evaluate  - baseline vs network MSE + uncertainty report
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "chanest/dataset.hpp"
#include "chanest/errors.hpp"
#include "chanest/estimator.hpp"
#include "chanest/nn.hpp"
#include "chanest/parallel.hpp"
#include "chanest/report.hpp"
#include "chanest/retrain.hpp"
#include "chanest/rng.hpp"
#include "chanest/train.hpp"
#include "chanest/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace chanest;

namespace {

struct RangeFlag {
    double lo = 0.0, hi = 0.0;
};

/// Parses "LO:HI" (or a single value meaning a degenerate range).
RangeFlag parse_range(const std::string& s) {
    RangeFlag r;
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) {
            r.lo = r.hi = std::stod(s);
        } else {
            r.lo = std::stod(s.substr(0, colon));
            r.hi = std::stod(s.substr(colon + 1));
        }
    } catch (const std::exception&) {
        throw CLI::ValidationError("range", "expected LO:HI, got '" + s + "'");
    }
    if (r.hi < r.lo) throw CLI::ValidationError("range", "LO must not exceed HI");
    return r;
}

std::uint64_t env_seed_default() {
    if (const char* env = std::getenv("CHANEST_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

void atomic_write_text(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string train_report_csv(const TrainReport& report) {
    std::ostringstream csv;
    csv << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
        csv << (e + 1) << ',' << fmt_double(report.train_loss[e]) << ','
            << fmt_double(report.val_loss[e]) << '\n';
    }
    return csv.str();
}

struct GenerateArgs {
    std::string out;
    DatasetSpec spec;
    std::string snr_range, delay_range, doppler_range;
};

int run_generate(GenerateArgs& args, std::uint64_t seed) {
    args.spec.master_seed = seed;
    args.spec.pilots.seed = derive_seed(seed, 0x70696c6full);
    if (!args.snr_range.empty()) {
        RangeFlag r = parse_range(args.snr_range);
        args.spec.snr_db_min = r.lo;
        args.spec.snr_db_max = r.hi;
    }
    if (!args.delay_range.empty()) {
        RangeFlag r = parse_range(args.delay_range);
        args.spec.delay_spread_ns_min = r.lo;
        args.spec.delay_spread_ns_max = r.hi;
    }
    if (!args.doppler_range.empty()) {
        RangeFlag r = parse_range(args.doppler_range);
        args.spec.doppler_hz_min = r.lo;
        args.spec.doppler_hz_max = r.hi;
    }
    args.spec.validate();

    Dataset ds = generate_dataset(args.spec);
    save_dataset(ds, args.out);

    std::cout << "dataset: " << args.out << "\n"
              << "  examples:        " << ds.size() << "\n"
              << "  grid:            " << ds.examples.front().input.rows() << " x "
              << ds.examples.front().input.cols() << "\n"
              << "  delay spread ns: [" << args.spec.delay_spread_ns_min << ", "
              << args.spec.delay_spread_ns_max << "]\n"
              << "  doppler Hz:      [" << args.spec.doppler_hz_min << ", "
              << args.spec.doppler_hz_max << "]\n"
              << "  snr dB:          [" << args.spec.snr_db_min << ", "
              << args.spec.snr_db_max << "]\n"
              << "  master seed:     " << args.spec.master_seed << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, out;
    std::string arch = kDefaultArch;
    TrainConfig cfg;
    double train_fraction = 0.8;
};

int run_train(TrainArgs& args, std::uint64_t seed) {
    args.cfg.seed = seed;
    args.cfg.validate();

    Dataset ds = load_dataset(args.data);
    auto [train_set, val_set] = split(ds, args.train_fraction, seed);

    std::cout << "training: " << train_set.size() << " train / " << val_set.size()
              << " val examples, lr " << args.cfg.learning_rate << ", batch "
              << args.cfg.batch_size << ", max epochs " << args.cfg.max_epochs
              << ", patience " << args.cfg.early_stop_patience << "\n";

    ChannelEstimator est = make_estimator(args.arch, train_set, seed);
    est.train_config = args.cfg;
    const std::vector<Sample> tr = make_samples(train_set, est.norm_sigma);
    const std::vector<Sample> va = make_samples(val_set, est.norm_sigma);
    TrainReport report = train_network(est.net, tr, va, args.cfg);

    fs::create_directories(args.out);
    save_checkpoint((fs::path(args.out) / "model.nnck").string(), est);
    atomic_write_text(fs::path(args.out) / "train_report.csv", train_report_csv(report));

    std::cout << "stopped at epoch " << report.stopped_epoch << " (best epoch "
              << report.best_epoch << ", val loss " << fmt_double(report.best_val_loss)
              << "), wall " << fmt_double(report.wall_seconds) << "s\n"
              << "wrote " << (fs::path(args.out) / "model.nnck").string() << "\n";
    return 0;
}

struct RetrainArgs {
    std::string data, model, out;
    RetrainConfig cfg;
    McConfig mc;
    std::string mode = "adversarial";
    double train_fraction = 0.8;
};

int run_retrain(RetrainArgs& args, std::uint64_t seed) {
    if (args.mode == "adversarial") {
        args.cfg.mode = AugmentationMode::AdversarialOnly;
    } else if (args.mode == "literal") {
        args.cfg.mode = AugmentationMode::LiteralUnion;
    } else {
        throw CLI::ValidationError("--mode", "must be 'adversarial' or 'literal'");
    }
    args.cfg.train.seed = seed;
    args.mc.base_seed = derive_seed(seed, 0x6d63ull);  // "mc"
    args.cfg.validate();

    Dataset ds = load_dataset(args.data);
    auto [train_set, val_set] = split(ds, args.train_fraction, seed);
    ChannelEstimator est = load_checkpoint(args.model);

    std::cout << "retraining: " << args.cfg.max_iterations << " max iterations, "
              << "fraction " << args.cfg.uncertain_fraction << ", mode " << args.mode
              << ", mc passes " << args.mc.num_passes << "\n";

    RetrainResult result = retrain_loop(est, train_set, val_set, args.cfg, args.mc);

    fs::create_directories(args.out);
    save_checkpoint((fs::path(args.out) / "model.nnck").string(), result.estimator);
    emit_iteration_report(result.records, args.out);

    for (const IterationRecord& r : result.records) {
        std::cout << "  iteration " << r.iteration << ": val mse "
                  << fmt_double(r.val_mse_before) << " -> " << fmt_double(r.val_mse_after)
                  << ", selected " << r.num_selected << "\n";
    }
    std::cout << "wrote " << (fs::path(args.out) / "iterations.csv").string() << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string data, model, out;
    int num_examples = 64;
    McConfig mc;
};

int run_evaluate(EvaluateArgs& args, std::uint64_t seed) {
    Dataset ds = load_dataset(args.data);
    ChannelEstimator est = load_checkpoint(args.model);

    // Fresh held-out set drawn from the dataset's spec with a separate seed
    // stream, so it never overlaps the training examples.
    DatasetSpec test_spec = ds.spec;
    test_spec.num_examples = args.num_examples;
    test_spec.master_seed = derive_seed(seed, 0x74657374ull);  // "test"
    Dataset test_set = generate_dataset(test_spec);

    if (args.mc.num_passes < 2)
        std::cout << "warning: --mc-passes < 2, uncertainty column will be all zeros\n";

    EvalResult result = evaluate(est, test_set, args.mc);
    emit_eval_report(result, args.out);

    std::cout << "evaluated " << test_set.size() << " held-out examples\n"
              << "  mean baseline mse: " << fmt_double(result.mean_baseline_mse) << "\n"
              << "  mean nn mse:       " << fmt_double(result.mean_nn_mse) << "\n";
    if (result.pearson_defined)
        std::cout << "  pearson(uncertainty, nn error): "
                  << fmt_double(result.pearson_uncertainty_error) << "\n";
    std::cout << "wrote " << (fs::path(args.out) / "eval.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"5G OFDM channel-estimation workbench"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = env_seed_default();
    app.add_option("--seed", seed, "Master seed (env CHANEST_SEED)")
        ->capture_default_str();
    int threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (0 = hardware)")
        ->capture_default_str();

    GenerateArgs gen;
    CLI::App* cgen = app.add_subcommand("generate", "Generate a channel dataset");
    cgen->add_option("--out", gen.out, "Output dataset directory")->required();
    cgen->add_option("--num-examples", gen.spec.num_examples, "Number of examples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cgen->add_option("--snr-range", gen.snr_range, "SNR range LO:HI in dB [0:10]");
    cgen->add_option("--delay-spread", gen.delay_range,
                     "Delay spread range LO:HI in ns [1:300]");
    cgen->add_option("--doppler", gen.doppler_range,
                     "Max Doppler range LO:HI in Hz [5:400]");

    TrainArgs tr;
    CLI::App* ctrain = app.add_subcommand("train", "Train the CNN estimator");
    ctrain->add_option("--data", tr.data, "Dataset directory")->required();
    ctrain->add_option("--out", tr.out, "Output directory for model + report")
        ->required();
    ctrain->add_option("--arch", tr.arch, "Layer stack")->capture_default_str();
    ctrain->add_option("--lr", tr.cfg.learning_rate, "Learning rate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ctrain->add_option("--batch-size", tr.cfg.batch_size, "Minibatch size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ctrain->add_option("--max-epochs", tr.cfg.max_epochs, "Epoch cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ctrain->add_option("--patience", tr.cfg.early_stop_patience,
                       "Early-stopping patience in epochs")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    RetrainArgs rt;
    CLI::App* cretrain =
        app.add_subcommand("retrain", "Uncertainty-aware adversarial retraining");
    cretrain->add_option("--data", rt.data, "Dataset directory")->required();
    cretrain->add_option("--model", rt.model, "Initial checkpoint (model.nnck)")
        ->required();
    cretrain->add_option("--out", rt.out, "Output directory")->required();
    cretrain->add_option("--max-iterations", rt.cfg.max_iterations, "Loop bound")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cretrain->add_option("--tolerance", rt.cfg.tolerance, "Validation MSE stop threshold")
        ->capture_default_str();
    cretrain->add_option("--fraction", rt.cfg.uncertain_fraction,
                         "Fraction of most-uncertain validation examples")
        ->capture_default_str();
    cretrain->add_option("--fgsm-epsilon", rt.cfg.fgsm_epsilon,
                         "FGSM perturbation (< 0 = 0.05 x input std)")
        ->capture_default_str();
    cretrain->add_option("--mode", rt.mode, "'adversarial' (D u A) or 'literal' (D u V)")
        ->capture_default_str();
    cretrain->add_option("--max-epochs", rt.cfg.train.max_epochs,
                         "Per-iteration epoch cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cretrain->add_option("--patience", rt.cfg.train.early_stop_patience,
                         "Per-iteration early-stopping patience")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cretrain->add_option("--mc-passes", rt.mc.num_passes, "MC dropout passes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cretrain->add_option("--alpha", rt.mc.alpha, "CI level")->capture_default_str();

    EvaluateArgs ev;
    CLI::App* ceval = app.add_subcommand("evaluate", "Evaluate on a fresh held-out set");
    ceval->add_option("--data", ev.data, "Dataset directory (for its spec)")->required();
    ceval->add_option("--model", ev.model, "Checkpoint (model.nnck)")->required();
    ceval->add_option("--out", ev.out, "Output directory")->required();
    ceval->add_option("--num-examples", ev.num_examples, "Held-out set size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ceval->add_option("--mc-passes", ev.mc.num_passes, "MC dropout passes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ceval->add_option("--alpha", ev.mc.alpha, "CI level")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    set_max_threads(threads);
    try {
        if (cgen->parsed()) return run_generate(gen, seed);
        if (ctrain->parsed()) return run_train(tr, seed);
        if (cretrain->parsed()) return run_retrain(rt, seed);
        if (ceval->parsed()) return run_evaluate(ev, seed);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
