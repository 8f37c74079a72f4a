#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sagnn/harness.hpp"

namespace h = sagnn::harness;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;
};

void add_common(CLI::App* app, Common& c, bool with_data = true) {
    app->add_option("--config", c.config, "Run configuration (JSON); defaults are used when omitted")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Override the seed used by this command");
    app->add_option("--out", c.out, "Output directory");
    if (with_data) app->add_option("--data", c.data, "Dataset directory (overrides data_dir)");
}

h::RunConfig resolve(const Common& c) {
    h::RunConfig cfg = c.config.empty() ? h::RunConfig{} : h::load_run_config(c.config);
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (!c.data.empty()) cfg.data_dir = c.data;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"State-augmented GNN link scheduling: data, training, evaluation, baselines, reports"};
    app.require_subcommand(1);
    app.fallthrough();  // -q may follow the subcommand
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress progress output");

    Common gen_c, train_c, eval_c, base_c;
    std::optional<std::size_t> train_count, test_count, n_min, n_max;

    auto* gen = app.add_subcommand("gen-data", "Generate training and test graphs");
    add_common(gen, gen_c, false);
    gen->add_option("--train-count", train_count, "Number of training graphs");
    gen->add_option("--test-count", test_count, "Number of test graphs");
    gen->add_option("--n-min", n_min, "Smallest agent count");
    gen->add_option("--n-max", n_max, "Largest agent count");

    auto* tr = app.add_subcommand("train", "Train the policy");
    add_common(tr, train_c);
    std::optional<std::size_t> epochs;
    tr->add_option("--epochs", epochs, "Training epochs");

    auto* ev = app.add_subcommand("eval", "Execute a checkpoint on the test graphs");
    add_common(ev, eval_c);
    std::string checkpoint;
    bool traces = false;
    ev->add_option("--checkpoint", checkpoint, "Parameter file")->required()->check(CLI::ExistingFile);
    ev->add_flag("--traces", traces, "Write per-step schedule and dual traces");

    auto* bl = app.add_subcommand("baseline", "Run heuristic baselines on the test graphs");
    add_common(bl, base_c);
    std::string kind = "all", variant = "all";
    bl->add_option("--kind", kind, "all | p_persistent | mis_random")->capture_default_str();
    bl->add_option("--variant", variant, "all | naive | ca")->capture_default_str();

    auto* rp = app.add_subcommand("report", "Build figure-feed CSVs from a metrics directory");
    std::string metrics_dir, report_out;
    std::size_t window = 5;
    rp->add_option("--metrics", metrics_dir, "Directory holding run outputs")->required();
    rp->add_option("--out", report_out, "Output directory (defaults to <metrics>/report)");
    rp->add_option("--window", window, "Running-average window")->capture_default_str();

    auto* pc = app.add_subcommand("print-config", "Print the effective configuration");
    Common print_c;
    add_common(pc, print_c);

    CLI11_PARSE(app, argc, argv);
    if (!quiet) h::set_log_stream(&std::cerr);

    try {
        if (*gen) {
            h::RunConfig cfg = resolve(gen_c);
            if (gen_c.seed) cfg.dataset.seed = *gen_c.seed;
            if (train_count) cfg.dataset.train_count = *train_count;
            if (test_count) cfg.dataset.test_count = *test_count;
            if (n_min) cfg.dataset.n_min = *n_min;
            if (n_max) cfg.dataset.n_max = *n_max;
            h::cmd_gen_data(cfg.dataset, gen_c.out.empty() ? cfg.data_dir : cfg.out_dir);
        } else if (*tr) {
            h::RunConfig cfg = resolve(train_c);
            if (train_c.seed) cfg.train.seed = *train_c.seed;
            if (epochs) cfg.train.epochs = *epochs;
            h::cmd_train(cfg);
        } else if (*ev) {
            h::RunConfig cfg = resolve(eval_c);
            if (traces) cfg.write_traces = true;
            h::cmd_eval(cfg, checkpoint);
        } else if (*bl) {
            h::RunConfig cfg = resolve(base_c);
            if (base_c.seed) cfg.baseline_seed = *base_c.seed;
            h::cmd_baseline(cfg, kind, variant);
        } else if (*rp) {
            const std::filesystem::path out = report_out.empty() ? std::filesystem::path(metrics_dir) / "report"
                                                                  : std::filesystem::path(report_out);
            for (const auto& p : h::cmd_report(metrics_dir, out, window)) std::cout << p.string() << "\n";
        } else if (*pc) {
            h::RunConfig cfg = resolve(print_c);
            if (print_c.seed) cfg.train.seed = *print_c.seed;
            std::cout << h::run_config_json(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
