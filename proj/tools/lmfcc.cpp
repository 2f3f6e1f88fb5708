// lmfcc: preprocess | train | eval | ablation | export-embeddings

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lmfcc/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Learnable-MFCC anomaly detection for network flow records"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir, model_path, data_path, dump_spec;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override train.seed");
        sub->add_option("--out", out_dir, "override output.dir");
    };

    auto* preprocess = app.add_subcommand("preprocess", "clean, encode, split and normalize a dataset");
    auto* train = app.add_subcommand("train", "train a model on the preprocessed splits");
    auto* eval = app.add_subcommand("eval", "score a preprocessed dataset with a trained model");
    auto* ablation = app.add_subcommand("ablation", "train with and without the MFCC front end and compare F1");
    auto* exporter = app.add_subcommand("export-embeddings", "write encoder embeddings for external visualization");
    for (auto* sub : {preprocess, train, eval, ablation, exporter}) add_common(sub);
    for (auto* sub : {eval, exporter}) {
        sub->add_option("--model", model_path, "model file (default <out>/model.bin)");
        sub->add_option("--data", data_path, "preprocessed dataset (default <out>/test.csv)");
    }
    train->add_option("--dump-spectrogram", dump_spec, "write the first training record's spectrogram as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : lmfcc::cli::kConfigError;
    }

    lmfcc::cli::Overrides o;
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--out")) o.out_dir = out_dir;
        if (sub->get_option_no_throw("--model") && sub->count("--model")) o.model_path = model_path;
        if (sub->get_option_no_throw("--data") && sub->count("--data")) o.data_path = data_path;
        if (sub->get_option_no_throw("--dump-spectrogram") && sub->count("--dump-spectrogram"))
            o.dump_spectrogram = dump_spec;
    }

    if (*preprocess) return lmfcc::cli::cmd_preprocess(config_path, o);
    if (*train) return lmfcc::cli::cmd_train(config_path, o);
    if (*eval) return lmfcc::cli::cmd_eval(config_path, o);
    if (*ablation) return lmfcc::cli::cmd_ablation(config_path, o);
    if (*exporter) return lmfcc::cli::cmd_export_embeddings(config_path, o);
    return lmfcc::cli::kConfigError;
}
