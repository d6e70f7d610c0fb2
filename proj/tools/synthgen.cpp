// Generates the self-contained synthetic benchmark: passages, sessions,
// generation fixtures, qrels, dense vectors, and a ready pipeline config.

#include <iostream>

#include <CLI11.hpp>

#include "bon/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Synthetic conversational-search benchmark generator"};

    bon::SynthConfig config;
    std::string out_dir = "synth";
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", config.seed, "Generator seed");
    app.add_option("--passages", config.passage_count, "Corpus size");
    app.add_option("--train-sessions", config.train_sessions, "Training sessions");
    app.add_option("--eval-sessions", config.eval_sessions, "Evaluation sessions");
    app.add_option("--pool-size", config.pool_size, "Candidates per session");
    app.add_option("--p-top", config.p_top, "Probability of a full-topic candidate");
    app.add_option("--p-mid", config.p_mid, "Probability of a partial-topic candidate");

    CLI11_PARSE(app, argc, argv);

    try {
        bon::SynthDataset dataset = bon::make_synth_dataset(config);
        bon::write_synth_dataset(dataset, config, out_dir);
        std::cerr << "wrote " << dataset.passages.size() << " passages, "
                  << dataset.train_sessions.size() << "+" << dataset.eval_sessions.size()
                  << " sessions into " << out_dir << "\n"
                  << "next: bon pipeline --config " << out_dir << "/pipeline.json\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
