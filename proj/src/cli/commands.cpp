#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wnduma/checkpoint.hpp"
#include "wnduma/cli.hpp"
#include "wnduma/synthetic.hpp"
#include "wnduma/verify.hpp"

namespace wnduma::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string number(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

json meta_line(const CliConfig& config, json extra = json::object()) {
    extra["config"] = json::parse(effective_json(config));
    return json{{"_meta", extra}};
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(path.string(), 0, "cannot open for writing");
    f << text;
    if (!f) throw ParseError(path.string(), 0, "write failed");
}

std::vector<data::Instance> load_split(const CliConfig& config, const std::string& file) {
    return data::load_jsonl(config.data_path(file));
}

std::string split_file(const CliConfig& config, const std::string& split) {
    if (split == "train") return config.train_file;
    if (split == "dev") return config.dev_file;
    if (split == "test") return config.test_file;
    throw ConfigError("unknown split '" + split + "' (expected train, dev or test)");
}

fs::path checkpoint_path(const CliConfig& config, std::uint64_t seed, bool many) {
    std::string name = config.checkpoint.empty() ? "model_seed{seed}.ckpt" : config.checkpoint;
    const auto at = name.find("{seed}");
    if (at != std::string::npos) {
        name.replace(at, 6, std::to_string(seed));
    } else if (many) {
        const fs::path p(name);
        name = (p.parent_path() / (p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string()))
                   .string();
    }
    return config.out_path(name);
}

fs::path require_checkpoint(const CliConfig& config) {
    if (config.checkpoint.empty()) throw ConfigError("a checkpoint is required (--checkpoint PATH)");
    const fs::path p(config.checkpoint);
    return p;
}

int cmd_stats(const CliConfig& config, std::vector<std::string> files, const std::string& csv, std::ostream& out) {
    if (files.empty())
        for (const char* split : {"train", "dev", "test"})
            files.push_back(config.data_path(split_file(config, split)).string());
    std::vector<std::string> names;
    std::vector<data::DatasetStats> stats;
    for (const auto& f : files) {
        const auto instances = data::load_jsonl(f);
        names.push_back(fs::path(f).stem().string());
        stats.push_back(data::dataset_stats(instances));
    }
    out << data::format_stats_table(names, stats);
    if (!csv.empty()) {
        std::string text = "# config: " + effective_json(config) + "\n";
        write_text(config.out_path(csv), text + data::format_stats_csv(names, stats));
    }
    return kOk;
}

int cmd_enrich(const CliConfig& config, const std::string& input, std::string output, std::ostream& out) {
    if (config.wordnet_dir.empty())
        throw ConfigError("invalid configuration (1 problem):\n  wordnet.dir: not set (use --wordnet-dir or WNSEARCHDIR)");
    const wordnet::WordNet wn = wordnet::WordNet::load(config.wordnet_dir);
    auto instances = data::load_jsonl(input);
    std::string text = meta_line(config, {{"input", input}}).dump() + "\n";
    std::size_t with_definitions = 0;
    for (auto& inst : instances) {
        wordnet::enrich_instance(inst, wn, config.enrich);
        for (const auto& d : inst.definitions) with_definitions += d.empty() ? 0 : 1;
        text += data::to_json_line(inst) + "\n";
    }
    if (output.empty()) output = config.out_path(fs::path(input).stem().string() + ".enriched.jsonl").string();
    write_text(output, text);
    out << "enriched " << instances.size() << " instances (" << with_definitions << " of "
        << instances.size() * data::kNumOptions << " candidates have definitions) -> " << output << "\n";
    return kOk;
}

int cmd_train(const CliConfig& config, std::ostream& out) {
    const auto train_set = load_split(config, config.train_file);
    const auto dev_set = load_split(config, config.dev_file);
    const auto vocab = data::Vocabulary::build(train_set, config.min_freq, config.use_definitions);
    const auto train_enc = data::encode_all(train_set, vocab, config.max_seq_len, config.use_definitions);
    const auto dev_enc = data::encode_all(dev_set, vocab, config.max_seq_len, config.use_definitions);
    const ModelConfig shape = config.model_for(vocab.size(), static_cast<Index>(config.max_seq_len));
    const std::string config_json = effective_json(config);
    const bool many = config.train.seeds.size() > 1;

    out << "train " << train_set.size() << " / dev " << dev_set.size() << " instances, vocabulary "
        << vocab.size() << ", mode " << to_string(shape.coattention.mode) << "\n";
    std::string csv = "# config: " + config_json + "\nstep,train_loss,dev_accuracy,lr,seed\n";
    json runs = json::array();
    auto on_run = [&](const RunRecord& rec, Model& model) {
        for (const auto& p : rec.curve)
            csv += std::to_string(p.step) + "," + number(p.train_loss) + "," + number(p.dev_accuracy) + "," +
                   number(p.lr) + "," + std::to_string(rec.seed) + "\n";
        const fs::path ckpt = checkpoint_path(config, rec.seed, many);
        if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
        write_checkpoint(ckpt, model, vocab, config_json);
        runs.push_back({{"seed", rec.seed},
                        {"best_dev_accuracy", rec.best_dev_accuracy},
                        {"best_step", rec.best_step},
                        {"total_steps", rec.total_steps},
                        {"checkpoint", ckpt.string()}});
        out << "seed " << rec.seed << ": best dev accuracy " << number(rec.best_dev_accuracy) << " at step "
            << rec.best_step << " of " << rec.total_steps << " -> " << ckpt.string() << "\n";
    };
    const auto summary = run_seeds(
        config.train, [&](std::uint64_t seed) { return Model(shape, seed); }, train_enc, dev_enc, on_run);
    write_text(config.out_path(config.metrics_file), csv);
    json s = {{"config", json::parse(config_json)},
              {"runs", runs},
              {"mean_best_dev_accuracy", summary.mean_best_dev_accuracy},
              {"stddev_best_dev_accuracy", summary.stddev_best_dev_accuracy}};
    if (summary.error) s["error"] = *summary.error;
    write_text(config.out_path("summary.json"), s.dump(2) + "\n");
    if (summary.error) throw NumericalError(*summary.error);
    out << "mean best dev accuracy " << number(summary.mean_best_dev_accuracy) << " (stddev "
        << number(summary.stddev_best_dev_accuracy) << ", " << summary.runs.size() << " seeds)\n";
    return kOk;
}

struct Loaded {
    Model model;
    data::Vocabulary vocab;
    bool use_definitions;
};

Loaded load_model(const fs::path& path) {
    const CheckpointData ckpt = read_checkpoint(path);
    bool use_definitions = true;
    const json cfg = json::parse(ckpt.config_json);
    if (cfg.contains("wordnet") && cfg["wordnet"].contains("enable")) use_definitions = cfg["wordnet"]["enable"];
    return Loaded{restore_model(ckpt), ckpt.vocabulary, use_definitions};
}

std::vector<data::EncodedInstance> encode_for(const Loaded& m, const std::vector<data::Instance>& instances) {
    return data::encode_all(instances, m.vocab, static_cast<std::size_t>(m.model.config().encoder.max_seq_len),
                            m.use_definitions);
}

int cmd_eval(const CliConfig& config, const std::string& split, const std::string& input, std::ostream& out) {
    const Loaded m = load_model(require_checkpoint(config));
    const auto instances = input.empty() ? load_split(config, split_file(config, split)) : data::load_jsonl(input);
    const auto encoded = encode_for(m, instances);
    const double acc = evaluate(m.model, encoded);
    out << "accuracy " << number(acc) << " (" << instances.size() << " instances)\n";
    return kOk;
}

int cmd_predict(const CliConfig& config, const std::string& split, const std::string& input, std::string output,
                std::ostream& out) {
    const fs::path ckpt = require_checkpoint(config);
    const Loaded m = load_model(ckpt);
    const auto instances = input.empty() ? load_split(config, split_file(config, split)) : data::load_jsonl(input);
    const auto predictions = predict_all(m.model, encode_for(m, instances));
    std::string text = meta_line(config, {{"checkpoint", ckpt.string()}}).dump() + "\n";
    for (std::size_t i = 0; i < instances.size(); ++i)
        text += json{{"id", instances[i].id}, {"prediction", predictions[i]}}.dump() + "\n";
    if (output.empty()) output = config.out_path(config.predictions_file).string();
    write_text(output, text);
    out << "wrote " << instances.size() << " predictions -> " << output << "\n";
    return kOk;
}

std::pair<std::vector<std::string>, std::vector<int>> read_predictions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, 0, "cannot open prediction file");
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::string line;
    std::size_t n = 0;
    while (std::getline(f, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path, n, std::string("malformed JSON: ") + e.what());
        }
        if (j.contains("_meta")) continue;
        if (!j.contains("id") || !j.contains("prediction") || !j["prediction"].is_number_integer())
            throw ParseError(path, n, "expected {\"id\": ..., \"prediction\": <int>}");
        const int p = j["prediction"];
        if (p < 0 || p >= static_cast<int>(data::kNumOptions)) throw ParseError(path, n, "prediction out of range");
        ids.push_back(j["id"].get<std::string>());
        labels.push_back(p);
    }
    return {ids, labels};
}

int cmd_ensemble(const CliConfig& config, const std::vector<std::string>& files, std::string output,
                 const std::string& gold, std::ostream& out) {
    if (files.empty()) throw ConfigError("ensemble needs at least one prediction file");
    std::vector<std::string> ids;
    std::vector<std::vector<int>> votes;
    for (const auto& f : files) {
        auto [file_ids, labels] = read_predictions(f);
        if (votes.empty())
            ids = file_ids;
        else if (file_ids != ids)
            throw ValidationError(f + ": instance ids differ from " + files.front());
        votes.push_back(std::move(labels));
    }
    const auto merged = majority_vote(votes);
    std::string text = meta_line(config, {{"inputs", files}}).dump() + "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) text += json{{"id", ids[i]}, {"prediction", merged[i]}}.dump() + "\n";
    if (output.empty()) output = config.out_path("ensemble.jsonl").string();
    write_text(output, text);
    out << "majority vote over " << files.size() << " files, " << ids.size() << " instances -> " << output << "\n";
    if (!gold.empty()) {
        const auto instances = data::load_jsonl(gold);
        if (instances.size() != ids.size())
            throw ValidationError(gold + ": " + std::to_string(instances.size()) + " instances, predictions have " +
                                  std::to_string(ids.size()));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (instances[i].id != ids[i]) throw ValidationError(gold + ": id mismatch at instance " + ids[i]);
            if (!instances[i].label) throw ValidationError(gold + ": instance " + ids[i] + " has no label");
            correct += *instances[i].label == merged[i] ? 1 : 0;
        }
        out << "accuracy " << number(static_cast<double>(correct) / static_cast<double>(ids.size())) << "\n";
    }
    return kOk;
}

int cmd_gradcheck(const CliConfig& config, std::ostream& out) {
    const ModelConfig shape = config.model_for(50, static_cast<Index>(config.gradcheck_seq_len));
    GradCheckOptions opts;
    opts.tolerance = config.gradcheck_tolerance;
    opts.samples_per_tensor = config.gradcheck_samples;
    bool ok = true;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed : config.train.seeds) {
        const auto report = model_gradcheck(shape, seed, opts);
        const bool pass = report.passed(opts.tolerance);
        ok = ok && pass;
        out << "seed " << seed << ": " << report.entries.size() << " entries over " << report.tensors
            << " tensors, max rel error " << report.max_rel_error << " at " << report.worst << "  "
            << (pass ? "ok" : "FAIL") << "\n";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "gradcheck " << (ok ? "passed" : "FAILED") << " in " << secs << " s\n";
    return ok ? kOk : kNumericalError;
}

int cmd_synth(const CliConfig& config, std::size_t count, std::ostream& out) {
    const std::string meta = meta_line(config).dump() + "\n";
    std::uint64_t seed = config.train.seeds.front();
    const std::pair<const char*, std::size_t> splits[] = {{"train", count}, {"dev", count / 2}, {"test", count / 2}};
    for (const auto& [split, n] : splits) {
        data::CopyTaskOptions o;
        o.instances = std::max<std::size_t>(n, 1);
        auto instances = data::make_copy_task(o, seed++);
        std::string text = meta;
        for (auto& inst : instances) {
            inst.id = std::string(split) + "-" + inst.id;
            text += data::to_json_line(inst) + "\n";
        }
        const fs::path path = config.out_path(split_file(config, split));
        write_text(path, text);
        out << "wrote " << instances.size() << " instances -> " << path.string() << "\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiple-choice reading comprehension with WordNet-enriched dual co-attention", "wnduma"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    KeyValues flags;
    std::vector<std::string> sets;
    auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
        app.add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    app.add_option("--config", config_file, "INI configuration file");
    flag("--data-dir", "data.dir", "Directory holding the train/dev/test JSONL files");
    flag("--wordnet-dir", "wordnet.dir", "WordNet 3.0 dict directory (default: $WNSEARCHDIR)");
    flag("--mode", "model.mode", "Co-attention mode: stacked or parallel");
    flag("--seed", "train.seeds", "Single seed");
    flag("--seeds", "train.seeds", "Comma-separated seeds");
    flag("--max-seq-len", "data.max_seq_len", "Sequence length L (default 150)");
    flag("--out", "output.dir", "Output directory");
    flag("--checkpoint", "output.checkpoint", "Checkpoint path");
    app.add_flag_callback("--no-definitions", [&flags] { flags["wordnet.enable"] = "false"; },
                          "Drop WordNet definitions from the second segment");
    app.add_option("--set", sets, "Override any key: section.key=value");

    std::vector<std::string> stats_files;
    std::string stats_csv;
    auto* stats = app.add_subcommand("stats", "Dataset statistics per split");
    stats->add_option("files", stats_files, "JSONL files (default: the configured train/dev/test)");
    stats->add_option("--csv", stats_csv, "Also write the table as CSV");

    std::string input, output, split = "dev", gold;
    auto* enrich = app.add_subcommand("enrich", "Attach WordNet definitions and POS tags to every candidate");
    enrich->add_option("input", input, "Input JSONL")->required();
    enrich->add_option("--output", output, "Output JSONL");

    auto* train = app.add_subcommand("train", "Train one model per seed; writes checkpoints and a metrics CSV");

    auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a labelled split");
    eval->add_option("--split", split, "train, dev or test");
    eval->add_option("--input", input, "Explicit JSONL file instead of a split");

    auto* predict = app.add_subcommand("predict", "Write predicted option indices as JSONL");
    predict->add_option("--split", split, "train, dev or test");
    predict->add_option("--input", input, "Explicit JSONL file instead of a split");
    predict->add_option("--output", output, "Output JSONL");

    std::vector<std::string> pred_files;
    auto* ensemble = app.add_subcommand("ensemble", "Majority vote over prediction files");
    ensemble->add_option("files", pred_files, "Prediction JSONL files")->required();
    ensemble->add_option("--output", output, "Output JSONL");
    ensemble->add_option("--gold", gold, "Labelled JSONL to score the vote against");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full model, one run per seed");

    std::size_t synth_count = 64;
    auto* synth = app.add_subcommand("synth", "Write a synthetic copy-task dataset");
    synth->add_option("--count", synth_count, "Training instances (dev and test get half)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        KeyValues values;
        if (!config_file.empty()) values = read_config_file(config_file);
        for (const auto& [k, v] : flags) values[k] = v;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
            values[s.substr(0, eq)] = s.substr(eq + 1);
        }
        const CliConfig config = resolve(values);

        if (*stats) return cmd_stats(config, stats_files, stats_csv, out);
        if (*enrich) return cmd_enrich(config, input, output, out);
        if (*train) return cmd_train(config, out);
        if (*eval) return cmd_eval(config, split, input, out);
        if (*predict) return cmd_predict(config, split, input, output, out);
        if (*ensemble) return cmd_ensemble(config, pred_files, output, gold, out);
        if (*gradcheck) return cmd_gradcheck(config, out);
        if (*synth) return cmd_synth(config, synth_count, out);
        return kUsageError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace wnduma::cli
