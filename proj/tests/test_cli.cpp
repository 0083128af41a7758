#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "wnduma/cli.hpp"

using namespace wnduma;
using json = nlohmann::json;
using test::TempDir;

namespace {

const std::string kMiniWordNet = (std::filesystem::path(WNDUMA_TEST_DATA) / "mini_wordnet").string();
const std::string kTiny = (std::filesystem::path(WNDUMA_TEST_DATA) / "tiny.jsonl").string();

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Flags for a model small enough to train in a second or two.
std::vector<std::string> small(const std::string& dir) {
    return {"--data-dir",         dir,
            "--out",              dir,
            "--max-seq-len",      "32",
            "--seed",             "1",
            "--set",              "model.d_model=16",
            "--set",              "model.encoder_heads=2",
            "--set",              "model.n_blocks=1",
            "--set",              "model.d_ff=32",
            "--set",              "model.heads=2",
            "--set",              "model.d_k=4",
            "--set",              "model.d_v=4",
            "--set",              "train.max_steps=10",
            "--set",              "train.eval_every=5"};
}

std::vector<std::string> with(std::vector<std::string> a, std::initializer_list<std::string> more) {
    a.insert(a.end(), more.begin(), more.end());
    return a;
}

std::map<std::string, json> flatten(const json& j) {
    std::map<std::string, json> out;
    for (auto& [section, body] : j.items())
        for (auto& [key, value] : body.items()) out[section + "." + key] = value;
    return out;
}

std::vector<std::string> diff_keys(const std::string& a, const std::string& b) {
    const auto fa = flatten(json::parse(a)), fb = flatten(json::parse(b));
    std::vector<std::string> keys;
    for (const auto& [k, v] : fa)
        if (!fb.count(k) || fb.at(k) != v) keys.push_back(k);
    for (const auto& [k, v] : fb)
        if (!fa.count(k)) keys.push_back(k);
    return keys;
}

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
    const auto kv = cli::parse_config_text("# top\n[model]\nd_model = 32\n; note\n\n[train]\nlr=0.5\n", "t.ini");
    EXPECT_EQ(kv.at("model.d_model"), "32");
    EXPECT_EQ(kv.at("train.lr"), "0.5");
}

TEST(Config, SyntaxErrorsCarryLineNumbers) {
    try {
        cli::parse_config_text("[model]\nd_model = 32\nthis line is wrong\n", "bad.ini");
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.ini"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
    EXPECT_THROW(cli::parse_config_text("key = 1\n", "nosection.ini"), ParseError);
}

TEST(Config, AllProblemsReportedTogether) {
    try {
        cli::resolve({{"model.d_model", "abc"}, {"train.lr", "-1"}, {"model.colour", "red"}});
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("model.d_model"), std::string::npos);
        EXPECT_NE(msg.find("train.lr"), std::string::npos);
        EXPECT_NE(msg.find("model.colour"), std::string::npos);
    }
    TempDir dir("cli");
    test::write_file(dir / "bad.ini", "[model]\nd_model = x\nmode = diagonal\n");
    const Result r = run({"--config", (dir / "bad.ini").string(), "stats", kTiny});
    EXPECT_EQ(r.code, cli::kUsageError);
    EXPECT_NE(r.err.find("model.d_model"), std::string::npos);
    EXPECT_NE(r.err.find("model.mode"), std::string::npos);
}

TEST(Config, DefaultsAndOverrides) {
    const cli::CliConfig d = cli::resolve({});
    EXPECT_EQ(d.max_seq_len, 150u);
    EXPECT_EQ(d.model.encoder.d_model, 64);
    EXPECT_EQ(d.train.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
    const cli::CliConfig c = cli::resolve({{"train.seeds", "7, 8"}, {"model.mode", "parallel"}});
    EXPECT_EQ(c.train.seeds, (std::vector<std::uint64_t>{7, 8}));
    EXPECT_EQ(c.model.coattention.mode, CoAttentionMode::parallel);
}

TEST(Config, FlagsOverrideFile) {
    TempDir dir("cli");
    test::write_file(dir / "c.ini", "[model]\nmode = parallel\n[data]\nmax_seq_len = 40\n");
    const Result r = run({"--config", (dir / "c.ini").string(), "--mode", "stacked", "--out", dir.path().string(),
                          "stats", kTiny, "--csv", "s.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = test::read_file(dir / "s.csv");
    const json cfg = json::parse(csv.substr(10, csv.find('\n') - 10));
    EXPECT_EQ(cfg["model"]["mode"], "stacked");
    EXPECT_EQ(cfg["data"]["max_seq_len"], 40);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
    EXPECT_EQ(run({}).code, cli::kUsageError);
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Stats, MissingFileIsDataError) {
    const Result r = run({"stats", "/no/such/file.jsonl"});
    EXPECT_EQ(r.code, cli::kDataError);
    EXPECT_NE(r.err.find("/no/such/file.jsonl"), std::string::npos);
}

TEST(Stats, CountsInstances) {
    TempDir dir("cli");
    test::write_file(dir / "one.jsonl", test::read_file(kTiny).substr(0, test::read_file(kTiny).find('\n') + 1));
    const Result r = run({"--out", dir.path().string(), "stats", (dir / "one.jsonl").string(), "--csv", "s.csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = test::read_file(dir / "s.csv");
    EXPECT_EQ(csv.rfind("# config: ", 0), 0u);
    const std::string body = drop_first_line(csv);
    const std::string row = drop_first_line(body);
    EXPECT_EQ(row.rfind("one,1,", 0), 0u) << row;
}

TEST(Enrich, AttachesGlossesDeterministically) {
    TempDir dir("cli");
    const auto args = std::vector<std::string>{"--wordnet-dir", kMiniWordNet, "--out", dir.path().string(), "enrich",
                                               kTiny, "--output", (dir / "e.jsonl").string()};
    ASSERT_EQ(run(args).code, 0);
    const std::string first = test::read_file(dir / "e.jsonl");
    ASSERT_EQ(run(args).code, 0);
    EXPECT_EQ(test::read_file(dir / "e.jsonl"), first);

    std::istringstream lines(first);
    std::string line;
    std::getline(lines, line);
    EXPECT_TRUE(json::parse(line).contains("_meta"));
    std::vector<json> rows;
    while (std::getline(lines, line)) rows.push_back(json::parse(line));
    ASSERT_EQ(rows.size(), 3u);
    const json& t1 = rows[1];
    ASSERT_EQ(t1["definitions"].size(), 5u);
    EXPECT_NE(t1["definitions"][3].get<std::string>().find("sloping land"), std::string::npos);
    EXPECT_EQ(t1["pos"][3], "noun");
    EXPECT_EQ(t1["definitions"][1], "");  // "rise" has no entry in the fixture
    EXPECT_NE(rows[0]["definitions"][0].get<std::string>(), "");  // collapse
}

TEST(Enrich, NeedsWordNetDirectory) {
    TempDir dir("cli");
    const Result r = run({"--wordnet-dir", (dir / "missing").string(), "enrich", kTiny});
    EXPECT_EQ(r.code, cli::kDataError);
}

class CliTraining : public ::testing::Test {
protected:
    void SetUp() override { ASSERT_EQ(run(with(small(dir.path().string()), {"synth", "--count", "16"})).code, 0); }
    TempDir dir{"cli_train"};
};

TEST_F(CliTraining, EvalReproducesBestDevAccuracy) {
    const auto base = small(dir.path().string());
    const Result t = run(with(base, {"--checkpoint", (dir / "m.ckpt").string(), "train"}));
    ASSERT_EQ(t.code, 0) << t.err;
    const json summary = json::parse(test::read_file(dir / "summary.json"));
    const double best = summary["runs"][0]["best_dev_accuracy"];
    const Result e = run(with(base, {"--checkpoint", (dir / "m.ckpt").string(), "eval", "--split", "dev"}));
    ASSERT_EQ(e.code, 0) << e.err;
    ASSERT_EQ(e.out.rfind("accuracy ", 0), 0u);
    EXPECT_EQ(std::stod(e.out.substr(9)), best);
}

TEST_F(CliTraining, MetricsAreBitIdenticalAcrossRuns) {
    const auto base = small(dir.path().string());
    ASSERT_EQ(run(with(base, {"train"})).code, 0);
    const std::string first = test::read_file(dir / "metrics.csv");
    ASSERT_EQ(run(with(base, {"train"})).code, 0);
    EXPECT_EQ(test::read_file(dir / "metrics.csv"), first);
    EXPECT_EQ(drop_first_line(first).rfind("step,train_loss,dev_accuracy,lr,seed\n", 0), 0u);
}

TEST_F(CliTraining, SeveralSeedsGetSeparateCheckpoints) {
    auto base = small(dir.path().string());
    const Result t = run(with(base, {"--seeds", "1,2", "--set", "train.max_steps=5", "train"}));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "model_seed1.ckpt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "model_seed2.ckpt"));
    const json summary = json::parse(test::read_file(dir / "summary.json"));
    EXPECT_EQ(summary["runs"].size(), 2u);
}

TEST_F(CliTraining, EnsembleOfOneFileIsIdentity) {
    const auto base = small(dir.path().string());
    const std::string ckpt = (dir / "m.ckpt").string();
    ASSERT_EQ(run(with(base, {"--checkpoint", ckpt, "train"})).code, 0);
    ASSERT_EQ(run(with(base, {"--checkpoint", ckpt, "predict", "--split", "test", "--output", (dir / "p.jsonl").string()}))
                  .code,
              0);
    const Result e = run(with(base, {"ensemble", (dir / "p.jsonl").string(), "--output", (dir / "v.jsonl").string(),
                                     "--gold", (dir / "test.jsonl").string()}));
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(drop_first_line(test::read_file(dir / "v.jsonl")), drop_first_line(test::read_file(dir / "p.jsonl")));
    EXPECT_NE(e.out.find("accuracy "), std::string::npos);
}

TEST_F(CliTraining, AblationFlagsChangeOneKeyEach) {
    const auto base = small(dir.path().string());
    auto config_of = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        args.insert(args.end(), {"stats", (dir / "train.jsonl").string(), "--csv", "c.csv"});
        EXPECT_EQ(run(args).code, 0);
        const std::string csv = test::read_file(dir / "c.csv");
        return csv.substr(10, csv.find('\n') - 10);
    };
    const std::string ref = config_of({});
    EXPECT_EQ(diff_keys(ref, config_of({"--no-definitions"})), std::vector<std::string>{"wordnet.enable"});
    EXPECT_EQ(diff_keys(ref, config_of({"--mode", "parallel"})), std::vector<std::string>{"model.mode"});
}

TEST_F(CliTraining, VacuousAblationGivesIdenticalMetrics) {
    // The synthetic data has no definitions, so dropping them changes nothing.
    const auto base = small(dir.path().string());
    ASSERT_EQ(run(with(base, {"train"})).code, 0);
    const std::string with_defs = drop_first_line(test::read_file(dir / "metrics.csv"));
    ASSERT_EQ(run(with(base, {"--no-definitions", "train"})).code, 0);
    EXPECT_EQ(drop_first_line(test::read_file(dir / "metrics.csv")), with_defs);
}

TEST_F(CliTraining, EvalWithoutCheckpointIsUsageError) {
    EXPECT_EQ(run(with(small(dir.path().string()), {"eval"})).code, cli::kUsageError);
}

TEST(Gradcheck, SmallModelPasses) {
    const Result r = run({"--seed", "1", "--set", "model.d_model=16", "--set", "model.encoder_heads=2", "--set",
                          "model.d_ff=32", "--set", "model.heads=2", "--set", "model.d_k=4", "--set", "model.d_v=4",
                          "--set", "gradcheck.seq_len=16", "gradcheck"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("gradcheck passed"), std::string::npos);
}
