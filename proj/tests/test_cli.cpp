// End-to-end tests of the command-line binary (path injected by the build).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ddtm/common.hpp"
#include "ddtm/corpus.hpp"
#include "ddtm/model.hpp"

using namespace ddtm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return DDTM_CLI_PATH; }

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("ddtm_cli_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

int run(const std::string& args, const Scratch& scratch, const std::string& log_name = "out.txt") {
    std::string cmd = std::string(cli_path()) + " " + args + " >" + scratch.path(log_name) +
                      " 2>" + scratch.path("err_" + log_name);
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_raw_corpus(const std::string& path) {
    std::ofstream out(path);
    out << R"({"id":"t1","subreddit":"s1","comments":[{"id":"op","parent_id":null,"body":"alpha beta alpha","upvotes":5,"has_deleted_child":false},{"id":"r1","parent_id":"op","body":"beta gamma","upvotes":-1,"has_deleted_child":true}]})"
        << "\n"
        << R"({"id":"t2","subreddit":"s2","comments":[{"id":"op","parent_id":null,"body":"gamma gamma delta","upvotes":0,"has_deleted_child":false}]})"
        << "\n";
}

}  // namespace

TEST_CASE("preprocess handles valid and malformed input") {
    Scratch scratch("preprocess");
    write_raw_corpus(scratch.path("raw.jsonl"));

    SUBCASE("valid input succeeds and is deterministic") {
        CHECK(run("preprocess --input " + scratch.path("raw.jsonl") + " --out-dir " +
                      scratch.path("c1") + " --seed 5 --test-fraction 0",
                  scratch) == 0);
        CHECK(run("preprocess --input " + scratch.path("raw.jsonl") + " --out-dir " +
                      scratch.path("c2") + " --seed 5 --test-fraction 0",
                  scratch) == 0);
        CHECK(slurp(scratch.path("c1/corpus.jsonl")) == slurp(scratch.path("c2/corpus.jsonl")));
        CHECK(slurp(scratch.path("c1/vocab.txt")) == slurp(scratch.path("c2/vocab.txt")));
        Corpus corpus = load_corpus(scratch.path("c1"));
        CHECK(corpus.threads.size() == 2);
        CHECK(fs::exists(scratch.path("c1/effective_config.json")));
    }

    SUBCASE("a cyclic thread fails without --skip-bad") {
        std::ofstream out(scratch.path("cyclic.jsonl"));
        out << R"({"id":"loop","subreddit":"s","comments":[{"id":"op","parent_id":null,"body":"x"},{"id":"a","parent_id":"b","body":"y"},{"id":"b","parent_id":"a","body":"z"}]})"
            << "\n"
            << R"({"id":"ok","subreddit":"s","comments":[{"id":"op","parent_id":null,"body":"alpha beta"}]})"
            << "\n";
        out.close();
        CHECK(run("preprocess --input " + scratch.path("cyclic.jsonl") + " --out-dir " +
                      scratch.path("cbad") + " --seed 5",
                  scratch) == 1);
        CHECK(run("preprocess --input " + scratch.path("cyclic.jsonl") + " --out-dir " +
                      scratch.path("cok") + " --seed 5 --skip-bad --test-fraction 0",
                  scratch, "skip.txt") == 0);
        CHECK(slurp(scratch.path("skip.txt")).find("skipped: 1") != std::string::npos);
    }

    SUBCASE("a seed is mandatory") {
        CHECK(run("preprocess --input " + scratch.path("raw.jsonl") + " --out-dir " +
                      scratch.path("noseed"),
                  scratch) == 1);
    }

    SUBCASE("missing input file is an input error") {
        CHECK(run("preprocess --input " + scratch.path("absent.jsonl") + " --out-dir " +
                      scratch.path("x") + " --seed 5",
                  scratch) == 1);
    }
}

TEST_CASE("train defaults and header dimensions") {
    Scratch scratch("train");
    CHECK(run("synth --out-dir " + scratch.path("corpus") +
                  " --preset coupled --threads 30 --vocab 12 --comments 3 --seed 11 --bits 4",
              scratch) == 0);

    SUBCASE("default --bits 64 records F_c = F_t = 32") {
        CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " +
                      scratch.path("run64") + " --seed 11 --epochs 0",
                  scratch) == 0);
        ModelParams p = load_checkpoint(scratch.path("run64/final.ddtm"));
        CHECK(p.cfg.comment_bits == 32);
        CHECK(p.cfg.thread_bits == 32);
        CHECK(p.cfg.variant == Variant::ddtm);
    }

    SUBCASE("zero epochs reproduce the seeded initialization") {
        CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " +
                      scratch.path("run0") + " --seed 42 --bits 4 --epochs 0",
                  scratch) == 0);
        ModelParams p = load_checkpoint(scratch.path("run0/final.ddtm"));
        Corpus corpus = load_corpus(scratch.path("corpus"));
        ModelParams expected =
            init_params(HiddenConfig{.comment_bits = 2, .thread_bits = 2, .variant = Variant::ddtm},
                        corpus.vocab.size(),
                        unigram_log_probs(corpus.train_threads(), corpus.vocab.size()), 42);
        CHECK(p.blocks.U == expected.blocks.U);
        CHECK(p.blocks.a == expected.blocks.a);
    }

    SUBCASE("training runs are byte-identical under a fixed seed") {
        for (const char* out : {"ra", "rb"}) {
            CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " +
                          scratch.path(out) + " --seed 13 --bits 4 --epochs 3",
                      scratch) == 0);
        }
        CHECK(slurp(scratch.path("ra/final.ddtm")) == slurp(scratch.path("rb/final.ddtm")));
    }

    SUBCASE("odd --bits for ddtm is rejected before training") {
        CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " +
                      scratch.path("odd") + " --seed 13 --bits 5 --epochs 1",
                  scratch) == 1);
    }

    SUBCASE("unigram variant converges to the train unigram distribution") {
        std::ofstream cfg(scratch.path("uni.json"));
        cfg << R"({"seed": 3, "train": {"epochs": 400, "step_size": 0.05,)"
            << R"( "minibatch": 100000, "early_stop": false}})";
        cfg.close();
        CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " +
                      scratch.path("uni") + " --config " + scratch.path("uni.json") +
                      " --variant unigram",
                  scratch) == 0);
        ModelParams p = load_checkpoint(scratch.path("uni/final.ddtm"));
        Corpus corpus = load_corpus(scratch.path("corpus"));
        VectorXd counts = VectorXd::Zero(corpus.vocab.size());
        for (const Thread* t : corpus.train_threads()) {
            for (const auto& bag : t->comments) {
                for (auto& [k, n] : bag.counts) counts[k] += static_cast<double>(n);
            }
        }
        VectorXd empirical = counts / counts.sum();
        VectorXd fitted = softmax(p.blocks.a);
        double kl = 0.0;
        for (int k = 0; k < corpus.vocab.size(); ++k) {
            if (empirical[k] > 0.0) kl += empirical[k] * std::log(empirical[k] / fitted[k]);
        }
        CHECK(kl < 1e-4);
    }
}

TEST_CASE("worker count does not change read-only command outputs") {
    Scratch scratch("workers");
    CHECK(run("synth --out-dir " + scratch.path("corpus") +
                  " --preset coupled --threads 24 --vocab 12 --comments 3 --seed 8 --bits 4",
              scratch) == 0);
    CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " + scratch.path("run") +
                  " --seed 8 --bits 4 --epochs 2",
              scratch) == 0);
    for (const char* workers : {"1", "2"}) {
        CHECK(run("infer --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                      scratch.path("run/final.ddtm") + " --out " +
                      scratch.path(std::string("psi") + workers + ".jsonl") + " --seed 8 --split all" +
                      " --workers " + workers,
                  scratch) == 0);
        CHECK(run("eval --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                      scratch.path("run/final.ddtm") + " --out " +
                      scratch.path(std::string("rep") + workers + ".json") +
                      " --seed 8 --ais-intermediate 20 --ais-runs 2 --workers " + workers,
                  scratch) == 0);
    }
    CHECK(slurp(scratch.path("psi1.jsonl")) == slurp(scratch.path("psi2.jsonl")));
    CHECK(slurp(scratch.path("rep1.json")) == slurp(scratch.path("rep2.json")));
}

TEST_CASE("eval closed form, determinism, and error codes") {
    Scratch scratch("eval");
    CHECK(run("synth --out-dir " + scratch.path("corpus") +
                  " --preset uniform --threads 24 --vocab 8 --comments 2 --seed 3 --bits 2",
              scratch) == 0);
    Corpus corpus = load_corpus(scratch.path("corpus"));
    const int vocab = corpus.vocab.size();

    // hand-built unigram checkpoint with a uniform word bias
    ModelParams uni;
    uni.cfg = {.comment_bits = 0, .thread_bits = 0, .variant = Variant::unigram};
    uni.blocks = ParamBlocks::zeros(vocab, 0, 0);
    uni.blocks.a.setConstant(std::log(1.0 / vocab));
    save_checkpoint(uni, scratch.path("uniform.ddtm"));

    SUBCASE("uniform unigram perplexity equals log K") {
        CHECK(run("eval --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                      scratch.path("uniform.ddtm") + " --out " + scratch.path("report.json") +
                      " --seed 3 --ais-intermediate 5 --ais-runs 2",
                  scratch) == 0);
        json report = json::parse(slurp(scratch.path("report.json")));
        CHECK(report["perplexity_nats"].get<double>() ==
              doctest::Approx(std::log(vocab)).epsilon(1e-10));
    }

    SUBCASE("reports are byte-identical across reruns") {
        for (const char* name : {"repa.json", "repb.json"}) {
            CHECK(run("eval --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                          scratch.path("uniform.ddtm") + " --out " + scratch.path(name) +
                          " --seed 9 --ais-intermediate 10 --ais-runs 2",
                      scratch) == 0);
        }
        CHECK(slurp(scratch.path("repa.json")) == slurp(scratch.path("repb.json")));
    }

    SUBCASE("a non-finite checkpoint exits with the numeric code") {
        ModelParams bad = uni;
        bad.blocks.a[0] = std::numeric_limits<double>::quiet_NaN();
        save_checkpoint(bad, scratch.path("nan.ddtm"));
        CHECK(run("eval --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                      scratch.path("nan.ddtm") + " --out " + scratch.path("r.json") + " --seed 3",
                  scratch) == 2);
    }

    SUBCASE("dimension mismatch against explicit run bits") {
        ModelParams small;
        small.cfg = {.comment_bits = 2, .thread_bits = 2, .variant = Variant::ddtm};
        small.blocks = ParamBlocks::zeros(vocab, 2, 2);
        save_checkpoint(small, scratch.path("small.ddtm"));
        CHECK(run("eval --corpus-dir " + scratch.path("corpus") + " --checkpoint " +
                      scratch.path("small.ddtm") + " --out " + scratch.path("r.json") +
                      " --seed 3 --bits 8 --ais-intermediate 5 --ais-runs 2",
                  scratch) == 1);
    }
}

TEST_CASE("infer, retrieve, and topics dumps") {
    Scratch scratch("dumps");
    CHECK(run("synth --out-dir " + scratch.path("corpus") +
                  " --preset two-regime --threads 40 --vocab 16 --comments 3 --seed 19 --bits 8",
              scratch) == 0);
    CHECK(run("train --corpus-dir " + scratch.path("corpus") + " --out-dir " + scratch.path("run") +
                  " --seed 19 --bits 8 --epochs 4",
              scratch) == 0);
    const std::string ckpt = scratch.path("run/final.ddtm");

    SUBCASE("infer emits one record per comment plus a thread record") {
        CHECK(run("infer --corpus-dir " + scratch.path("corpus") + " --checkpoint " + ckpt +
                      " --out " + scratch.path("psi.jsonl") + " --seed 19 --split all",
                  scratch) == 0);
        Corpus corpus = load_corpus(scratch.path("corpus"));
        int64_t comments = 0;
        for (auto& t : corpus.threads) comments += t.size();
        std::ifstream in(scratch.path("psi.jsonl"));
        std::string line;
        int64_t comment_records = 0, thread_records = 0;
        std::string last_thread;
        while (std::getline(in, line)) {
            json record = json::parse(line);
            if (record["comment"].is_null()) {
                ++thread_records;
                CHECK(record["psi0"].size() == 4);
                // sorted by thread id
                CHECK(record["thread"].get<std::string>() > last_thread);
                last_thread = record["thread"].get<std::string>();
            } else {
                ++comment_records;
                CHECK(record["psi"].size() == 4);
                CHECK(record["psi0_ref"].get<bool>());
            }
        }
        CHECK(comment_records == comments);
        CHECK(thread_records == static_cast<int64_t>(corpus.threads.size()));
    }

    SUBCASE("retrieving a training comment finds a perfect match first") {
        Corpus corpus = load_corpus(scratch.path("corpus"));
        std::string query = corpus.split.train_ids[0] + "/c000";
        CHECK(run("retrieve --corpus-dir " + scratch.path("corpus") + " --checkpoint " + ckpt +
                      " --out " + scratch.path("ret.json") + " --seed 19 --query " + query +
                      " --k 5",
                  scratch) == 0);
        json out = json::parse(slurp(scratch.path("ret.json")));
        REQUIRE(!out["results"].empty());
        CHECK(out["results"][0]["dice"].get<double>() == doctest::Approx(1.0));
        bool found_self = false;
        for (const auto& item : out["results"]) {
            if (item["thread"] == corpus.split.train_ids[0] && item["comment"] == "c000") {
                found_self = true;
                CHECK(item["dice"].get<double>() == doctest::Approx(1.0));
            }
        }
        CHECK(found_self);
    }

    SUBCASE("retrieval over the test split emits a PR curve") {
        CHECK(run("retrieve --corpus-dir " + scratch.path("corpus") + " --checkpoint " + ckpt +
                      " --out " + scratch.path("ret.json") + " --seed 19 --max-k 20",
                  scratch) == 0);
        json out = json::parse(slurp(scratch.path("ret.json")));
        CHECK(out["pr_curve"].size() == 20);
        CHECK(fs::exists(scratch.path("ret.json.pr.csv")));
    }

    SUBCASE("topics lists exactly 10 tokens per bit and honors hand-set weights") {
        Corpus corpus = load_corpus(scratch.path("corpus"));
        ModelParams p = load_checkpoint(ckpt);
        p.blocks.U.row(0).setZero();
        p.blocks.U(0, 7) = 50.0;  // token w00007 must rank first for bit 0
        save_checkpoint(p, scratch.path("handset.ddtm"));
        CHECK(run("topics --checkpoint " + scratch.path("handset.ddtm") + " --corpus-dir " +
                      scratch.path("corpus") + " --out " + scratch.path("topics.txt") + " --seed 19",
                  scratch) == 0);
        std::ifstream in(scratch.path("topics.txt"));
        std::string line;
        int lines = 0;
        while (std::getline(in, line)) {
            ++lines;
            auto colon = line.find(": ");
            REQUIRE(colon != std::string::npos);
            std::string tokens = line.substr(colon + 2);
            int words = 1;
            for (char ch : tokens) {
                if (ch == ' ') ++words;
            }
            CHECK(words == 10);
            if (line.rfind("comment_bit 0:", 0) == 0) {
                CHECK(tokens.rfind("w00007 ", 0) == 0);
            }
        }
        CHECK(lines == 8);  // 4 comment bits + 4 thread bits
    }
}
