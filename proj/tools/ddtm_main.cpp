// ddtm command-line interface: preprocess, synth, train, eval, infer,
// retrieve, topics. All commands are seeded and reproducible; the effective
// merged configuration is written next to every output.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddtm/eval.hpp"
#include "ddtm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ddtm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNumericError = 2;

struct GlobalOptions {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> variant;
    std::optional<int> bits;
};

// Declarative run configuration; command-line flags override file fields.
struct RunConfig {
    json raw = json::object();

    uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;

    PipelineConfig pipeline;
    Variant variant = Variant::ddtm;
    std::optional<int> comment_bits;
    std::optional<int> thread_bits;
    std::optional<int> bits;
    MFSchedule schedule;
    TrainConfig train;
    AISConfig ais;
    double test_fraction = 0.1;

    static RunConfig load(const GlobalOptions& g) {
        RunConfig cfg;
        if (!g.config_path.empty()) {
            std::ifstream in(g.config_path);
            DDTM_REQUIRE(in.good(), "cannot open config file: " + g.config_path);
            try {
                in >> cfg.raw;
            } catch (const json::exception& e) {
                throw InputError(std::string("malformed config file: ") + e.what());
            }
        }
        const json& j = cfg.raw;
        if (j.contains("seed")) {
            cfg.seed = j["seed"].get<uint64_t>();
            cfg.seed_set = true;
        }
        cfg.workers = j.value("workers", 1);
        if (j.contains("pipeline")) {
            const json& p = j["pipeline"];
            cfg.pipeline.lowercase = p.value("lowercase", true);
            cfg.pipeline.strip_special_chars = p.value("strip_special_chars", true);
            cfg.pipeline.url_to_domain_token = p.value("url_to_domain_token", true);
            std::string stemmer = p.value("stemmer", "none");
            cfg.pipeline.stemmer =
                stemmer == "snowball_english" ? StemmerKind::snowball_english : StemmerKind::none;
            cfg.pipeline.vocab_cap = p.value("vocab_cap", 10000);
            if (p.contains("stopwords")) {
                for (const auto& s : p["stopwords"]) {
                    cfg.pipeline.stopword_list.insert(s.get<std::string>());
                }
            }
        }
        if (j.contains("hidden")) {
            const json& h = j["hidden"];
            if (h.contains("variant")) cfg.variant = variant_from_name(h["variant"].get<std::string>());
            if (h.contains("comment_bits")) cfg.comment_bits = h["comment_bits"].get<int>();
            if (h.contains("thread_bits")) cfg.thread_bits = h["thread_bits"].get<int>();
            if (h.contains("bits")) cfg.bits = h["bits"].get<int>();
        }
        if (j.contains("schedule")) {
            const json& s = j["schedule"];
            cfg.schedule.max_sweeps = s.value("max_sweeps", 10);
            cfg.schedule.tolerance = s.value("tolerance", 1e-4);
            cfg.schedule.init_phi_from_psi = s.value("init_phi_from_psi", true);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            cfg.train.epochs = t.value("epochs", 10);
            cfg.train.adam.step_size = t.value("step_size", 1e-3);
            cfg.train.adam.beta1 = t.value("beta1", 0.9);
            cfg.train.adam.beta2 = t.value("beta2", 0.999);
            cfg.train.adam.eps = t.value("eps", 1e-8);
            cfg.train.checkpoint_every = t.value("checkpoint_every", 0);
            cfg.train.early_stop = t.value("early_stop", true);
            cfg.train.patience = t.value("patience", 3);
            cfg.train.minibatch = t.value("minibatch", 1);
            if (t.contains("grad_clip") && !t["grad_clip"].is_null()) {
                cfg.train.grad_clip = t["grad_clip"].get<double>();
            }
        }
        if (j.contains("ais")) {
            const json& a = j["ais"];
            cfg.ais.num_intermediate = a.value("num_intermediate", 2000);
            cfg.ais.num_runs = a.value("num_runs", 20);
            cfg.ais.gibbs_sweeps = a.value("gibbs_sweeps", 1);
            cfg.ais.path = a.value("path", std::string("linear")) == "geometric"
                               ? AnnealPath::geometric
                               : AnnealPath::linear;
        }
        if (j.contains("split")) cfg.test_fraction = j["split"].value("test_fraction", 0.1);

        // flag overrides
        if (g.seed) {
            cfg.seed = *g.seed;
            cfg.seed_set = true;
        }
        if (g.workers) cfg.workers = *g.workers;
        if (g.variant) cfg.variant = variant_from_name(*g.variant);
        if (g.bits) cfg.bits = *g.bits;

        DDTM_REQUIRE(cfg.seed_set,
                     "a seed is mandatory: pass --seed or set \"seed\" in the config file");
        cfg.train.seed = cfg.seed;
        cfg.ais.seed = cfg.seed;
        cfg.train.workers = cfg.workers;
        cfg.train.schedule = cfg.schedule;
        cfg.train.variant = cfg.variant;
        return cfg;
    }

    // Split --bits across levels following each variant's document treatment.
    HiddenConfig hidden_config() const {
        HiddenConfig h;
        h.variant = variant;
        int total = bits.value_or(64);
        switch (variant) {
            case Variant::ddtm:
            case Variant::ddtm_nocpl:
                DDTM_REQUIRE(total % 2 == 0, "--bits must be even to divide the dimensions equally");
                h.comment_bits = total / 2;
                h.thread_bits = total / 2;
                break;
            case Variant::rs_comment:
                h.comment_bits = total;
                h.thread_bits = 0;
                break;
            case Variant::rs_thread:
                h.comment_bits = 0;
                h.thread_bits = total;
                break;
            case Variant::unigram:
                h.comment_bits = 0;
                h.thread_bits = 0;
                break;
        }
        if (comment_bits) h.comment_bits = *comment_bits;
        if (thread_bits) h.thread_bits = *thread_bits;
        h.validate();
        return h;
    }

    json effective(const std::string& command) const {
        json out = raw;
        out["command"] = command;
        out["seed"] = seed;
        out["workers"] = workers;
        out["hidden"]["variant"] = variant_name(variant);
        if (bits) out["hidden"]["bits"] = *bits;
        if (comment_bits) out["hidden"]["comment_bits"] = *comment_bits;
        if (thread_bits) out["hidden"]["thread_bits"] = *thread_bits;
        out["schedule"] = {{"max_sweeps", schedule.max_sweeps},
                           {"tolerance", schedule.tolerance},
                           {"init_phi_from_psi", schedule.init_phi_from_psi}};
        out["ais"] = {{"num_intermediate", ais.num_intermediate},
                      {"num_runs", ais.num_runs},
                      {"gibbs_sweeps", ais.gibbs_sweeps},
                      {"path", ais.path == AnnealPath::geometric ? "geometric" : "linear"}};
        out["train"]["epochs"] = train.epochs;
        out["train"]["step_size"] = train.adam.step_size;
        out["split"]["test_fraction"] = test_fraction;
        return out;
    }
};

void write_effective_config(const RunConfig& cfg, const std::string& command, const fs::path& dir) {
    fs::path target = dir.empty() ? fs::path(".") : dir;
    fs::create_directories(target);
    std::ofstream out(target / "effective_config.json", std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write effective config in " + target.string());
    out << cfg.effective(command).dump(2) << '\n';
}

ModelParams load_model(const std::string& path, const RunConfig& cfg) {
    ModelParams params = load_checkpoint(path);
    if (!params.blocks.all_finite()) {
        throw NumericError("checkpoint '" + path + "' contains non-finite parameters");
    }
    // explicit run dimensions must match the checkpoint header
    if (cfg.bits || cfg.comment_bits || cfg.thread_bits) {
        RunConfig probe = cfg;
        probe.variant = params.cfg.variant;
        HiddenConfig expected = probe.hidden_config();
        if (expected.comment_bits != params.cfg.comment_bits ||
            expected.thread_bits != params.cfg.thread_bits) {
            throw InputError("checkpoint '" + path + "' has dimensions F_c=" +
                             std::to_string(params.cfg.comment_bits) + ", F_t=" +
                             std::to_string(params.cfg.thread_bits) +
                             " but the run requests F_c=" + std::to_string(expected.comment_bits) +
                             ", F_t=" + std::to_string(expected.thread_bits));
        }
    }
    return params;
}

std::vector<const Thread*> select_split(const Corpus& corpus, const std::string& split) {
    if (split == "train") return corpus.train_threads();
    if (split == "test") return corpus.test_threads();
    if (split == "all") {
        std::vector<const Thread*> all;
        for (const auto& t : corpus.threads) all.push_back(&t);
        return all;
    }
    throw InputError("unknown split: " + split);
}

// --- commands -------------------------------------------------------------------

int cmd_preprocess(const RunConfig& cfg, const std::string& input, const std::string& out_dir,
                   bool skip_bad) {
    IngestOptions opts;
    opts.skip_bad = skip_bad;
    opts.test_fraction = cfg.test_fraction;
    opts.split_seed = cfg.seed;
    IngestStats stats;
    Corpus corpus = ingest_threads(input, cfg.pipeline, std::nullopt, opts, &stats);
    save_corpus(corpus, out_dir);
    write_effective_config(cfg, "preprocess", out_dir);
    for (const auto& w : stats.warnings) std::cerr << "warning: " << w << '\n';
    double mean_len = stats.comments > 0
                          ? static_cast<double>(stats.words) / static_cast<double>(stats.comments)
                          : 0.0;
    std::cout << "threads: " << stats.threads << "\ncomments: " << stats.comments
              << "\nvocab: " << corpus.vocab.size() << "\nmean_comment_words: " << mean_len
              << "\nskipped: " << stats.skipped << '\n';
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, const std::string& preset,
              int n_threads, int vocab, int comments, int64_t words_min, int64_t words_max,
              const std::string& params_path, bool emit_raw) {
    ModelParams params;
    if (!params_path.empty()) {
        params = load_model(params_path, cfg);
    } else {
        HiddenConfig hidden = cfg.hidden_config();
        params = synth_preset_params(preset, vocab, hidden.comment_bits, hidden.thread_bits,
                                     cfg.seed);
    }

    SynthOptions opts;
    opts.num_threads = n_threads;
    opts.seed = cfg.seed;
    opts.test_fraction = cfg.test_fraction;
    if (preset == "two_regime" || preset == "two-regime") {
        opts.regimes = two_regime_patterns(params.cfg.thread_bits);
    }
    std::vector<ThreadShape> shapes;
    Rng shape_rng = Rng::derive(cfg.seed, 0x51a9e);
    for (int i = 0; i < 16; ++i) {
        shapes.push_back(random_tree_shape(comments, words_min, words_max, shape_rng));
    }
    Corpus corpus = synth_corpus(params, shapes, opts);
    save_corpus(corpus, out_dir);
    save_checkpoint(params, (fs::path(out_dir) / "generator_params.ddtm").string());
    write_effective_config(cfg, "synth", out_dir);

    if (emit_raw) {
        std::ofstream raw(fs::path(out_dir) / "raw.jsonl", std::ios::binary);
        for (const auto& t : corpus.threads) {
            json jt;
            jt["id"] = t.id;
            jt["subreddit"] = t.subreddit;
            json comments_json = json::array();
            for (const auto& bag : t.comments) {
                std::string body;
                for (auto& [k, n] : bag.counts) {
                    for (int64_t i = 0; i < n; ++i) {
                        if (!body.empty()) body += ' ';
                        body += corpus.vocab.token(k);
                    }
                }
                json jc;
                jc["id"] = bag.id;
                if (bag.parent) {
                    jc["parent_id"] = t.comments[static_cast<size_t>(*bag.parent)].id;
                } else {
                    jc["parent_id"] = nullptr;
                }
                jc["body"] = body;
                jc["upvotes"] = bag.upvotes;
                jc["has_deleted_child"] = bag.has_deleted_child;
                comments_json.push_back(std::move(jc));
            }
            jt["comments"] = std::move(comments_json);
            raw << jt.dump() << '\n';
        }
    }
    std::cout << "threads: " << corpus.threads.size() << "\nvocab: " << corpus.vocab.size() << '\n';
    return kExitOk;
}

int cmd_train(RunConfig& cfg, const std::string& corpus_dir, const std::string& out_dir,
              std::optional<int> epochs_flag) {
    Corpus corpus = load_corpus(corpus_dir);
    auto train_set = corpus.train_threads();
    auto heldout = corpus.test_threads();
    DDTM_REQUIRE(!train_set.empty(), "training split is empty");
    if (epochs_flag) cfg.train.epochs = *epochs_flag;

    HiddenConfig hidden = cfg.hidden_config();
    VectorXd logp = unigram_log_probs(train_set, corpus.vocab.size());
    ModelParams init = init_params(hidden, corpus.vocab.size(), logp, cfg.seed);

    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train_log.csv", std::ios::binary);
    log << "epoch,threads_seen,mean_approx_ll,heldout_approx_ll,wallclock_s\n";

    EpochCallback callback;
    if (cfg.train.checkpoint_every > 0) {
        callback = [&](int epoch, const ModelParams& params, const EpochDiagnostics&) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_epoch%04d.ddtm", epoch);
            save_checkpoint(params, (fs::path(out_dir) / name).string());
        };
    }
    TrainResult result = train(train_set, heldout, init, cfg.train, callback);
    for (const auto& d : result.diagnostics) {
        log << d.epoch << ',' << d.threads_seen << ',' << d.mean_approx_ll << ','
            << d.heldout_approx_ll << ',' << d.wallclock_s << '\n';
        if (d.rejected_steps > 0) {
            std::cerr << "warning: epoch " << d.epoch << " rejected " << d.rejected_steps
                      << " non-finite steps\n";
        }
    }
    save_checkpoint(result.params, (fs::path(out_dir) / "final.ddtm").string());
    write_effective_config(cfg, "train", out_dir);
    std::cout << "epochs: " << result.diagnostics.size() << "\ncheckpoint: "
              << (fs::path(out_dir) / "final.ddtm").string() << '\n';
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& corpus_dir, const std::string& checkpoint,
             const std::string& out_path, bool with_oracle, int max_k) {
    Corpus corpus = load_corpus(corpus_dir);
    ModelParams params = load_model(checkpoint, cfg);
    DDTM_REQUIRE(!corpus.split.test_ids.empty(), "corpus has no test split");

    EvalOptions opts;
    opts.ais = cfg.ais;
    opts.sched = cfg.schedule;
    opts.with_oracle = with_oracle;
    opts.workers = cfg.workers;
    opts.retrieval_max_k = max_k;
    json report = evaluation_report(corpus, params, opts);

    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary);
    DDTM_REQUIRE(file.good(), "cannot write report: " + out_path);
    file << report.dump(2) << '\n';

    if (report.contains("pr_curve")) {
        PRCurve curve;
        for (const auto& point : report["pr_curve"]) {
            curve.recall.push_back(point[0].get<double>());
            curve.precision.push_back(point[1].get<double>());
        }
        write_pr_curve_csv(curve, out.string() + ".pr.csv");
    }
    write_effective_config(cfg, "eval", out.parent_path());
    std::cout << "perplexity_nats: " << report["perplexity_nats"].get<double>() << '\n';
    return kExitOk;
}

int cmd_infer(const RunConfig& cfg, const std::string& corpus_dir, const std::string& checkpoint,
              const std::string& out_path, const std::string& split) {
    Corpus corpus = load_corpus(corpus_dir);
    ModelParams params = load_model(checkpoint, cfg);
    std::vector<const Thread*> threads = select_split(corpus, split);
    DDTM_REQUIRE(!threads.empty(), "selected split is empty");

    std::sort(threads.begin(), threads.end(),
              [](const Thread* a, const Thread* b) { return a->id < b->id; });
    std::vector<PosteriorMF> states(threads.size());
    parallel_for(static_cast<int>(threads.size()), cfg.workers, [&](int i) {
        states[static_cast<size_t>(i)] =
            fit_posterior(*threads[static_cast<size_t>(i)], params, cfg.schedule);
    });

    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary);
    DDTM_REQUIRE(file.good(), "cannot write inference dump: " + out_path);
    for (size_t i = 0; i < threads.size(); ++i) {
        const Thread& t = *threads[i];
        json thread_record;
        thread_record["thread"] = t.id;
        thread_record["comment"] = nullptr;
        thread_record["psi0"] = std::vector<double>(
            states[i].psi0.data(), states[i].psi0.data() + states[i].psi0.size());
        file << thread_record.dump() << '\n';
        for (int n = 0; n < t.size(); ++n) {
            json record;
            record["thread"] = t.id;
            record["comment"] = t.comments[static_cast<size_t>(n)].id;
            VectorXd psi = states[i].psi.col(n);
            record["psi"] = std::vector<double>(psi.data(), psi.data() + psi.size());
            record["psi0_ref"] = true;
            file << record.dump() << '\n';
        }
    }
    write_effective_config(cfg, "infer", out.parent_path());
    std::cout << "threads: " << threads.size() << '\n';
    return kExitOk;
}

int cmd_retrieve(const RunConfig& cfg, const std::string& corpus_dir,
                 const std::string& checkpoint, const std::string& out_path,
                 const std::string& query, int top_k, int max_k) {
    Corpus corpus = load_corpus(corpus_dir);
    ModelParams params = load_model(checkpoint, cfg);
    FeatureSource source = default_feature_source(params.cfg.variant);

    EmbeddingSet candidates =
        extract_embeddings(corpus.train_threads(), params, cfg.schedule, source, cfg.workers);
    std::vector<std::string> cand_ids(candidates.thread_ids.size());
    for (size_t i = 0; i < cand_ids.size(); ++i) {
        cand_ids[i] = candidates.thread_ids[i] + "/" + candidates.comment_ids[i];
    }

    json out_json;
    if (!query.empty()) {
        // a single query "thread_id/comment_id", from any split
        auto slash = query.find('/');
        DDTM_REQUIRE(slash != std::string::npos, "query must look like thread_id/comment_id");
        std::string tid = query.substr(0, slash), cid = query.substr(slash + 1);
        const Thread* t = corpus.find_thread(tid);
        DDTM_REQUIRE(t != nullptr, "query thread not found: " + tid);
        EmbeddingSet q = extract_embeddings({t}, params, cfg.schedule, source, 1);
        int row = -1;
        for (size_t i = 0; i < q.comment_ids.size(); ++i) {
            if (q.comment_ids[i] == cid) row = static_cast<int>(i);
        }
        DDTM_REQUIRE(row >= 0, "query comment not found in thread: " + query);
        auto ranked = rank_by_dice(q.features.row(row).transpose(), candidates.features, cand_ids);
        json items = json::array();
        for (int k = 0; k < std::min<int>(top_k, static_cast<int>(ranked.size())); ++k) {
            const auto& item = ranked[static_cast<size_t>(k)];
            items.push_back({{"thread", candidates.thread_ids[static_cast<size_t>(item.index)]},
                             {"comment", candidates.comment_ids[static_cast<size_t>(item.index)]},
                             {"dice", item.score}});
        }
        out_json["query"] = query;
        out_json["results"] = std::move(items);
    } else {
        EmbeddingSet queries =
            extract_embeddings(corpus.test_threads(), params, cfg.schedule, source, cfg.workers);
        PRCurve curve = retrieval_pr(queries, candidates, max_k);
        json pr = json::array();
        for (size_t k = 0; k < curve.recall.size(); ++k) {
            pr.push_back({curve.recall[k], curve.precision[k]});
        }
        out_json["queries"] = queries.features.rows();
        out_json["candidates"] = candidates.features.rows();
        out_json["precision_at_10"] =
            static_cast<int>(curve.precision.size()) >= 10 ? precision_at_k(curve, 10) : 0.0;
        out_json["pr_curve"] = std::move(pr);
        write_pr_curve_csv(curve, out_path + ".pr.csv");
    }

    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary);
    DDTM_REQUIRE(file.good(), "cannot write retrieval output: " + out_path);
    file << out_json.dump(2) << '\n';
    write_effective_config(cfg, "retrieve", out.parent_path());
    return kExitOk;
}

int cmd_topics(const RunConfig& cfg, const std::string& checkpoint, const std::string& out_path,
               const std::string& corpus_dir, const std::string& vocab_path, int top_n,
               const std::string& reconstruct) {
    ModelParams params = load_model(checkpoint, cfg);
    Vocabulary vocab;
    std::optional<Corpus> corpus;
    if (!corpus_dir.empty()) {
        corpus = load_corpus(corpus_dir);
        vocab = corpus->vocab;
    } else {
        DDTM_REQUIRE(!vocab_path.empty(), "topics needs --corpus-dir or --vocab");
        vocab = load_vocab(vocab_path);
    }
    DDTM_REQUIRE(vocab.size() == params.vocab_size(), "vocabulary does not match the checkpoint");

    auto top_tokens = [&](const VectorXd& weights) {
        std::vector<int> order(static_cast<size_t>(vocab.size()));
        for (int k = 0; k < vocab.size(); ++k) order[static_cast<size_t>(k)] = k;
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            if (weights[x] != weights[y]) return weights[x] > weights[y];
            return x < y;
        });
        std::string line;
        for (int i = 0; i < std::min(top_n, vocab.size()); ++i) {
            if (!line.empty()) line += ' ';
            line += vocab.token(order[static_cast<size_t>(i)]);
        }
        return line;
    };

    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary);
    DDTM_REQUIRE(file.good(), "cannot write topics: " + out_path);
    for (int f = 0; f < params.cfg.comment_bits; ++f) {
        file << "comment_bit " << f << ": " << top_tokens(params.blocks.U.row(f).transpose()) << '\n';
    }
    for (int f = 0; f < params.cfg.thread_bits; ++f) {
        file << "thread_bit " << f << ": " << top_tokens(params.blocks.V.row(f).transpose()) << '\n';
    }

    if (!reconstruct.empty()) {
        DDTM_REQUIRE(corpus.has_value(), "--reconstruct needs --corpus-dir");
        auto slash = reconstruct.find('/');
        DDTM_REQUIRE(slash != std::string::npos,
                     "--reconstruct must look like thread_id/comment_id");
        std::string tid = reconstruct.substr(0, slash), cid = reconstruct.substr(slash + 1);
        const Thread* t = corpus->find_thread(tid);
        DDTM_REQUIRE(t != nullptr, "thread not found: " + tid);
        int index = -1;
        for (int n = 0; n < t->size(); ++n) {
            if (t->comments[static_cast<size_t>(n)].id == cid) index = n;
        }
        DDTM_REQUIRE(index >= 0, "comment not found: " + reconstruct);
        PosteriorMF state = fit_posterior(*t, params, cfg.schedule);
        VectorXd scores = params.blocks.U.transpose() * state.psi.col(index);
        file << "reconstruction " << reconstruct << ": " << top_tokens(scores) << '\n';
    }
    write_effective_config(cfg, "topics", out.parent_path());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discursive distributed topic model over reply trees"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOptions global;
    app.add_option("--config", global.config_path, "run configuration file (JSON)");
    uint64_t seed_value = 0;
    auto* seed_opt =
        app.add_option("--seed", seed_value, "random seed (mandatory here or in the config)");
    int workers_value = 1;
    auto* workers_opt = app.add_option("--workers", workers_value, "worker threads");
    std::string variant_value;
    auto* variant_opt = app.add_option(
        "--variant", variant_value, "ddtm | ddtm-nocpl | rs-comment | rs-thread | unigram");
    int bits_value = 64;
    auto* bits_opt = app.add_option("--bits", bits_value, "total embedding bits (default 64)");

    auto* pre = app.add_subcommand("preprocess", "tokenize a raw JSONL corpus");
    std::string pre_input, pre_out;
    bool pre_skip_bad = false;
    pre->add_option("--input", pre_input, "raw JSONL thread file")->required();
    pre->add_option("--out-dir", pre_out, "output corpus directory")->required();
    pre->add_flag("--skip-bad", pre_skip_bad, "skip malformed threads with a warning");
    std::string pre_stemmer;
    pre->add_option("--stemmer", pre_stemmer, "none | snowball_english");
    int pre_cap = 0;
    pre->add_option("--vocab-cap", pre_cap, "vocabulary size cap");
    double pre_test_fraction = -1.0;
    pre->add_option("--test-fraction", pre_test_fraction, "held-out fraction of threads");

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus from the model");
    std::string synth_out, synth_preset = "coupled", synth_params;
    int synth_threads = 200, synth_vocab = 40, synth_comments = 4;
    int64_t synth_words_min = 4, synth_words_max = 9;
    bool synth_raw = false;
    synth->add_option("--out-dir", synth_out, "output corpus directory")->required();
    synth->add_option("--preset", synth_preset, "uniform | coupled | two-regime");
    synth->add_option("--params", synth_params, "generator checkpoint (overrides --preset)");
    synth->add_option("--threads", synth_threads, "number of threads to sample");
    synth->add_option("--vocab", synth_vocab, "vocabulary size");
    synth->add_option("--comments", synth_comments, "comments per thread");
    synth->add_option("--words-min", synth_words_min, "minimum words per comment");
    synth->add_option("--words-max", synth_words_max, "maximum words per comment");
    synth->add_flag("--emit-raw", synth_raw, "also write raw.jsonl with token bodies");

    auto* train_cmd = app.add_subcommand("train", "train a model on a preprocessed corpus");
    std::string train_corpus, train_out;
    train_cmd->add_option("--corpus-dir", train_corpus, "preprocessed corpus directory")->required();
    train_cmd->add_option("--out-dir", train_out, "output directory")->required();
    int train_epochs = -1;
    train_cmd->add_option("--epochs", train_epochs, "training epochs");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_corpus, eval_ckpt, eval_out = "report.json";
    bool eval_oracle = false;
    int eval_max_k = 50;
    eval_cmd->add_option("--corpus-dir", eval_corpus, "corpus directory")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--out", eval_out, "report path (JSON)");
    eval_cmd->add_flag("--oracle", eval_oracle, "include exact log Z where enumerable");
    eval_cmd->add_option("--max-k", eval_max_k, "retrieval cutoff");
    int eval_intermediate = -1, eval_runs = -1;
    eval_cmd->add_option("--ais-intermediate", eval_intermediate, "AIS intermediate distributions");
    eval_cmd->add_option("--ais-runs", eval_runs, "AIS runs");

    auto* infer_cmd = app.add_subcommand("infer", "dump posterior embeddings");
    std::string infer_corpus, infer_ckpt, infer_out = "psi.jsonl", infer_split = "test";
    infer_cmd->add_option("--corpus-dir", infer_corpus, "corpus directory")->required();
    infer_cmd->add_option("--checkpoint", infer_ckpt, "model checkpoint")->required();
    infer_cmd->add_option("--out", infer_out, "output JSONL path");
    infer_cmd->add_option("--split", infer_split, "train | test | all");

    auto* retrieve_cmd = app.add_subcommand("retrieve", "rank candidates by Dice similarity");
    std::string ret_corpus, ret_ckpt, ret_out = "retrieval.json", ret_query;
    int ret_k = 10, ret_max_k = 50;
    retrieve_cmd->add_option("--corpus-dir", ret_corpus, "corpus directory")->required();
    retrieve_cmd->add_option("--checkpoint", ret_ckpt, "model checkpoint")->required();
    retrieve_cmd->add_option("--out", ret_out, "output JSON path");
    retrieve_cmd->add_option("--query", ret_query, "single query thread_id/comment_id");
    retrieve_cmd->add_option("--k", ret_k, "results per query");
    retrieve_cmd->add_option("--max-k", ret_max_k, "PR-curve cutoff");

    auto* topics_cmd = app.add_subcommand("topics", "inspect per-bit emission weights");
    std::string top_ckpt, top_out = "topics.txt", top_corpus, top_vocab, top_reconstruct;
    int top_n = 10;
    topics_cmd->add_option("--checkpoint", top_ckpt, "model checkpoint")->required();
    topics_cmd->add_option("--out", top_out, "output text path");
    topics_cmd->add_option("--corpus-dir", top_corpus, "corpus directory (for reconstructions)");
    topics_cmd->add_option("--vocab", top_vocab, "vocabulary file (when no corpus dir)");
    topics_cmd->add_option("--top", top_n, "tokens per bit");
    topics_cmd->add_option("--reconstruct", top_reconstruct, "thread_id/comment_id to reconstruct");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*seed_opt) global.seed = seed_value;
        if (*workers_opt) global.workers = workers_value;
        if (*variant_opt) global.variant = variant_value;
        if (*bits_opt) global.bits = bits_value;
        RunConfig cfg = RunConfig::load(global);

        if (pre->parsed()) {
            if (!pre_stemmer.empty()) {
                cfg.pipeline.stemmer = pre_stemmer == "snowball_english"
                                           ? StemmerKind::snowball_english
                                           : StemmerKind::none;
            }
            if (pre_cap > 0) cfg.pipeline.vocab_cap = pre_cap;
            if (pre_test_fraction >= 0.0) cfg.test_fraction = pre_test_fraction;
            return cmd_preprocess(cfg, pre_input, pre_out, pre_skip_bad);
        }
        if (synth->parsed()) {
            return cmd_synth(cfg, synth_out, synth_preset, synth_threads, synth_vocab,
                             synth_comments, synth_words_min, synth_words_max, synth_params,
                             synth_raw);
        }
        if (train_cmd->parsed()) {
            return cmd_train(cfg, train_corpus, train_out,
                             train_epochs >= 0 ? std::optional<int>(train_epochs) : std::nullopt);
        }
        if (eval_cmd->parsed()) {
            if (eval_intermediate > 0) cfg.ais.num_intermediate = eval_intermediate;
            if (eval_runs > 0) cfg.ais.num_runs = eval_runs;
            return cmd_eval(cfg, eval_corpus, eval_ckpt, eval_out, eval_oracle, eval_max_k);
        }
        if (infer_cmd->parsed()) {
            return cmd_infer(cfg, infer_corpus, infer_ckpt, infer_out, infer_split);
        }
        if (retrieve_cmd->parsed()) {
            return cmd_retrieve(cfg, ret_corpus, ret_ckpt, ret_out, ret_query, ret_k, ret_max_k);
        }
        if (topics_cmd->parsed()) {
            return cmd_topics(cfg, top_ckpt, top_out, top_corpus, top_vocab, top_n,
                              top_reconstruct);
        }
        std::cerr << "no subcommand given\n";
        return kExitInputError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumericError;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}
