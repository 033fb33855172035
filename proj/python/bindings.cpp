#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddtm/eval.hpp"
#include "ddtm/stemmer.hpp"
#include "ddtm/synth.hpp"

namespace py = pybind11;
using namespace ddtm;

namespace {

std::vector<const Thread*> split_threads(const Corpus& corpus, const std::string& split) {
    if (split == "train") return corpus.train_threads();
    if (split == "test") return corpus.test_threads();
    std::vector<const Thread*> all;
    for (const auto& t : corpus.threads) all.push_back(&t);
    return all;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "globally normalized topic model over reply trees";

    py::register_exception<InputError>(m, "InputError");
    py::register_exception<NumericError>(m, "NumericError");

    // --- corpus ------------------------------------------------------------
    py::enum_<StemmerKind>(m, "StemmerKind")
        .value("none", StemmerKind::none)
        .value("snowball_english", StemmerKind::snowball_english);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("lowercase", &PipelineConfig::lowercase)
        .def_readwrite("strip_special_chars", &PipelineConfig::strip_special_chars)
        .def_readwrite("url_to_domain_token", &PipelineConfig::url_to_domain_token)
        .def_readwrite("stemmer", &PipelineConfig::stemmer)
        .def_readwrite("stopword_list", &PipelineConfig::stopword_list)
        .def_readwrite("vocab_cap", &PipelineConfig::vocab_cap);

    m.def("preprocess_text", &preprocess_text, py::arg("body"),
          py::arg("cfg") = PipelineConfig{});
    m.def("stem_english", &stem_english, py::arg("word"));
    m.def("url_domain_label", &url_domain_label, py::arg("url"));

    py::class_<Vocabulary>(m, "Vocabulary")
        .def(py::init<std::vector<std::string>>())
        .def("__len__", &Vocabulary::size)
        .def("token", &Vocabulary::token)
        .def("lookup", &Vocabulary::lookup)
        .def_property_readonly("tokens", &Vocabulary::tokens);

    m.def("build_vocab", &build_vocab, py::arg("docs"), py::arg("cap"));

    py::class_<CommentBag>(m, "CommentBag")
        .def_readonly("id", &CommentBag::id)
        .def_readonly("counts", &CommentBag::counts)
        .def_readonly("length", &CommentBag::length)
        .def_readonly("parent", &CommentBag::parent)
        .def_readonly("children", &CommentBag::children)
        .def_readonly("upvotes", &CommentBag::upvotes)
        .def_readonly("has_deleted_child", &CommentBag::has_deleted_child);

    py::class_<Thread>(m, "Thread")
        .def_readonly("id", &Thread::id)
        .def_readonly("subreddit", &Thread::subreddit)
        .def_readonly("comments", &Thread::comments)
        .def_readonly("reply_edges", &Thread::reply_edges)
        .def("total_words", &Thread::total_words)
        .def("__len__", &Thread::size);

    py::class_<Split>(m, "Split")
        .def_readonly("train_ids", &Split::train_ids)
        .def_readonly("test_ids", &Split::test_ids);

    py::class_<Corpus>(m, "Corpus")
        .def_readonly("vocab", &Corpus::vocab)
        .def_readonly("threads", &Corpus::threads)
        .def_readonly("split", &Corpus::split);

    m.def("ingest_threads",
          [](const std::string& path, const PipelineConfig& cfg, double test_fraction,
             uint64_t seed, bool skip_bad) {
              IngestOptions opts;
              opts.test_fraction = test_fraction;
              opts.split_seed = seed;
              opts.skip_bad = skip_bad;
              return ingest_threads(path, cfg, std::nullopt, opts);
          },
          py::arg("path"), py::arg("cfg") = PipelineConfig{}, py::arg("test_fraction") = 0.1,
          py::arg("seed") = 0, py::arg("skip_bad") = false);
    m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("dir"));
    m.def("load_corpus", &load_corpus, py::arg("dir"));

    // --- model ---------------------------------------------------------------
    py::enum_<Variant>(m, "Variant")
        .value("ddtm", Variant::ddtm)
        .value("ddtm_nocpl", Variant::ddtm_nocpl)
        .value("rs_comment", Variant::rs_comment)
        .value("rs_thread", Variant::rs_thread)
        .value("unigram", Variant::unigram);

    py::class_<HiddenConfig>(m, "HiddenConfig")
        .def(py::init([](int comment_bits, int thread_bits, Variant variant) {
                 HiddenConfig cfg{comment_bits, thread_bits, variant};
                 cfg.validate();
                 return cfg;
             }),
             py::arg("comment_bits"), py::arg("thread_bits"), py::arg("variant") = Variant::ddtm)
        .def_readwrite("comment_bits", &HiddenConfig::comment_bits)
        .def_readwrite("thread_bits", &HiddenConfig::thread_bits)
        .def_readwrite("variant", &HiddenConfig::variant);

    py::class_<ParamBlocks>(m, "ParamBlocks")
        .def_readwrite("U", &ParamBlocks::U)
        .def_readwrite("V", &ParamBlocks::V)
        .def_readwrite("W", &ParamBlocks::W)
        .def_readwrite("a", &ParamBlocks::a)
        .def_readwrite("b", &ParamBlocks::b)
        .def_readwrite("c", &ParamBlocks::c)
        .def_readwrite("b_start", &ParamBlocks::b_start)
        .def_readwrite("b_stop", &ParamBlocks::b_stop);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readwrite("cfg", &ModelParams::cfg)
        .def_readwrite("blocks", &ModelParams::blocks)
        .def_property_readonly("vocab_size", &ModelParams::vocab_size);

    m.def("zero_params", [](int vocab, const HiddenConfig& cfg) {
        ModelParams p;
        p.cfg = cfg;
        p.blocks = ParamBlocks::zeros(vocab, cfg.comment_bits, cfg.thread_bits);
        return p;
    }, py::arg("vocab"), py::arg("cfg"));
    m.def("init_params", &init_params, py::arg("cfg"), py::arg("vocab"),
          py::arg("unigram_log_probs"), py::arg("seed"));
    m.def("unigram_log_probs",
          [](const Corpus& corpus, const std::string& split) {
              return unigram_log_probs(split_threads(corpus, split), corpus.vocab.size());
          },
          py::arg("corpus"), py::arg("split") = "train");
    m.def("apply_variant", &apply_variant, py::arg("params"), py::arg("variant"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    m.def("energy",
          [](const Thread& t, const MatrixXd& h, const VectorXd& h0, const ModelParams& params) {
              HiddenAssignment assign;
              assign.h = h.cast<uint8_t>();
              assign.h0 = h0.cast<uint8_t>();
              return energy(t, assign, params);
          },
          py::arg("thread"), py::arg("h"), py::arg("h0"), py::arg("params"),
          "Energy of one configuration; h is F_c x N 0/1, h0 is F_t 0/1.");

    // --- inference -----------------------------------------------------------
    py::class_<MFSchedule>(m, "MFSchedule")
        .def(py::init([](int max_sweeps, double tolerance, bool init_phi_from_psi) {
                 MFSchedule s{max_sweeps, tolerance, init_phi_from_psi};
                 s.validate();
                 return s;
             }),
             py::arg("max_sweeps") = 10, py::arg("tolerance") = 1e-4,
             py::arg("init_phi_from_psi") = true)
        .def_readwrite("max_sweeps", &MFSchedule::max_sweeps)
        .def_readwrite("tolerance", &MFSchedule::tolerance)
        .def_readwrite("init_phi_from_psi", &MFSchedule::init_phi_from_psi);

    py::class_<PosteriorMF>(m, "PosteriorMF")
        .def_readonly("psi", &PosteriorMF::psi)
        .def_readonly("psi0", &PosteriorMF::psi0)
        .def_readonly("bound", &PosteriorMF::bound)
        .def_readonly("sweeps", &PosteriorMF::sweeps);

    py::class_<JointMF>(m, "JointMF")
        .def_readonly("phi", &JointMF::phi)
        .def_readonly("phi0", &JointMF::phi0)
        .def_readonly("gamma", &JointMF::gamma)
        .def_readonly("bound", &JointMF::bound)
        .def_readonly("sweeps", &JointMF::sweeps);

    m.def("fit_posterior",
          [](const Thread& t, const ModelParams& p, const MFSchedule& s) {
              return fit_posterior(t, p, s);
          },
          py::arg("thread"), py::arg("params"), py::arg("schedule") = MFSchedule{});
    m.def("fit_joint",
          [](const Thread& t, const ModelParams& p, const MFSchedule& s,
             const PosteriorMF* warm) { return fit_joint(t, p, s, warm); },
          py::arg("thread"), py::arg("params"), py::arg("schedule") = MFSchedule{},
          py::arg("warm_psi") = nullptr);
    m.def("approx_log_likelihood",
          [](const Thread& t, const ModelParams& p, const MFSchedule& s) {
              return approx_log_likelihood(t, p, s);
          },
          py::arg("thread"), py::arg("params"), py::arg("schedule") = MFSchedule{});

    // --- training -------------------------------------------------------------
    py::class_<AdamConfig>(m, "AdamConfig")
        .def(py::init<>())
        .def_readwrite("step_size", &AdamConfig::step_size)
        .def_readwrite("beta1", &AdamConfig::beta1)
        .def_readwrite("beta2", &AdamConfig::beta2)
        .def_readwrite("eps", &AdamConfig::eps);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("schedule", &TrainConfig::schedule)
        .def_readwrite("variant", &TrainConfig::variant)
        .def_readwrite("adam", &TrainConfig::adam)
        .def_readwrite("early_stop", &TrainConfig::early_stop)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("minibatch", &TrainConfig::minibatch)
        .def_readwrite("workers", &TrainConfig::workers);

    py::class_<EpochDiagnostics>(m, "EpochDiagnostics")
        .def_readonly("epoch", &EpochDiagnostics::epoch)
        .def_readonly("threads_seen", &EpochDiagnostics::threads_seen)
        .def_readonly("mean_approx_ll", &EpochDiagnostics::mean_approx_ll)
        .def_readonly("heldout_approx_ll", &EpochDiagnostics::heldout_approx_ll)
        .def_readonly("wallclock_s", &EpochDiagnostics::wallclock_s)
        .def_readonly("rejected_steps", &EpochDiagnostics::rejected_steps);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("params", &TrainResult::params)
        .def_readonly("diagnostics", &TrainResult::diagnostics)
        .def_readonly("best_epoch", &TrainResult::best_epoch);

    m.def("train",
          [](const Corpus& corpus, const ModelParams& init, const TrainConfig& cfg) {
              return train(corpus.train_threads(), corpus.test_threads(), init, cfg);
          },
          py::arg("corpus"), py::arg("init"), py::arg("cfg"),
          "Train on the corpus train split, validating on the test split.");
    m.def("mean_approx_log_likelihood",
          [](const Corpus& corpus, const std::string& split, const ModelParams& p,
             const MFSchedule& s) {
              return mean_approx_log_likelihood(split_threads(corpus, split), p, s);
          },
          py::arg("corpus"), py::arg("split"), py::arg("params"),
          py::arg("schedule") = MFSchedule{});

    // --- evaluation -------------------------------------------------------------
    py::class_<ThreadShape>(m, "ThreadShape")
        .def(py::init([](std::vector<int> parents, std::vector<int64_t> lengths) {
                 return ThreadShape{std::move(parents), std::move(lengths)};
             }),
             py::arg("parents"), py::arg("lengths"))
        .def_static("of", &ThreadShape::of)
        .def_readonly("parents", &ThreadShape::parents)
        .def_readonly("lengths", &ThreadShape::lengths);

    m.def("exact_log_z", &exact_log_z, py::arg("shape"), py::arg("params"),
          py::arg("log2_limit") = kDefaultLog2Limit);
    m.def("exact_marginal_energy", &exact_marginal_energy, py::arg("thread"), py::arg("params"),
          py::arg("log2_limit") = kDefaultLog2Limit);
    m.def("exact_log_likelihood", &exact_log_likelihood, py::arg("thread"), py::arg("params"),
          py::arg("log2_limit") = kDefaultLog2Limit);

    py::enum_<AnnealPath>(m, "AnnealPath")
        .value("linear", AnnealPath::linear)
        .value("geometric", AnnealPath::geometric);

    py::class_<AISConfig>(m, "AISConfig")
        .def(py::init<>())
        .def_readwrite("num_intermediate", &AISConfig::num_intermediate)
        .def_readwrite("num_runs", &AISConfig::num_runs)
        .def_readwrite("path", &AISConfig::path)
        .def_readwrite("gibbs_sweeps", &AISConfig::gibbs_sweeps)
        .def_readwrite("seed", &AISConfig::seed);

    py::class_<AISResult>(m, "AISResult")
        .def_readonly("log_weights", &AISResult::log_weights)
        .def_readonly("base_log_z", &AISResult::base_log_z)
        .def_readonly("log_z", &AISResult::log_z)
        .def_readonly("standard_error", &AISResult::standard_error);

    m.def("ais_log_z", &ais_log_z, py::arg("shape"), py::arg("params"), py::arg("cfg"));

    py::class_<PerplexityResult>(m, "PerplexityResult")
        .def_readonly("nats_per_word", &PerplexityResult::nats_per_word)
        .def_readonly("perplexity_exp", &PerplexityResult::perplexity_exp)
        .def_readonly("total_log_p", &PerplexityResult::total_log_p)
        .def_readonly("total_words", &PerplexityResult::total_words)
        .def_readonly("mean_ais_se", &PerplexityResult::mean_ais_se);

    m.def("perplexity",
          [](const Corpus& corpus, const ModelParams& params, const AISConfig& ais,
             const MFSchedule& sched, const std::string& split) {
              return perplexity(split_threads(corpus, split), params, ais, sched);
          },
          py::arg("corpus"), py::arg("params"), py::arg("ais") = AISConfig{},
          py::arg("schedule") = MFSchedule{}, py::arg("split") = "test");

    m.def("dice_similarity", &dice_similarity, py::arg("a"), py::arg("b"));
    m.def("evaluation_report",
          [](const Corpus& corpus, const ModelParams& params, const AISConfig& ais,
             const MFSchedule& sched, bool with_oracle) {
              EvalOptions opts;
              opts.ais = ais;
              opts.sched = sched;
              opts.with_oracle = with_oracle;
              return evaluation_report(corpus, params, opts).dump();
          },
          py::arg("corpus"), py::arg("params"), py::arg("ais") = AISConfig{},
          py::arg("schedule") = MFSchedule{}, py::arg("with_oracle") = false,
          "Full evaluation, returned as a JSON string.");

    // --- synthesis -----------------------------------------------------------
    m.def("synth_preset_params", &synth_preset_params, py::arg("preset"), py::arg("vocab"),
          py::arg("comment_bits"), py::arg("thread_bits"), py::arg("seed"));
    m.def("synth_corpus",
          [](const ModelParams& params, int num_threads, int comments, int64_t words_min,
             int64_t words_max, uint64_t seed, double test_fraction, bool two_regime) {
              SynthOptions opts;
              opts.num_threads = num_threads;
              opts.seed = seed;
              opts.test_fraction = test_fraction;
              if (two_regime) opts.regimes = two_regime_patterns(params.cfg.thread_bits);
              std::vector<ThreadShape> shapes;
              Rng rng = Rng::derive(seed, 0x51a9e);
              for (int i = 0; i < 16; ++i) {
                  shapes.push_back(random_tree_shape(comments, words_min, words_max, rng));
              }
              return synth_corpus(params, shapes, opts);
          },
          py::arg("params"), py::arg("num_threads") = 100, py::arg("comments") = 4,
          py::arg("words_min") = 4, py::arg("words_max") = 9, py::arg("seed") = 0,
          py::arg("test_fraction") = 0.15, py::arg("two_regime") = false);
}
