#include "ddtm/model.hpp"

#include <cstring>
#include <fstream>

namespace ddtm {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::ddtm: return "ddtm";
        case Variant::ddtm_nocpl: return "ddtm-nocpl";
        case Variant::rs_comment: return "rs-comment";
        case Variant::rs_thread: return "rs-thread";
        case Variant::unigram: return "unigram";
    }
    return "unknown";
}

Variant variant_from_name(const std::string& name) {
    if (name == "ddtm") return Variant::ddtm;
    if (name == "ddtm-nocpl" || name == "ddtm_nocpl") return Variant::ddtm_nocpl;
    if (name == "rs-comment" || name == "rs_comment") return Variant::rs_comment;
    if (name == "rs-thread" || name == "rs_thread") return Variant::rs_thread;
    if (name == "unigram") return Variant::unigram;
    throw InputError("unknown variant: " + name);
}

void HiddenConfig::validate() const {
    DDTM_REQUIRE(comment_bits >= 0 && thread_bits >= 0, "bit counts must be nonnegative");
    switch (variant) {
        case Variant::ddtm:
        case Variant::ddtm_nocpl:
            DDTM_REQUIRE(comment_bits >= 1 && thread_bits >= 1,
                         "ddtm variants need at least one comment bit and one thread bit");
            break;
        case Variant::rs_comment:
            DDTM_REQUIRE(comment_bits >= 1, "rs-comment needs at least one comment bit");
            break;
        case Variant::rs_thread:
            DDTM_REQUIRE(thread_bits >= 1, "rs-thread needs at least one thread bit");
            break;
        case Variant::unigram:
            break;
    }
}

BlockMask variant_mask(Variant v) {
    BlockMask m;
    switch (v) {
        case Variant::ddtm:
            break;
        case Variant::ddtm_nocpl:
            m.W = false;
            break;
        case Variant::rs_comment:
            m.W = m.V = m.c = false;
            break;
        case Variant::rs_thread:
            m.U = m.W = m.b = m.b_start = m.b_stop = false;
            break;
        case Variant::unigram:
            m.U = m.V = m.W = m.b = m.c = m.b_start = m.b_stop = false;
            break;
    }
    return m;
}

ParamBlocks ParamBlocks::zeros(int vocab, int comment_bits, int thread_bits) {
    ParamBlocks p;
    p.U = MatrixXd::Zero(comment_bits, vocab);
    p.V = MatrixXd::Zero(thread_bits, vocab);
    p.W = MatrixXd::Zero(comment_bits, comment_bits);
    p.a = VectorXd::Zero(vocab);
    p.b = VectorXd::Zero(comment_bits);
    p.c = VectorXd::Zero(thread_bits);
    p.b_start = VectorXd::Zero(comment_bits);
    p.b_stop = VectorXd::Zero(comment_bits);
    return p;
}

bool ParamBlocks::all_finite() const {
    return U.allFinite() && V.allFinite() && W.allFinite() && a.allFinite() && b.allFinite() &&
           c.allFinite() && b_start.allFinite() && b_stop.allFinite();
}

void ParamBlocks::setZero() {
    for_each([](auto& m) { m.setZero(); });
}

void ParamBlocks::apply_mask(const BlockMask& m) {
    if (!m.U) U.setZero();
    if (!m.V) V.setZero();
    if (!m.W) W.setZero();
    if (!m.a) a.setZero();
    if (!m.b) b.setZero();
    if (!m.c) c.setZero();
    if (!m.b_start) b_start.setZero();
    if (!m.b_stop) b_stop.setZero();
}

void ModelParams::validate(int vocab) const {
    cfg.validate();
    DDTM_REQUIRE(blocks.vocab_size() == vocab, "parameter/vocabulary size mismatch");
    DDTM_REQUIRE(blocks.comment_bits() == cfg.comment_bits &&
                     blocks.thread_bits() == cfg.thread_bits,
                 "parameter/bit-count mismatch");
    DDTM_REQUIRE(blocks.U.rows() == cfg.comment_bits && blocks.U.cols() == vocab &&
                     blocks.V.rows() == cfg.thread_bits && blocks.V.cols() == vocab &&
                     blocks.W.rows() == cfg.comment_bits && blocks.W.cols() == cfg.comment_bits &&
                     blocks.b_start.size() == cfg.comment_bits &&
                     blocks.b_stop.size() == cfg.comment_bits,
                 "inconsistent parameter shapes");
    if (!blocks.all_finite()) throw NumericError("non-finite model parameter");
}

VectorXd dense_counts(const CommentBag& bag, int vocab) {
    VectorXd x = VectorXd::Zero(vocab);
    for (auto& [k, n] : bag.counts) x[k] = static_cast<double>(n);
    return x;
}

VectorXd emission_times_counts(const MatrixXd& M, const CommentBag& bag) {
    VectorXd out = VectorXd::Zero(M.rows());
    for (auto& [k, n] : bag.counts) out += static_cast<double>(n) * M.col(k);
    return out;
}

double energy(const Thread& thread, const HiddenAssignment& h, const ModelParams& params) {
    const ParamBlocks& p = params.blocks;
    const int n_comments = thread.size();
    DDTM_REQUIRE(h.h.cols() == n_comments && h.h.rows() == p.comment_bits() &&
                     h.h0.size() == p.thread_bits(),
                 "hidden assignment shape mismatch");

    double e = 0.0;
    VectorXd h0 = h.h0.cast<double>();
    for (int n = 0; n < n_comments; ++n) {
        const CommentBag& bag = thread.comments[static_cast<size_t>(n)];
        VectorXd hn = h.h.col(n).cast<double>();
        double dn = static_cast<double>(bag.length);
        e += hn.dot(emission_times_counts(p.U, bag));
        e += h0.dot(emission_times_counts(p.V, bag));
        for (auto& [k, cnt] : bag.counts) e += static_cast<double>(cnt) * p.a[k];
        e += dn * hn.dot(p.b);
        e += dn * h0.dot(p.c);
        if (!bag.parent) e += hn.dot(p.b_start);
        if (bag.children.empty()) e += hn.dot(p.b_stop);
    }
    for (auto& [parent, child] : thread.reply_edges) {
        e += h.h.col(parent).cast<double>().dot(p.W * h.h.col(child).cast<double>());
    }
    return e;
}

VectorXd unigram_log_probs(const std::vector<const Thread*>& threads, int vocab) {
    VectorXd counts = VectorXd::Ones(vocab);  // add-one smoothing
    for (const Thread* t : threads) {
        for (const auto& bag : t->comments) {
            for (auto& [k, n] : bag.counts) counts[k] += static_cast<double>(n);
        }
    }
    VectorXd logp = counts.array().log();
    logp.array() -= std::log(counts.sum());
    return logp;
}

ModelParams init_params(const HiddenConfig& cfg, int vocab, const VectorXd& log_probs,
                        uint64_t seed) {
    cfg.validate();
    DDTM_REQUIRE(log_probs.size() == vocab, "unigram log-prob size mismatch");

    ModelParams params;
    params.cfg = cfg;
    params.blocks = ParamBlocks::zeros(vocab, cfg.comment_bits, cfg.thread_bits);

    Rng rng = Rng::derive(seed, 1);
    const double u_std = 0.1;    // variance 0.01
    const double v_std = 0.01;   // variance 0.0001
    for (int f = 0; f < cfg.comment_bits; ++f) {
        for (int k = 0; k < vocab; ++k) params.blocks.U(f, k) = rng.normal(0.0, u_std);
    }
    for (int f = 0; f < cfg.thread_bits; ++f) {
        for (int k = 0; k < vocab; ++k) params.blocks.V(f, k) = rng.normal(0.0, v_std);
    }
    params.blocks.a = log_probs;
    params.blocks.apply_mask(variant_mask(cfg.variant));
    return params;
}

ModelParams apply_variant(const ModelParams& params, Variant v) {
    ModelParams out = params;
    out.cfg.variant = v;
    out.blocks.apply_mask(variant_mask(v));
    return out;
}

// --- checkpoint io ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'D', 'T', 'M'};
constexpr uint32_t kVersion = 1;

class Fnv1a {
public:
    void update(const void* data, size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    uint64_t value() const { return hash_; }

private:
    uint64_t hash_ = 0xcbf29ce484222325ULL;
};

class CheckpointWriter {
public:
    explicit CheckpointWriter(std::ofstream& out) : out_(out) {}

    void bytes(const void* data, size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        hash_.update(data, len);
    }
    void u32(uint32_t v) { bytes(&v, sizeof v); }  // little-endian host assumed
    void matrix(const MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double v = m(r, c);
                bytes(&v, sizeof v);
            }
        }
    }
    void vector(const VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            double x = v[i];
            bytes(&x, sizeof x);
        }
    }
    void finish() {
        uint64_t checksum = hash_.value();
        out_.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    }

private:
    std::ofstream& out_;
    Fnv1a hash_;
};

class CheckpointReader {
public:
    CheckpointReader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

    void bytes(void* data, size_t len, const char* section) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (static_cast<size_t>(in_.gcount()) != len) {
            throw InputError("checkpoint '" + path_ + "' truncated while reading " + section);
        }
        hash_.update(data, len);
    }
    uint32_t u32(const char* section) {
        uint32_t v = 0;
        bytes(&v, sizeof v, section);
        return v;
    }
    void matrix(MatrixXd& m, const char* section) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double v;
                bytes(&v, sizeof v, section);
                m(r, c) = v;
            }
        }
    }
    void vector(VectorXd& v, const char* section) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            double x;
            bytes(&x, sizeof x, section);
            v[i] = x;
        }
    }
    void verify_checksum() {
        uint64_t expected = hash_.value();
        uint64_t stored = 0;
        in_.read(reinterpret_cast<char*>(&stored), sizeof stored);
        if (static_cast<size_t>(in_.gcount()) != sizeof stored) {
            throw InputError("checkpoint '" + path_ + "' truncated while reading checksum");
        }
        if (stored != expected) {
            throw InputError("checkpoint '" + path_ + "' checksum mismatch");
        }
    }

private:
    std::ifstream& in_;
    std::string path_;
    Fnv1a hash_;
};

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write checkpoint: " + path);
    CheckpointWriter w(out);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(static_cast<uint32_t>(params.vocab_size()));
    w.u32(static_cast<uint32_t>(params.cfg.comment_bits));
    w.u32(static_cast<uint32_t>(params.cfg.thread_bits));
    w.u32(static_cast<uint32_t>(params.cfg.variant));
    const ParamBlocks& p = params.blocks;
    w.vector(p.a);
    w.vector(p.b);
    w.vector(p.c);
    w.vector(p.b_start);
    w.vector(p.b_stop);
    w.matrix(p.U);
    w.matrix(p.V);
    w.matrix(p.W);
    w.finish();
    DDTM_REQUIRE(out.good(), "failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    DDTM_REQUIRE(in.good(), "cannot open checkpoint: " + path);
    CheckpointReader r(in, path);

    char magic[4];
    r.bytes(magic, sizeof magic, "magic");
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw InputError("checkpoint '" + path + "' has wrong magic bytes");
    }
    uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw InputError("checkpoint '" + path + "' has unsupported version " +
                         std::to_string(version));
    }
    uint32_t vocab = r.u32("vocab size");
    uint32_t comment_bits = r.u32("comment bits");
    uint32_t thread_bits = r.u32("thread bits");
    uint32_t variant = r.u32("variant");
    if (variant > static_cast<uint32_t>(Variant::unigram)) {
        throw InputError("checkpoint '" + path + "' has unknown variant tag " +
                         std::to_string(variant));
    }

    ModelParams params;
    params.cfg.comment_bits = static_cast<int>(comment_bits);
    params.cfg.thread_bits = static_cast<int>(thread_bits);
    params.cfg.variant = static_cast<Variant>(variant);
    params.blocks = ParamBlocks::zeros(static_cast<int>(vocab), static_cast<int>(comment_bits),
                                       static_cast<int>(thread_bits));
    ParamBlocks& p = params.blocks;
    r.vector(p.a, "block a");
    r.vector(p.b, "block b");
    r.vector(p.c, "block c");
    r.vector(p.b_start, "block b_start");
    r.vector(p.b_stop, "block b_stop");
    r.matrix(p.U, "block U");
    r.matrix(p.V, "block V");
    r.matrix(p.W, "block W");
    r.verify_checksum();
    return params;
}

}  // namespace ddtm
