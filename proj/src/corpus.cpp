#include "ddtm/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ddtm/rng.hpp"

namespace ddtm {

using nlohmann::json;

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    index_.reserve(tokens_.size());
    for (size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = index_.emplace(tokens_[i], static_cast<int>(i));
        DDTM_REQUIRE(inserted, "duplicate token in vocabulary: " + tokens_[i]);
    }
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

std::string ThreadShape::key() const {
    std::ostringstream os;
    for (size_t i = 0; i < parents.size(); ++i) {
        os << parents[i] << ':' << lengths[i] << ';';
    }
    return os.str();
}

ThreadShape ThreadShape::of(const Thread& t) {
    ThreadShape s;
    s.parents.reserve(t.comments.size());
    s.lengths.reserve(t.comments.size());
    for (const auto& c : t.comments) {
        s.parents.push_back(c.parent.value_or(-1));
        s.lengths.push_back(c.length);
    }
    return s;
}

const Thread* Corpus::find_thread(const std::string& id) const {
    for (const auto& t : threads) {
        if (t.id == id) return &t;
    }
    return nullptr;
}

std::vector<const Thread*> Corpus::partition(const std::vector<std::string>& ids) const {
    std::vector<const Thread*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const Thread* t = find_thread(id);
        DDTM_REQUIRE(t != nullptr, "split references unknown thread id: " + id);
        out.push_back(t);
    }
    return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, int cap) {
    DDTM_REQUIRE(cap >= 2, "vocabulary cap must be at least 2");
    std::map<std::string, int64_t> freq;
    for (const auto& doc : docs) {
        for (const auto& tok : doc) ++freq[tok];
    }
    DDTM_REQUIRE(!freq.empty(), "cannot build a vocabulary from an all-empty corpus");

    std::vector<std::pair<std::string, int64_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(entries.size()) > cap) entries.resize(static_cast<size_t>(cap));

    std::vector<std::string> tokens;
    tokens.reserve(entries.size());
    for (auto& [tok, n] : entries) tokens.push_back(tok);
    return Vocabulary(std::move(tokens));
}

RawThread parse_raw_thread(const std::string& json_line) {
    json j;
    try {
        j = json::parse(json_line);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed thread JSON: ") + e.what());
    }
    try {
        RawThread t;
        t.id = j.at("id").get<std::string>();
        t.subreddit = j.value("subreddit", std::string());
        for (const auto& jc : j.at("comments")) {
            RawComment c;
            c.id = jc.at("id").get<std::string>();
            if (jc.contains("parent_id") && !jc["parent_id"].is_null()) {
                c.parent_id = jc["parent_id"].get<std::string>();
            }
            c.body = jc.value("body", std::string());
            c.upvotes = jc.value("upvotes", int64_t{0});
            c.has_deleted_child = jc.value("has_deleted_child", false);
            t.comments.push_back(std::move(c));
        }
        return t;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed thread JSON: ") + e.what());
    }
}

Thread build_thread(const RawThread& raw, const PipelineConfig& cfg, const Vocabulary& vocab) {
    const std::string where = "thread '" + raw.id + "': ";
    DDTM_REQUIRE(!raw.comments.empty(), where + "no comments");

    std::unordered_map<std::string, int> by_id;
    for (size_t i = 0; i < raw.comments.size(); ++i) {
        auto [it, inserted] = by_id.emplace(raw.comments[i].id, static_cast<int>(i));
        DDTM_REQUIRE(inserted, where + "duplicate comment id '" + raw.comments[i].id + "'");
    }

    int root = -1;
    std::vector<int> raw_parent(raw.comments.size(), -1);
    for (size_t i = 0; i < raw.comments.size(); ++i) {
        const auto& c = raw.comments[i];
        if (!c.parent_id) {
            DDTM_REQUIRE(root < 0, where + "multiple comments without a parent");
            root = static_cast<int>(i);
            continue;
        }
        auto it = by_id.find(*c.parent_id);
        DDTM_REQUIRE(it != by_id.end(),
                     where + "comment '" + c.id + "' references unknown parent '" + *c.parent_id + "'");
        raw_parent[i] = it->second;
    }
    DDTM_REQUIRE(root >= 0, where + "no root comment (every comment has a parent)");

    // topological order via BFS from the root; leftover nodes mean a cycle.
    // Children are visited in comment-id order so any permutation of the
    // input records yields the same Thread.
    std::vector<std::vector<int>> raw_children(raw.comments.size());
    for (size_t i = 0; i < raw.comments.size(); ++i) {
        if (raw_parent[i] >= 0) raw_children[static_cast<size_t>(raw_parent[i])].push_back(static_cast<int>(i));
    }
    for (auto& kids : raw_children) {
        std::sort(kids.begin(), kids.end(), [&](int x, int y) {
            return raw.comments[static_cast<size_t>(x)].id < raw.comments[static_cast<size_t>(y)].id;
        });
    }
    std::vector<int> order;
    order.reserve(raw.comments.size());
    order.push_back(root);
    for (size_t head = 0; head < order.size(); ++head) {
        for (int child : raw_children[static_cast<size_t>(order[head])]) order.push_back(child);
    }
    DDTM_REQUIRE(order.size() == raw.comments.size(),
                 where + "parent references form a cycle");

    std::vector<int> new_index(raw.comments.size(), -1);
    for (size_t i = 0; i < order.size(); ++i) new_index[static_cast<size_t>(order[i])] = static_cast<int>(i);

    Thread t;
    t.id = raw.id;
    t.subreddit = raw.subreddit;
    t.comments.resize(raw.comments.size());
    for (size_t i = 0; i < order.size(); ++i) {
        const RawComment& rc = raw.comments[static_cast<size_t>(order[i])];
        CommentBag& bag = t.comments[i];
        bag.id = rc.id;
        bag.upvotes = rc.upvotes;
        bag.has_deleted_child = rc.has_deleted_child;

        std::map<int, int64_t> counts;
        for (const auto& tok : preprocess_text(rc.body, cfg)) {
            int id = vocab.lookup(tok);
            if (id >= 0) ++counts[id];  // OOV tokens are dropped
        }
        bag.counts.assign(counts.begin(), counts.end());
        bag.length = 0;
        for (auto& [k, n] : bag.counts) bag.length += n;

        int rp = raw_parent[static_cast<size_t>(order[i])];
        if (rp >= 0) bag.parent = new_index[static_cast<size_t>(rp)];
    }
    for (int i = 0; i < t.size(); ++i) {
        if (t.comments[static_cast<size_t>(i)].parent) {
            int p = *t.comments[static_cast<size_t>(i)].parent;
            t.comments[static_cast<size_t>(p)].children.push_back(i);
            t.reply_edges.emplace_back(p, i);
        }
    }
    std::sort(t.reply_edges.begin(), t.reply_edges.end());
    return t;
}

Split make_split(const std::vector<Thread>& threads, double test_fraction, uint64_t seed) {
    DDTM_REQUIRE(test_fraction >= 0.0 && test_fraction < 1.0, "test fraction must be in [0, 1)");
    std::vector<std::string> ids;
    ids.reserve(threads.size());
    for (const auto& t : threads) ids.push_back(t.id);
    std::sort(ids.begin(), ids.end());
    Rng rng = Rng::derive(seed, 17);
    rng.shuffle(ids);

    size_t n_test = static_cast<size_t>(test_fraction * static_cast<double>(ids.size()));
    Split split;
    split.test_ids.assign(ids.begin(), ids.begin() + static_cast<long>(n_test));
    split.train_ids.assign(ids.begin() + static_cast<long>(n_test), ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

Corpus ingest_threads(const std::string& path, const PipelineConfig& cfg,
                      const std::optional<Vocabulary>& vocab, const IngestOptions& opts,
                      IngestStats* stats) {
    std::ifstream in(path);
    DDTM_REQUIRE(in.good(), "cannot open corpus file: " + path);

    std::vector<RawThread> raws;
    std::string line;
    int64_t line_no = 0;
    IngestStats local;
    IngestStats& st = stats ? *stats : local;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            raws.push_back(parse_raw_thread(line));
        } catch (const InputError& e) {
            std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
            if (!opts.skip_bad) throw InputError(msg);
            st.warnings.push_back(msg);
            ++st.skipped;
        }
    }

    Corpus corpus;
    if (vocab) {
        corpus.vocab = *vocab;
    } else {
        std::vector<std::vector<std::string>> docs;
        for (const auto& rt : raws) {
            for (const auto& rc : rt.comments) docs.push_back(preprocess_text(rc.body, cfg));
        }
        corpus.vocab = build_vocab(docs, cfg.vocab_cap);
    }

    for (const auto& rt : raws) {
        try {
            corpus.threads.push_back(build_thread(rt, cfg, corpus.vocab));
        } catch (const InputError& e) {
            if (!opts.skip_bad) throw;
            st.warnings.push_back(e.what());
            ++st.skipped;
            continue;
        }
        ++st.threads;
        st.comments += corpus.threads.back().size();
        st.words += corpus.threads.back().total_words();
    }
    corpus.split = make_split(corpus.threads, opts.test_fraction, opts.split_seed);
    return corpus;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write vocabulary file: " + path);
    for (const auto& tok : vocab.tokens()) out << tok << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    DDTM_REQUIRE(in.good(), "cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

void save_split(const Split& split, const std::string& path) {
    json j;
    j["train"] = split.train_ids;
    j["test"] = split.test_ids;
    std::ofstream out(path, std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write split file: " + path);
    out << j.dump(2) << '\n';
}

Split load_split(const std::string& path) {
    std::ifstream in(path);
    DDTM_REQUIRE(in.good(), "cannot open split file: " + path);
    json j;
    try {
        in >> j;
        Split s;
        s.train_ids = j.at("train").get<std::vector<std::string>>();
        s.test_ids = j.at("test").get<std::vector<std::string>>();
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed split file: ") + e.what());
    }
}

void save_threads(const std::vector<Thread>& threads, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    DDTM_REQUIRE(out.good(), "cannot write corpus file: " + path);
    for (const auto& t : threads) {
        json jt;
        jt["id"] = t.id;
        jt["subreddit"] = t.subreddit;
        json jc = json::array();
        for (const auto& c : t.comments) {
            json j;
            j["id"] = c.id;
            if (c.parent) {
                j["parent_id"] = t.comments[static_cast<size_t>(*c.parent)].id;
            } else {
                j["parent_id"] = nullptr;
            }
            json counts = json::array();
            for (auto& [k, n] : c.counts) counts.push_back({k, n});
            j["counts"] = counts;
            j["upvotes"] = c.upvotes;
            j["has_deleted_child"] = c.has_deleted_child;
            jc.push_back(std::move(j));
        }
        jt["comments"] = std::move(jc);
        out << jt.dump() << '\n';
    }
}

std::vector<Thread> load_threads(const std::string& path, int vocab_size) {
    std::ifstream in(path);
    DDTM_REQUIRE(in.good(), "cannot open corpus file: " + path);
    std::vector<Thread> threads;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        RawThread raw;
        raw.id = j.at("id").get<std::string>();
        raw.subreddit = j.value("subreddit", std::string());
        std::vector<std::vector<std::pair<int, int64_t>>> counts;
        for (const auto& jc : j.at("comments")) {
            RawComment rc;
            rc.id = jc.at("id").get<std::string>();
            if (jc.contains("parent_id") && !jc["parent_id"].is_null()) {
                rc.parent_id = jc["parent_id"].get<std::string>();
            }
            rc.upvotes = jc.value("upvotes", int64_t{0});
            rc.has_deleted_child = jc.value("has_deleted_child", false);
            raw.comments.push_back(std::move(rc));

            std::vector<std::pair<int, int64_t>> cc;
            for (const auto& pair : jc.at("counts")) {
                int k = pair.at(0).get<int>();
                int64_t n = pair.at(1).get<int64_t>();
                DDTM_REQUIRE(k >= 0 && k < vocab_size,
                             "thread '" + raw.id + "': token id " + std::to_string(k) +
                                 " outside vocabulary of size " + std::to_string(vocab_size));
                DDTM_REQUIRE(n > 0, "thread '" + raw.id + "': nonpositive count");
                cc.emplace_back(k, n);
            }
            counts.push_back(std::move(cc));
        }
        // reuse the raw-thread structural validation, then attach counts
        Thread t = build_thread(raw, PipelineConfig{}, Vocabulary{});
        for (int i = 0; i < t.size(); ++i) {
            // build_thread reorders topologically; map back via comment id
            const std::string& cid = t.comments[static_cast<size_t>(i)].id;
            for (size_t rj = 0; rj < raw.comments.size(); ++rj) {
                if (raw.comments[rj].id == cid) {
                    auto& bag = t.comments[static_cast<size_t>(i)];
                    bag.counts = counts[rj];
                    std::sort(bag.counts.begin(), bag.counts.end());
                    bag.length = 0;
                    for (auto& [k, n] : bag.counts) bag.length += n;
                    break;
                }
            }
        }
        threads.push_back(std::move(t));
    }
    return threads;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_vocab(corpus.vocab, dir + "/vocab.txt");
    save_threads(corpus.threads, dir + "/corpus.jsonl");
    save_split(corpus.split, dir + "/split.json");
}

Corpus load_corpus(const std::string& dir) {
    Corpus corpus;
    corpus.vocab = load_vocab(dir + "/vocab.txt");
    corpus.threads = load_threads(dir + "/corpus.jsonl", corpus.vocab.size());
    corpus.split = load_split(dir + "/split.json");
    return corpus;
}

}  // namespace ddtm
