#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddtm/common.hpp"
#include "ddtm/text.hpp"

namespace ddtm {

struct RawComment {
    std::string id;
    std::optional<std::string> parent_id;  // absent for the OP
    std::string body;
    int64_t upvotes = 0;
    bool has_deleted_child = false;
};

struct RawThread {
    std::string id;
    std::string subreddit;
    std::vector<RawComment> comments;
};

class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    // -1 when the token is out of vocabulary
    int lookup(const std::string& token) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Bag-of-words comment node. Counts are sparse (token id, count) pairs sorted
// by token id; length is the post-drop word count.
struct CommentBag {
    std::string id;
    std::vector<std::pair<int, int64_t>> counts;
    int64_t length = 0;                 // D_n
    std::optional<int> parent;          // comment index within the thread
    std::vector<int> children;
    int64_t upvotes = 0;
    bool has_deleted_child = false;

    bool operator==(const CommentBag& o) const {
        return id == o.id && counts == o.counts && length == o.length && parent == o.parent &&
               children == o.children && upvotes == o.upvotes &&
               has_deleted_child == o.has_deleted_child;
    }
};

struct Thread {
    std::string id;
    std::string subreddit;
    // topological order: parents before children, OP at index 0
    std::vector<CommentBag> comments;
    std::vector<std::pair<int, int>> reply_edges;  // (parent index, child index)

    int size() const { return static_cast<int>(comments.size()); }
    int64_t total_words() const {
        int64_t total = 0;
        for (const auto& c : comments) total += c.length;
        return total;
    }

    bool operator==(const Thread& o) const {
        return id == o.id && subreddit == o.subreddit && comments == o.comments &&
               reply_edges == o.reply_edges;
    }
};

// Tree structure plus comment lengths; everything the normalizer depends on.
struct ThreadShape {
    std::vector<int> parents;       // -1 for the root
    std::vector<int64_t> lengths;   // D_n

    int size() const { return static_cast<int>(parents.size()); }
    std::string key() const;
    static ThreadShape of(const Thread& t);
};

struct Split {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

struct Corpus {
    Vocabulary vocab;
    std::vector<Thread> threads;
    Split split;

    const Thread* find_thread(const std::string& id) const;
    std::vector<const Thread*> partition(const std::vector<std::string>& ids) const;
    std::vector<const Thread*> train_threads() const { return partition(split.train_ids); }
    std::vector<const Thread*> test_threads() const { return partition(split.test_ids); }
};

// --- vocabulary -------------------------------------------------------------

// Frequency-descending order with lexicographic tie-break, truncated to cap.
// Throws InputError when every token list is empty.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, int cap);

// --- raw ingestion ----------------------------------------------------------

// Parse one JSONL line into a RawThread. Throws InputError on malformed JSON.
RawThread parse_raw_thread(const std::string& json_line);

// Build a Thread from raw comments: preprocess bodies, drop OOV tokens, order
// topologically with the OP first. Throws InputError (naming the thread) on
// duplicate ids, dangling parents, cycles, or a root count other than one.
Thread build_thread(const RawThread& raw, const PipelineConfig& cfg, const Vocabulary& vocab);

struct IngestOptions {
    bool skip_bad = false;           // warn and skip malformed threads
    double test_fraction = 0.1;
    uint64_t split_seed = 0;
};

struct IngestStats {
    int64_t threads = 0;
    int64_t skipped = 0;
    int64_t comments = 0;
    int64_t words = 0;
    std::vector<std::string> warnings;
};

// Read a raw JSONL corpus. When vocab is absent it is built from the input.
Corpus ingest_threads(const std::string& path, const PipelineConfig& cfg,
                      const std::optional<Vocabulary>& vocab, const IngestOptions& opts = {},
                      IngestStats* stats = nullptr);

// Deterministic split of thread ids by seeded shuffle.
Split make_split(const std::vector<Thread>& threads, double test_fraction, uint64_t seed);

// --- processed corpus files -------------------------------------------------

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

void save_split(const Split& split, const std::string& path);
Split load_split(const std::string& path);

// Bag-of-words thread JSONL (one thread per line, counts as [id, n] pairs).
void save_threads(const std::vector<Thread>& threads, const std::string& path);
std::vector<Thread> load_threads(const std::string& path, int vocab_size);

void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace ddtm
