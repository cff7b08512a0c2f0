#include "synthir/synth.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace synthir {

namespace {

using nlohmann::json;

char hex_digit(uint64_t v) { return "0123456789abcdef"[v & 0xF]; }

std::string hex64(uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; i--, v >>= 4) s[i] = hex_digit(v);
    return s;
}

json pair_to_json(const SyntheticPair& p) {
    json j = {{"doc_id", p.doc_id}, {"query", p.query}};
    if (p.mean_logprob) j["mean_logprob"] = *p.mean_logprob;
    if (p.score) j["score"] = *p.score;
    return j;
}

SyntheticPair pair_from_json(const json& j) {
    SyntheticPair p;
    p.doc_id = j.at("doc_id").get<std::string>();
    p.query = j.at("query").get<std::string>();
    if (j.contains("mean_logprob") && !j["mean_logprob"].is_null())
        p.mean_logprob = j["mean_logprob"].get<double>();
    if (j.contains("score") && !j["score"].is_null())
        p.score = j["score"].get<double>();
    return p;
}

void sort_pairs_by(std::vector<SyntheticPair>& pairs,
                   const std::function<double(const SyntheticPair&)>& key) {
    std::sort(pairs.begin(), pairs.end(),
              [&](const SyntheticPair& a, const SyntheticPair& b) {
                  double ka = key(a), kb = key(b);
                  if (ka != kb) return ka > kb;
                  return a.doc_id < b.doc_id;
              });
}

}  // namespace

void parallel_for(size_t count, size_t threads,
                  const std::function<void(size_t)>& fn) {
    threads = std::max<size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (size_t i = 0; i < count; i++) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; t++) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= count) return;
                {
                    std::lock_guard lock(error_mutex);
                    if (error) return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<Document> sample_documents(const std::string& corpus_path, size_t n,
                                       uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");
    ReservoirSampler<Document> sampler(n, stream_seed(seed, "sample-documents"));
    for_each_document(corpus_path,
                      [&](Document&& d) { sampler.offer(std::move(d)); });
    if (sampler.seen() == 0) throw std::runtime_error("empty corpus: " + corpus_path);
    auto sample = std::move(sampler.sample());
    std::sort(sample.begin(), sample.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    return sample;
}

std::vector<Document> sample_documents(const std::vector<Document>& docs,
                                       size_t n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");
    if (docs.empty()) throw std::runtime_error("empty corpus");
    ReservoirSampler<Document> sampler(n, stream_seed(seed, "sample-documents"));
    for (const auto& d : docs) sampler.offer(d);
    auto sample = std::move(sampler.sample());
    std::sort(sample.begin(), sample.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    return sample;
}

std::vector<SyntheticPair> generate_queries(
    const std::vector<Document>& docs, const PromptTemplate& tmpl,
    const std::vector<FewShotExample>& examples, Gateway& gateway,
    const GenOptions& options, GenStats* stats) {
    GenStats local;
    GenStats& st = stats ? *stats : local;
    st = {};

    // doc_id -> pair (or nullopt for a recorded degenerate generation).
    std::unordered_map<std::string, std::optional<SyntheticPair>> done;
    std::ofstream checkpoint;
    std::mutex mutex;
    if (!options.checkpoint_path.empty()) {
        std::ifstream in(options.checkpoint_path);
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (j.value("degenerate", false))
                done[j.at("doc_id").get<std::string>()] = std::nullopt;
            else {
                auto p = pair_from_json(j);
                done[p.doc_id] = std::move(p);
            }
        }
        st.resumed = done.size();
        checkpoint.open(options.checkpoint_path, std::ios::app);
        if (!checkpoint)
            throw std::runtime_error("cannot open checkpoint " + options.checkpoint_path);
    }

    {
        std::unordered_set<std::string> ids;
        for (const auto& d : docs)
            if (!ids.insert(d.id).second)
                throw std::runtime_error("duplicate doc id \"" + d.id + "\"");
    }

    std::vector<const Document*> todo;
    for (const auto& d : docs)
        if (!done.count(d.id)) todo.push_back(&d);

    size_t threads = options.parallelism ? options.parallelism : gateway.parallelism();
    parallel_for(todo.size(), threads, [&](size_t i) {
        const Document& doc = *todo[i];
        auto prompt = render_prompt(tmpl, examples, doc, options.max_doc_chars);
        auto gen = gateway.generate(prompt, options.max_new_tokens, tmpl.stop_sequence);
        auto query = parse_generation(gen.text, tmpl.stop_sequence);
        std::optional<SyntheticPair> pair;
        if (query) {
            SyntheticPair p;
            p.doc_id = doc.id;
            p.query = *query;
            if (gen.token_logprobs && !gen.token_logprobs->empty()) {
                double sum = std::accumulate(gen.token_logprobs->begin(),
                                             gen.token_logprobs->end(), 0.0);
                p.mean_logprob = options.logprob_agg == LogprobAgg::mean
                                     ? sum / gen.token_logprobs->size()
                                     : sum;
            }
            pair = std::move(p);
        }
        std::lock_guard lock(mutex);
        if (checkpoint.is_open()) {
            if (pair)
                checkpoint << pair_to_json(*pair).dump() << '\n';
            else
                checkpoint << json{{"doc_id", doc.id}, {"degenerate", true}}.dump()
                           << '\n';
            checkpoint.flush();
        }
        done[doc.id] = std::move(pair);
    });

    std::vector<SyntheticPair> pairs;
    for (const auto& d : docs) {
        auto it = done.find(d.id);
        if (it == done.end()) continue;
        if (it->second) {
            pairs.push_back(*it->second);
            st.generated++;
        } else {
            st.degenerate++;
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const SyntheticPair& a, const SyntheticPair& b) {
                  return a.doc_id < b.doc_id;
              });
    return pairs;
}

std::vector<SyntheticPair> filter_v1(std::vector<SyntheticPair> pairs,
                                     size_t keep_top) {
    for (const auto& p : pairs)
        if (!p.mean_logprob)
            throw std::runtime_error("pair for doc \"" + p.doc_id +
                                     "\" has no generation log-probability");
    sort_pairs_by(pairs, [](const SyntheticPair& p) { return *p.mean_logprob; });
    if (pairs.size() > keep_top) pairs.resize(keep_top);
    return pairs;
}

std::vector<SyntheticPair> filter_v2(std::vector<SyntheticPair> pairs,
                                     Gateway& gateway,
                                     const DocTextLookup& doc_text,
                                     size_t keep_top,
                                     const FilterV2Options& options) {
    if (pairs.empty()) throw std::invalid_argument("no pairs to filter");

    std::unordered_map<std::string, double> cache;
    std::ofstream cache_out;
    std::mutex mutex;
    auto cache_key = [](const SyntheticPair& p) {
        return hex64(fnv1a64(p.query)) + ":" + p.doc_id;
    };
    if (!options.cache_path.empty()) {
        std::ifstream in(options.cache_path);
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            cache[j.at("key").get<std::string>()] = j.at("score").get<double>();
        }
        cache_out.open(options.cache_path, std::ios::app);
        if (!cache_out)
            throw std::runtime_error("cannot open score cache " + options.cache_path);
    }

    size_t threads = options.parallelism ? options.parallelism : gateway.parallelism();
    parallel_for(pairs.size(), threads, [&](size_t i) {
        auto& pair = pairs[i];
        auto key = cache_key(pair);
        {
            std::lock_guard lock(mutex);
            auto it = cache.find(key);
            if (it != cache.end()) {
                pair.score = it->second;
                return;
            }
        }
        auto text = doc_text(pair.doc_id);
        if (!text)
            throw std::runtime_error("doc id \"" + pair.doc_id +
                                     "\" not found in corpus");
        double s = gateway.score(pair.query, *text);
        std::lock_guard lock(mutex);
        pair.score = s;
        cache[key] = s;
        if (cache_out.is_open()) {
            cache_out << json{{"key", key}, {"score", s}}.dump() << '\n';
            cache_out.flush();
        }
    });

    sort_pairs_by(pairs, [](const SyntheticPair& p) { return *p.score; });
    if (pairs.size() > keep_top) pairs.resize(keep_top);
    return pairs;
}

std::optional<std::string> mine_negative(const SyntheticPair& pair,
                                         const InvertedIndex& index,
                                         size_t pool_depth, uint64_t seed) {
    auto pool = index.search_topk(pair.query, pool_depth);
    std::vector<std::string> candidates;
    candidates.reserve(pool.size());
    for (auto& sd : pool)
        if (sd.doc_id != pair.doc_id) candidates.push_back(std::move(sd.doc_id));
    if (candidates.empty()) return std::nullopt;
    Rng rng(stream_seed(seed, "mine-negative/" + pair.doc_id));
    return candidates[rng.below(candidates.size())];
}

std::vector<TrainExample> build_trainset(
    const std::vector<SyntheticPair>& positives,
    const std::map<std::string, std::string>& negatives,
    const DocTextLookup& doc_text, TrainsetStats* stats) {
    TrainsetStats local;
    TrainsetStats& st = stats ? *stats : local;
    st = {};
    auto resolve = [&](const std::string& doc_id) {
        auto text = doc_text(doc_id);
        if (!text)
            throw std::runtime_error("doc id \"" + doc_id + "\" not found in corpus");
        return *text;
    };
    std::vector<TrainExample> out;
    for (const auto& pair : positives) {
        auto it = negatives.find(pair.doc_id);
        if (it == negatives.end()) {
            st.no_negative++;
            continue;
        }
        out.push_back({pair.query, pair.doc_id, resolve(pair.doc_id), Label::positive});
        out.push_back({pair.query, it->second, resolve(it->second), Label::negative});
        st.pairs_kept++;
    }
    return out;
}

std::vector<Batch> emit_batches(const std::vector<TrainExample>& trainset,
                                size_t batch_pos, size_t batch_neg,
                                uint64_t seed) {
    if (batch_pos < 1 || batch_neg < 1)
        throw std::invalid_argument("batch sizes must be >= 1");
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < trainset.size(); i++)
        (trainset[i].label == Label::positive ? pos : neg).push_back(i);
    if (pos.size() < batch_pos || neg.size() < batch_neg)
        throw std::runtime_error("trainset smaller than one batch");

    Rng rng(stream_seed(seed, "emit-batches"));
    auto shuffle = [&](std::vector<size_t>& v) {
        for (size_t i = v.size() - 1; i > 0; i--)
            std::swap(v[i], v[rng.below(i + 1)]);
    };
    shuffle(pos);
    shuffle(neg);

    size_t n_batches = std::min(pos.size() / batch_pos, neg.size() / batch_neg);
    std::vector<Batch> batches(n_batches);
    for (size_t b = 0; b < n_batches; b++) {
        batches[b].positives.assign(pos.begin() + b * batch_pos,
                                    pos.begin() + (b + 1) * batch_pos);
        batches[b].negatives.assign(neg.begin() + b * batch_neg,
                                    neg.begin() + (b + 1) * batch_neg);
    }
    return batches;
}

void save_pairs(const std::vector<SyntheticPair>& pairs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& p : pairs) out << pair_to_json(p).dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SyntheticPair> load_pairs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<SyntheticPair> pairs;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        try {
            pairs.push_back(pair_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed JSON: " + e.what());
        }
    }
    return pairs;
}

void save_batches(const std::vector<Batch>& batches, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& b : batches)
        out << json{{"positives", b.positives}, {"negatives", b.negatives}}.dump()
            << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string file_checksum_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        auto n = in.gcount();
        for (std::streamsize i = 0; i < n; i++) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return hex64(h);
}

}  // namespace synthir
