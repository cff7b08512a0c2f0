#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthir/analyzer.hpp"
#include "synthir/corpus_io.hpp"
#include "synthir/gateway.hpp"
#include "synthir/index.hpp"
#include "synthir/metrics.hpp"
#include "synthir/pipeline_eval.hpp"
#include "synthir/prompting.hpp"
#include "synthir/synth.hpp"

namespace synthir::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "synthir 0.1.0";

struct Settings {
    uint64_t seed = 42;
    uint64_t sample_size = 100000;
    uint64_t keep_top = 10000;
    uint64_t pool_depth = 1000;
    uint64_t batch_pos = 64;
    uint64_t batch_neg = 64;
    uint64_t max_new_tokens = 64;
    uint64_t max_doc_chars = 1024;
    uint64_t depth = 1000;
    double k1 = 0.9;
    double b = 0.4;
    bool no_lowercase = false;
    bool no_stopwords = false;
    bool no_stem = false;
    std::string gateway = "stub";
    std::string gateway_url = "http://localhost:8080";
    uint64_t parallelism = 4;
    uint64_t timeout_s = 120;
    uint64_t retries = 3;
    std::string bearer_token;
    std::string logprob_mode = "mean";
};

// Precedence: flags > environment > config file > defaults. Config and
// environment are overlaid here; CLI11 then overwrites only what was
// actually passed as a flag.
void apply_config_file(Settings& s, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j = json::parse(in);
    auto get_u64 = [&](const char* key, uint64_t& field) {
        if (j.contains(key)) field = j[key].get<uint64_t>();
    };
    auto get_str = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j[key].get<std::string>();
    };
    auto get_bool = [&](const char* key, bool& field) {
        if (j.contains(key)) field = j[key].get<bool>();
    };
    get_u64("seed", s.seed);
    get_u64("sample_size", s.sample_size);
    get_u64("keep_top", s.keep_top);
    get_u64("pool_depth", s.pool_depth);
    get_u64("batch_pos", s.batch_pos);
    get_u64("batch_neg", s.batch_neg);
    get_u64("max_new_tokens", s.max_new_tokens);
    get_u64("max_doc_chars", s.max_doc_chars);
    get_u64("depth", s.depth);
    get_u64("parallelism", s.parallelism);
    get_u64("timeout_s", s.timeout_s);
    get_u64("retries", s.retries);
    if (j.contains("k1")) s.k1 = j["k1"].get<double>();
    if (j.contains("b")) s.b = j["b"].get<double>();
    get_bool("no_lowercase", s.no_lowercase);
    get_bool("no_stopwords", s.no_stopwords);
    get_bool("no_stem", s.no_stem);
    get_str("gateway", s.gateway);
    get_str("gateway_url", s.gateway_url);
    get_str("bearer_token", s.bearer_token);
    get_str("logprob_mode", s.logprob_mode);
}

void apply_env(Settings& s) {
    auto env_u64 = [](const char* name, uint64_t& field) {
        if (const char* v = std::getenv(name)) field = std::stoull(v);
    };
    auto env_str = [](const char* name, std::string& field) {
        if (const char* v = std::getenv(name)) field = v;
    };
    auto env_bool = [](const char* name, bool& field) {
        if (const char* v = std::getenv(name)) field = std::string(v) == "1";
    };
    env_u64("SYNTHIR_SEED", s.seed);
    env_u64("SYNTHIR_SAMPLE_SIZE", s.sample_size);
    env_u64("SYNTHIR_KEEP_TOP", s.keep_top);
    env_u64("SYNTHIR_POOL_DEPTH", s.pool_depth);
    env_u64("SYNTHIR_BATCH_POS", s.batch_pos);
    env_u64("SYNTHIR_BATCH_NEG", s.batch_neg);
    env_u64("SYNTHIR_MAX_NEW_TOKENS", s.max_new_tokens);
    env_u64("SYNTHIR_MAX_DOC_CHARS", s.max_doc_chars);
    env_u64("SYNTHIR_DEPTH", s.depth);
    env_u64("SYNTHIR_PARALLELISM", s.parallelism);
    env_u64("SYNTHIR_TIMEOUT_S", s.timeout_s);
    env_u64("SYNTHIR_RETRIES", s.retries);
    if (const char* v = std::getenv("SYNTHIR_K1")) s.k1 = std::stod(v);
    if (const char* v = std::getenv("SYNTHIR_B")) s.b = std::stod(v);
    env_bool("SYNTHIR_NO_LOWERCASE", s.no_lowercase);
    env_bool("SYNTHIR_NO_STOPWORDS", s.no_stopwords);
    env_bool("SYNTHIR_NO_STEM", s.no_stem);
    env_str("SYNTHIR_GATEWAY", s.gateway);
    env_str("SYNTHIR_GATEWAY_URL", s.gateway_url);
    env_str("SYNTHIR_BEARER_TOKEN", s.bearer_token);
    env_str("SYNTHIR_LOGPROB_MODE", s.logprob_mode);
}

json settings_to_json(const Settings& s) {
    return {{"seed", s.seed},
            {"sample_size", s.sample_size},
            {"keep_top", s.keep_top},
            {"pool_depth", s.pool_depth},
            {"batch_pos", s.batch_pos},
            {"batch_neg", s.batch_neg},
            {"max_new_tokens", s.max_new_tokens},
            {"max_doc_chars", s.max_doc_chars},
            {"depth", s.depth},
            {"k1", s.k1},
            {"b", s.b},
            {"no_lowercase", s.no_lowercase},
            {"no_stopwords", s.no_stopwords},
            {"no_stem", s.no_stem},
            {"gateway", s.gateway},
            {"gateway_url", s.gateway_url},
            {"parallelism", s.parallelism},
            {"timeout_s", s.timeout_s},
            {"retries", s.retries},
            {"logprob_mode", s.logprob_mode}};
}

Analyzer make_analyzer(const Settings& s) {
    return {!s.no_lowercase, !s.no_stopwords,
            s.no_stem ? Stemmer::none : Stemmer::porter};
}

std::unique_ptr<Gateway> make_gateway(const Settings& s) {
    if (s.gateway == "stub") return std::make_unique<StubGateway>(make_analyzer(s));
    if (s.gateway == "http") {
        HttpGatewayConfig cfg;
        cfg.base_url = s.gateway_url;
        cfg.parallelism = s.parallelism;
        cfg.timeout_seconds = static_cast<int>(s.timeout_s);
        cfg.max_retries = static_cast<int>(s.retries);
        cfg.bearer_token = s.bearer_token;
        return std::make_unique<HttpGateway>(cfg);
    }
    throw std::runtime_error("unknown gateway \"" + s.gateway +
                             "\" (expected stub or http)");
}

DocTextLookup make_lookup(std::shared_ptr<std::vector<Document>> docs) {
    auto by_id = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& d : *docs) (*by_id)[d.id] = flat_text(d);
    return [by_id](const std::string& id) -> std::optional<std::string> {
        auto it = by_id->find(id);
        if (it == by_id->end()) return std::nullopt;
        return it->second;
    };
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Every subcommand records the fully resolved config next to its output.
void write_sidecar_manifest(const Settings& s, const std::string& out_path) {
    write_json_file({{"config", settings_to_json(s)}}, out_path + ".manifest.json");
}

void save_negatives(const std::map<std::string, std::string>& negatives,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& [pos, neg] : negatives) out << pos << '\t' << neg << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, std::string> load_negatives(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> negatives;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 2 tab-separated columns");
        negatives[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return negatives;
}

InvertedIndex obtain_index(const Settings& s, const std::string& index_path,
                           const std::string& corpus_path) {
    if (!index_path.empty()) return InvertedIndex::load(index_path);
    if (corpus_path.empty())
        throw std::runtime_error("need --index or --corpus");
    return InvertedIndex::build(load_corpus(corpus_path), make_analyzer(s), s.k1,
                                s.b);
}

// ---- run-all ---------------------------------------------------------------

struct RunAllPaths {
    std::string dir;
    std::string p(const std::string& name) const { return dir + "/" + name; }
};

bool stage_done(const json& manifest, const std::string& stage,
                const RunAllPaths& paths, const std::vector<std::string>& outputs) {
    if (!manifest.contains("stages") || !manifest["stages"].contains(stage))
        return false;
    const auto& recorded = manifest["stages"][stage];
    for (const auto& name : outputs) {
        auto path = paths.p(name);
        if (!fs::exists(path)) return false;
        if (!recorded.contains(name)) return false;
        if (recorded[name].get<std::string>() != file_checksum_hex(path))
            return false;
    }
    return true;
}

void record_stage(json& manifest, const std::string& stage,
                  const RunAllPaths& paths,
                  const std::vector<std::string>& outputs) {
    for (const auto& name : outputs)
        manifest["stages"][stage][name] = file_checksum_hex(paths.p(name));
    write_json_file(manifest, paths.p("manifest.json"));
}

struct RunAllArgs {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string template_path;
    std::string fewshot_path;
    std::string out_dir;
    std::string dataset = "dataset";
};

void run_all(const Settings& s, const RunAllArgs& a, std::ostream& err) {
    RunAllPaths paths{a.out_dir};
    fs::create_directories(a.out_dir);

    json manifest;
    auto manifest_path = paths.p("manifest.json");
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        manifest = json::parse(in);
        // A config change invalidates all recorded stages.
        if (manifest.value("config", json{}) != settings_to_json(s))
            manifest = json{};
    }
    manifest["config"] = settings_to_json(s);

    auto skip = [&](const std::string& stage) {
        err << "run-all: " << stage << " up to date, skipping\n";
    };

    // 1. sample
    if (stage_done(manifest, "sample", paths, {"sample.jsonl"})) {
        skip("sample");
    } else {
        auto sample = sample_documents(a.corpus, s.sample_size, s.seed);
        write_corpus(sample, paths.p("sample.jsonl"));
        record_stage(manifest, "sample", paths, {"sample.jsonl"});
    }
    auto sampled = load_corpus(paths.p("sample.jsonl"));

    // 2. generate
    GenStats gen_stats;
    if (stage_done(manifest, "generate", paths, {"pairs.jsonl"})) {
        skip("generate");
        gen_stats.degenerate = manifest["counters"].value("degenerate", 0);
    } else {
        auto tmpl = PromptTemplate::load(a.template_path);
        auto examples = load_fewshot(a.fewshot_path);
        auto gateway = make_gateway(s);
        GenOptions options;
        options.max_new_tokens = s.max_new_tokens;
        options.max_doc_chars = s.max_doc_chars;
        options.logprob_agg =
            s.logprob_mode == "sum" ? LogprobAgg::sum : LogprobAgg::mean;
        options.parallelism = s.parallelism;
        options.checkpoint_path = paths.p("generate_checkpoint.jsonl");
        auto pairs =
            generate_queries(sampled, tmpl, examples, *gateway, options, &gen_stats);
        save_pairs(pairs, paths.p("pairs.jsonl"));
        manifest["counters"]["degenerate"] = gen_stats.degenerate;
        record_stage(manifest, "generate", paths, {"pairs.jsonl"});
    }

    auto full_corpus = std::make_shared<std::vector<Document>>(load_corpus(a.corpus));
    auto lookup = make_lookup(full_corpus);

    // 3. filter (v2)
    if (stage_done(manifest, "filter", paths, {"filtered.jsonl"})) {
        skip("filter");
    } else {
        auto pairs = load_pairs(paths.p("pairs.jsonl"));
        auto gateway = make_gateway(s);
        FilterV2Options options;
        options.parallelism = s.parallelism;
        options.cache_path = paths.p("score_cache.jsonl");
        auto kept = filter_v2(std::move(pairs), *gateway, lookup, s.keep_top, options);
        save_pairs(kept, paths.p("filtered.jsonl"));
        record_stage(manifest, "filter", paths, {"filtered.jsonl"});
    }

    auto index = InvertedIndex::build(*full_corpus, make_analyzer(s), s.k1, s.b);

    // 4. mine negatives
    if (stage_done(manifest, "mine-negatives", paths, {"negatives.tsv"})) {
        skip("mine-negatives");
    } else {
        auto kept = load_pairs(paths.p("filtered.jsonl"));
        std::map<std::string, std::string> negatives;
        size_t no_negative = 0;
        for (const auto& pair : kept) {
            auto neg = mine_negative(pair, index, s.pool_depth, s.seed);
            if (neg)
                negatives[pair.doc_id] = *neg;
            else
                no_negative++;
        }
        save_negatives(negatives, paths.p("negatives.tsv"));
        manifest["counters"]["no_negative"] = no_negative;
        record_stage(manifest, "mine-negatives", paths, {"negatives.tsv"});
    }

    // 5. trainset
    if (stage_done(manifest, "build-trainset", paths, {"trainset.tsv"})) {
        skip("build-trainset");
    } else {
        auto kept = load_pairs(paths.p("filtered.jsonl"));
        auto negatives = load_negatives(paths.p("negatives.tsv"));
        TrainsetStats stats;
        auto trainset = build_trainset(kept, negatives, lookup, &stats);
        write_trainset(trainset, paths.p("trainset.tsv"));
        manifest["counters"]["trainset_pairs"] = stats.pairs_kept;
        record_stage(manifest, "build-trainset", paths, {"trainset.tsv"});
    }

    // 6. batches
    if (stage_done(manifest, "emit-batches", paths, {"batches.jsonl"})) {
        skip("emit-batches");
    } else {
        auto trainset = load_trainset(paths.p("trainset.tsv"));
        auto batches = emit_batches(trainset, s.batch_pos, s.batch_neg, s.seed);
        save_batches(batches, paths.p("batches.jsonl"));
        record_stage(manifest, "emit-batches", paths, {"batches.jsonl"});
    }

    // 7. retrieve + rerank + evaluate
    if (stage_done(manifest, "evaluate", paths,
                   {"bm25.run", "reranked.run", "metrics.json"})) {
        skip("evaluate");
    } else {
        auto queries = load_queries(a.queries);
        auto qrels = load_qrels(a.qrels);
        auto gateway = make_gateway(s);
        RerankSpec spec;
        spec.depth = s.depth;
        spec.parallelism = s.parallelism;
        evaluate_pipeline(index, queries, qrels, lookup, *gateway, spec, a.out_dir,
                          a.dataset);
        record_stage(manifest, "evaluate", paths,
                     {"bm25.run", "reranked.run", "metrics.json"});
    }

    // 8. report
    if (stage_done(manifest, "report", paths, {"report.csv", "report.txt"})) {
        skip("report");
    } else {
        std::ifstream in(paths.p("metrics.json"));
        json metrics = json::parse(in);
        std::map<std::string, std::map<std::string, double>> results;
        results[a.dataset]["bm25"] = metrics["bm25_ndcg10"].get<double>();
        results[a.dataset]["reranked"] = metrics["reranked_ndcg10"].get<double>();
        auto table = aggregate_report(results);
        std::ofstream csv(paths.p("report.csv"), std::ios::binary);
        csv << render_csv(table);
        std::ofstream txt(paths.p("report.txt"), std::ios::binary);
        txt << render_text(table);
        csv.close();
        txt.close();
        record_stage(manifest, "report", paths, {"report.csv", "report.txt"});
    }
}

std::optional<std::string> prescan_config_path(const std::vector<std::string>& args) {
    for (size_t i = 0; i < args.size(); i++) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    Settings s;
    try {
        if (auto config = prescan_config_path(args)) apply_config_file(s, *config);
        apply_env(s);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"synthetic query generation and retrieve-then-rerank pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string config_path;  // consumed by the prescan; registered so CLI11 accepts it
    app.add_option("--config", config_path, "JSON config file")
        ->expected(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", s.seed, "root RNG seed");
        sub->add_option("--parallelism", s.parallelism, "gateway request bound");
        sub->add_flag("--no-lowercase", s.no_lowercase, "disable lowercasing");
        sub->add_flag("--no-stopwords", s.no_stopwords, "keep stopwords");
        sub->add_flag("--no-stem", s.no_stem, "disable Porter stemming");
        sub->add_option("--k1", s.k1, "BM25 k1");
        sub->add_option("--b", s.b, "BM25 b");
    };
    auto add_gateway = [&](CLI::App* sub) {
        sub->add_option("--gateway", s.gateway, "stub | http");
        sub->add_option("--gateway-url", s.gateway_url, "model server base URL");
        sub->add_option("--timeout", s.timeout_s, "request timeout (s)");
        sub->add_option("--retries", s.retries, "max transient-failure retries");
    };

    // index
    auto* c_index = app.add_subcommand("index", "build and save an inverted index");
    std::string index_corpus, index_out;
    c_index->add_option("--corpus", index_corpus, "BEIR corpus JSONL")->required();
    c_index->add_option("--out", index_out, "output index file")->required();
    add_common(c_index);
    c_index->callback([&] {
        auto index =
            InvertedIndex::build(load_corpus(index_corpus), make_analyzer(s), s.k1, s.b);
        index.save(index_out);
        write_sidecar_manifest(s, index_out);
        err << "indexed " << index.doc_count() << " documents\n";
    });

    // sample
    auto* c_sample = app.add_subcommand("sample", "sample documents from a corpus");
    std::string sample_corpus, sample_out;
    c_sample->add_option("--corpus", sample_corpus, "BEIR corpus JSONL")->required();
    c_sample->add_option("--n", s.sample_size, "sample size");
    c_sample->add_option("--out", sample_out, "output corpus JSONL")->required();
    add_common(c_sample);
    c_sample->callback([&] {
        auto sample = sample_documents(sample_corpus, s.sample_size, s.seed);
        write_corpus(sample, sample_out);
        write_sidecar_manifest(s, sample_out);
        err << "sampled " << sample.size() << " documents\n";
    });

    // generate
    auto* c_generate = app.add_subcommand("generate", "generate one query per document");
    std::string gen_docs, gen_template, gen_fewshot, gen_out, gen_checkpoint;
    c_generate->add_option("--docs", gen_docs, "sampled corpus JSONL")->required();
    c_generate->add_option("--template", gen_template, "prompt template file")->required();
    c_generate->add_option("--fewshot", gen_fewshot, "few-shot examples JSONL")->required();
    c_generate->add_option("--out", gen_out, "output pairs JSONL")->required();
    c_generate->add_option("--checkpoint", gen_checkpoint, "resume checkpoint file");
    c_generate->add_option("--max-new-tokens", s.max_new_tokens, "generation budget");
    c_generate->add_option("--max-doc-chars", s.max_doc_chars, "document truncation");
    c_generate->add_option("--logprob-mode", s.logprob_mode, "mean | sum");
    add_common(c_generate);
    add_gateway(c_generate);
    c_generate->callback([&] {
        auto tmpl = PromptTemplate::load(gen_template);
        auto examples = load_fewshot(gen_fewshot);
        auto gateway = make_gateway(s);
        GenOptions options;
        options.max_new_tokens = s.max_new_tokens;
        options.max_doc_chars = s.max_doc_chars;
        options.logprob_agg =
            s.logprob_mode == "sum" ? LogprobAgg::sum : LogprobAgg::mean;
        options.parallelism = s.parallelism;
        options.checkpoint_path = gen_checkpoint;
        GenStats stats;
        auto pairs = generate_queries(load_corpus(gen_docs), tmpl, examples, *gateway,
                                      options, &stats);
        save_pairs(pairs, gen_out);
        write_sidecar_manifest(s, gen_out);
        err << "generated " << stats.generated << " pairs (" << stats.degenerate
            << " degenerate, " << stats.resumed << " resumed)\n";
    });

    // filter
    auto* c_filter = app.add_subcommand("filter", "keep the top pairs (v1 or v2)");
    std::string filter_pairs, filter_out, filter_corpus, filter_cache;
    std::string filter_mode = "v2";
    c_filter->add_option("--pairs", filter_pairs, "pairs JSONL")->required();
    c_filter->add_option("--mode", filter_mode, "v1 (logprob) | v2 (relevance score)");
    c_filter->add_option("--keep-top", s.keep_top, "pairs to keep");
    c_filter->add_option("--corpus", filter_corpus, "corpus JSONL (v2 scoring)");
    c_filter->add_option("--cache", filter_cache, "score cache file (v2)");
    c_filter->add_option("--out", filter_out, "output pairs JSONL")->required();
    add_common(c_filter);
    add_gateway(c_filter);
    c_filter->callback([&] {
        auto pairs = load_pairs(filter_pairs);
        std::vector<SyntheticPair> kept;
        if (filter_mode == "v1") {
            kept = filter_v1(std::move(pairs), s.keep_top);
        } else if (filter_mode == "v2") {
            if (filter_corpus.empty())
                throw std::runtime_error("filter --mode v2 requires --corpus");
            auto corpus =
                std::make_shared<std::vector<Document>>(load_corpus(filter_corpus));
            auto gateway = make_gateway(s);
            FilterV2Options options;
            options.parallelism = s.parallelism;
            options.cache_path = filter_cache;
            kept = filter_v2(std::move(pairs), *gateway, make_lookup(corpus),
                             s.keep_top, options);
        } else {
            throw CLI::ValidationError("--mode", "expected v1 or v2");
        }
        save_pairs(kept, filter_out);
        write_sidecar_manifest(s, filter_out);
        err << "kept " << kept.size() << " pairs\n";
    });

    // mine-negatives
    auto* c_mine = app.add_subcommand("mine-negatives",
                                      "sample one BM25 negative per pair");
    std::string mine_pairs, mine_index, mine_corpus, mine_out;
    c_mine->add_option("--pairs", mine_pairs, "filtered pairs JSONL")->required();
    c_mine->add_option("--index", mine_index, "saved index file");
    c_mine->add_option("--corpus", mine_corpus, "corpus JSONL (built on the fly)");
    c_mine->add_option("--pool-depth", s.pool_depth, "BM25 pool depth");
    c_mine->add_option("--out", mine_out, "output negatives TSV")->required();
    add_common(c_mine);
    c_mine->callback([&] {
        auto index = obtain_index(s, mine_index, mine_corpus);
        auto pairs = load_pairs(mine_pairs);
        std::map<std::string, std::string> negatives;
        size_t no_negative = 0;
        for (const auto& pair : pairs) {
            auto neg = mine_negative(pair, index, s.pool_depth, s.seed);
            if (neg)
                negatives[pair.doc_id] = *neg;
            else
                no_negative++;
        }
        save_negatives(negatives, mine_out);
        write_sidecar_manifest(s, mine_out);
        err << "mined " << negatives.size() << " negatives (" << no_negative
            << " without a pool)\n";
    });

    // build-trainset
    auto* c_trainset = app.add_subcommand("build-trainset",
                                          "emit balanced training examples");
    std::string ts_pairs, ts_negatives, ts_corpus, ts_out;
    c_trainset->add_option("--pairs", ts_pairs, "filtered pairs JSONL")->required();
    c_trainset->add_option("--negatives", ts_negatives, "negatives TSV")->required();
    c_trainset->add_option("--corpus", ts_corpus, "corpus JSONL")->required();
    c_trainset->add_option("--out", ts_out, "output trainset TSV")->required();
    add_common(c_trainset);
    c_trainset->callback([&] {
        auto corpus = std::make_shared<std::vector<Document>>(load_corpus(ts_corpus));
        TrainsetStats stats;
        auto trainset = build_trainset(load_pairs(ts_pairs),
                                       load_negatives(ts_negatives),
                                       make_lookup(corpus), &stats);
        write_trainset(trainset, ts_out);
        write_sidecar_manifest(s, ts_out);
        err << "wrote " << trainset.size() << " examples (" << stats.no_negative
            << " pairs dropped without negatives)\n";
    });

    // emit-batches
    auto* c_batches = app.add_subcommand("emit-batches", "split a trainset into batches");
    std::string batches_trainset, batches_out;
    c_batches->add_option("--trainset", batches_trainset, "trainset TSV")->required();
    c_batches->add_option("--batch-pos", s.batch_pos, "positives per batch");
    c_batches->add_option("--batch-neg", s.batch_neg, "negatives per batch");
    c_batches->add_option("--out", batches_out, "output batches JSONL")->required();
    add_common(c_batches);
    c_batches->callback([&] {
        auto batches = emit_batches(load_trainset(batches_trainset), s.batch_pos,
                                    s.batch_neg, s.seed);
        save_batches(batches, batches_out);
        write_sidecar_manifest(s, batches_out);
        err << "emitted " << batches.size() << " batches\n";
    });

    // retrieve
    auto* c_retrieve = app.add_subcommand("retrieve", "BM25 top-k for each query");
    std::string ret_index, ret_corpus, ret_queries, ret_out, ret_tag = "bm25";
    c_retrieve->add_option("--index", ret_index, "saved index file");
    c_retrieve->add_option("--corpus", ret_corpus, "corpus JSONL (built on the fly)");
    c_retrieve->add_option("--queries", ret_queries, "queries JSONL")->required();
    c_retrieve->add_option("--depth", s.depth, "documents per query");
    c_retrieve->add_option("--tag", ret_tag, "run tag");
    c_retrieve->add_option("--out", ret_out, "output TREC run file")->required();
    add_common(c_retrieve);
    c_retrieve->callback([&] {
        auto index = obtain_index(s, ret_index, ret_corpus);
        auto run = retrieve_all(index, load_queries(ret_queries), s.depth);
        write_run(run, ret_tag, ret_out);
        write_sidecar_manifest(s, ret_out);
        err << "retrieved for " << run.rankings.size() << " queries\n";
    });

    // rerank
    auto* c_rerank = app.add_subcommand("rerank", "rescore a run with the gateway");
    std::string rr_run, rr_queries, rr_corpus, rr_out, rr_tag = "reranked";
    c_rerank->add_option("--run", rr_run, "input TREC run file")->required();
    c_rerank->add_option("--queries", rr_queries, "queries JSONL")->required();
    c_rerank->add_option("--corpus", rr_corpus, "corpus JSONL")->required();
    c_rerank->add_option("--tag", rr_tag, "run tag");
    c_rerank->add_option("--out", rr_out, "output TREC run file")->required();
    add_common(c_rerank);
    add_gateway(c_rerank);
    c_rerank->callback([&] {
        auto corpus = std::make_shared<std::vector<Document>>(load_corpus(rr_corpus));
        auto gateway = make_gateway(s);
        RerankSpec spec;
        spec.scorer_tag = rr_tag;
        spec.parallelism = s.parallelism;
        auto reranked = rerank(load_run(rr_run), load_queries(rr_queries),
                               make_lookup(corpus), *gateway, spec);
        write_run(reranked, rr_tag, rr_out);
        write_sidecar_manifest(s, rr_out);
        err << "reranked " << reranked.rankings.size() << " queries\n";
    });

    // evaluate
    auto* c_evaluate = app.add_subcommand("evaluate", "nDCG@k for a run");
    std::string eval_qrels, eval_run;
    uint64_t eval_k = 10;
    c_evaluate->add_option("--qrels", eval_qrels, "qrels TSV")->required();
    c_evaluate->add_option("--run", eval_run, "TREC run file")->required();
    c_evaluate->add_option("--k", eval_k, "rank cutoff");
    c_evaluate->callback([&] {
        auto result = evaluate_run(load_run(eval_run), load_qrels(eval_qrels), eval_k);
        char buf[64];
        std::snprintf(buf, sizeof buf, "nDCG@%llu\t%.4f\n",
                      static_cast<unsigned long long>(eval_k), result.mean);
        out << buf;
        err << result.judged_query_count << " queries scored\n";
    });

    // report
    auto* c_report = app.add_subcommand("report", "aggregate per-dataset results");
    std::string report_results, report_csv;
    std::vector<std::string> report_subset;
    c_report->add_option("--results", report_results,
                         "JSON {dataset: {system: score}}")->required();
    c_report->add_option("--subset", report_subset,
                         "datasets for a second average row");
    c_report->add_option("--csv", report_csv, "also write CSV here");
    c_report->callback([&] {
        std::ifstream in(report_results);
        if (!in) throw std::runtime_error("cannot open " + report_results);
        auto results = json::parse(in)
                           .get<std::map<std::string, std::map<std::string, double>>>();
        auto subset = report_subset.empty()
                          ? std::nullopt
                          : std::optional<std::vector<std::string>>(report_subset);
        auto table = aggregate_report(results, subset);
        out << render_text(table);
        if (!report_csv.empty()) {
            std::ofstream csv(report_csv, std::ios::binary);
            csv << render_csv(table);
        }
    });

    // run-all
    auto* c_runall = app.add_subcommand("run-all", "full pipeline, stage-resumable");
    RunAllArgs ra;
    c_runall->add_option("--corpus", ra.corpus, "BEIR corpus JSONL")->required();
    c_runall->add_option("--queries", ra.queries, "test queries JSONL")->required();
    c_runall->add_option("--qrels", ra.qrels, "qrels TSV")->required();
    c_runall->add_option("--template", ra.template_path, "prompt template")->required();
    c_runall->add_option("--fewshot", ra.fewshot_path, "few-shot JSONL")->required();
    c_runall->add_option("--out-dir", ra.out_dir, "output directory")->required();
    c_runall->add_option("--dataset", ra.dataset, "dataset name for reports");
    c_runall->add_option("--sample-size", s.sample_size, "documents to sample");
    c_runall->add_option("--keep-top", s.keep_top, "pairs to keep after filtering");
    c_runall->add_option("--pool-depth", s.pool_depth, "negative mining pool depth");
    c_runall->add_option("--batch-pos", s.batch_pos, "positives per batch");
    c_runall->add_option("--batch-neg", s.batch_neg, "negatives per batch");
    c_runall->add_option("--depth", s.depth, "retrieval depth");
    c_runall->add_option("--max-new-tokens", s.max_new_tokens, "generation budget");
    c_runall->add_option("--max-doc-chars", s.max_doc_chars, "document truncation");
    c_runall->add_option("--logprob-mode", s.logprob_mode, "mean | sum");
    add_common(c_runall);
    add_gateway(c_runall);
    c_runall->callback([&] { run_all(s, ra, err); });

    // Lets top-level options like --config appear after the subcommand name.
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<const char*> argv;
    argv.push_back("synthir");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help / --version print through CLI11's machinery.
            return app.exit(e, out, err);
        }
        app.exit(e, out, err);
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace synthir::cli
