#include "ragfair/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <thread>
#include <unordered_map>

#include "ragfair/errors.hpp"
#include "ragfair/jsonl.hpp"
#include "ragfair/minitoml.hpp"
#include "ragfair/mrt.hpp"
#include "ragfair/sha256.hpp"

namespace ragfair {
namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

EndpointConfig endpoint_from_toml(const minitoml::Table& t, const EndpointConfig& defaults) {
    EndpointConfig cfg = defaults;
    cfg.base_url = t.get_string_or("base_url", defaults.base_url);
    cfg.model_name = t.get_string_or("model", defaults.model_name);
    cfg.api_key = t.get_string_or("api_key", defaults.api_key);
    cfg.timeout_s = t.get_double_or("timeout_s", defaults.timeout_s);
    cfg.max_retries = static_cast<int>(t.get_int_or("max_retries", defaults.max_retries));
    cfg.max_concurrency =
        static_cast<int>(t.get_int_or("max_concurrency", defaults.max_concurrency));
    cfg.retry_jitter = t.get_bool_or("retry_jitter", defaults.retry_jitter);
    return cfg;
}

} // namespace

void RunConfig::validate() const {
    if (corpus_path.empty())
        throw ConfigError("corpus path is required");
    if (lexicon_path.empty())
        throw ConfigError("lexicon path is required");
    if (seeds_path.empty() && pairs_path.empty())
        throw ConfigError("either a seeds path or a pairs path is required");
    if (top_k < 1)
        throw ConfigError("top_k must be >= 1");
    if (sample && (!(sample->fraction > 0.0) || sample->fraction > 1.0))
        throw ConfigError("sample fraction must be in (0, 1]");
    if (!(failure_ceiling >= 0.0 && failure_ceiling <= 1.0))
        throw ConfigError("failure ceiling must be in [0, 1]");
    generation.validate();
    rrs_thresholds.validate();
    if (offline) {
        if (offline_cfg.embed_dim < 2)
            throw ConfigError("offline embed_dim must be >= 2");
    } else {
        if (embedding_endpoint.base_url.empty())
            throw ConfigError("embedding endpoint base_url is required (or use --offline)");
        if (chat_endpoint.base_url.empty())
            throw ConfigError("chat endpoint base_url is required (or use --offline)");
        embedding_endpoint.validate();
        chat_endpoint.validate();
    }
}

nlohmann::json RunConfig::echo() const {
    auto endpoint_echo = [](const EndpointConfig& e) {
        return nlohmann::json{{"base_url", e.base_url},
                              {"model", e.model_name},
                              {"api_key", e.api_key.empty() ? "" : "<set>"},
                              {"timeout_s", e.timeout_s},
                              {"max_retries", e.max_retries},
                              {"max_concurrency", e.max_concurrency}};
    };
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : offline_cfg.rules)
        rules.push_back({{"keyword", r.keyword}, {"label", r.label}});
    nlohmann::json j{{"corpus", corpus_path},
                     {"seeds", seeds_path},
                     {"pairs", pairs_path},
                     {"lexicon", lexicon_path},
                     {"index", index_path},
                     {"output_dir", output_dir},
                     {"top_k", top_k},
                     {"metric", to_string(metric)},
                     {"hamming_mode", to_string(hamming_mode)},
                     {"generation", generation.to_json()},
                     {"offline", offline},
                     {"failure_ceiling", failure_ceiling},
                     {"endpoint_embedding", endpoint_echo(embedding_endpoint)},
                     {"endpoint_chat", endpoint_echo(chat_endpoint)}};
    if (offline) {
        j["offline_embed_dim"] = offline_cfg.embed_dim;
        j["offline_embed_salt"] = offline_cfg.embed_salt;
        j["offline_rules"] = rules;
    }
    j["sample"] = sample ? nlohmann::json{{"fraction", sample->fraction}, {"seed", sample->seed}}
                         : nlohmann::json();
    return j;
}

RunConfig load_run_config(const std::string& path) {
    const auto doc = minitoml::parse_file(path);
    RunConfig cfg;

    if (const auto* paths = doc.find_table("paths")) {
        cfg.corpus_path = paths->get_string_or("corpus", "");
        cfg.seeds_path = paths->get_string_or("seeds", "");
        cfg.pairs_path = paths->get_string_or("pairs", "");
        cfg.lexicon_path = paths->get_string_or("lexicon", "");
        cfg.index_path = paths->get_string_or("index", "");
        cfg.output_dir = paths->get_string_or("output_dir", cfg.output_dir);
    }
    if (const auto* run = doc.find_table("run")) {
        cfg.top_k = static_cast<int>(run->get_int_or("top_k", cfg.top_k));
        cfg.metric = metric_from_string(run->get_string_or("metric", to_string(cfg.metric)));
        cfg.hamming_mode =
            hamming_mode_from_string(run->get_string_or("hamming_mode", to_string(cfg.hamming_mode)));
        cfg.offline = run->get_bool_or("offline", cfg.offline);
        cfg.failure_ceiling = run->get_double_or("failure_ceiling", cfg.failure_ceiling);
    }
    if (const auto* sample = doc.find_table("sample")) {
        SampleSpec s;
        s.fraction = sample->get_double_or("fraction", s.fraction);
        s.seed = static_cast<std::uint64_t>(sample->get_int_or("seed", 0));
        cfg.sample = s;
    }
    if (const auto* gen = doc.find_table("generation")) {
        cfg.generation.temperature = gen->get_double_or("temperature", cfg.generation.temperature);
        cfg.generation.top_p = gen->get_double_or("top_p", cfg.generation.top_p);
        cfg.generation.top_k = static_cast<int>(gen->get_int_or("top_k", cfg.generation.top_k));
        cfg.generation.max_tokens =
            static_cast<int>(gen->get_int_or("max_tokens", cfg.generation.max_tokens));
        cfg.generation.do_sample = gen->get_bool_or("do_sample", cfg.generation.do_sample);
        cfg.generation.seed = gen->get_int_or("seed", cfg.generation.seed);
    }
    if (const auto* rrs = doc.find_table("rrs")) {
        cfg.rrs_thresholds.t1 = rrs->get_double_or("t1", cfg.rrs_thresholds.t1);
        cfg.rrs_thresholds.t2 = rrs->get_double_or("t2", cfg.rrs_thresholds.t2);
    }
    if (const auto* off = doc.find_table("offline")) {
        cfg.offline_cfg.embed_dim =
            static_cast<std::size_t>(off->get_int_or("embed_dim", 64));
        cfg.offline_cfg.embed_salt =
            static_cast<std::uint64_t>(off->get_int_or("embed_salt", 42));
    }
    if (const auto* rules = doc.find_array("offline.rule")) {
        for (const auto& r : *rules)
            cfg.offline_cfg.rules.push_back({r.get_string("keyword"), r.get_string("label")});
    }
    if (const auto* emb = doc.find_table("endpoint.embedding"))
        cfg.embedding_endpoint = endpoint_from_toml(*emb, cfg.embedding_endpoint);
    if (const auto* chat = doc.find_table("endpoint.chat"))
        cfg.chat_endpoint = endpoint_from_toml(*chat, cfg.chat_endpoint);
    return cfg;
}

std::vector<UnitVector> embed_corpus(EmbeddingClient& embedder,
                                     const std::vector<Document>& docs,
                                     std::size_t batch_size) {
    if (batch_size < 1)
        throw ArgumentError("batch_size must be >= 1");
    std::vector<UnitVector> out;
    out.reserve(docs.size());
    std::vector<std::string> batch;
    for (std::size_t start = 0; start < docs.size(); start += batch_size) {
        batch.clear();
        const std::size_t end = std::min(docs.size(), start + batch_size);
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(docs[i].text);
        for (auto& raw : embedder.embed_batch(batch))
            out.push_back(normalize(raw));
    }
    return out;
}

std::unique_ptr<EmbeddingClient> make_offline_embedder(const OfflineConfig& cfg) {
    return stub_embedder(cfg.embed_dim, cfg.embed_salt);
}

std::unique_ptr<ChatClient> make_offline_model(const OfflineConfig& cfg) {
    if (!cfg.rules.empty())
        return stub_model(cfg.rules);
    return stub_model({{"love", "positive"}, {"hate", "negative"}});
}

namespace {

TrialRecord run_single_trial(const QueryPair& pair, const VectorIndex& index,
                             const std::unordered_map<std::uint64_t, const Document*>& docs_by_id,
                             const RunConfig& cfg, EmbeddingClient& embedder, ChatClient& chat) {
    TrialRecord t;
    t.pair_id = pair.pair_id;
    t.seed_id = pair.seed_id;
    t.category = pair.category;
    t.term = pair.term;
    try {
        const auto raw = embedder.embed_batch({pair.original, pair.perturbed});
        if (raw.size() != 2)
            throw ProtocolError("expected 2 query embeddings, got " + std::to_string(raw.size()));
        const UnitVector q_orig = normalize(raw[0]);
        const UnitVector q_pert = normalize(raw[1]);

        const std::size_t k = static_cast<std::size_t>(cfg.top_k);
        t.retrieval_orig = index.search(q_orig, k);
        t.retrieval_pert = index.search(q_pert, k);

        auto vectors_of = [&](const RetrievalResult& r) {
            std::vector<UnitVector> vecs;
            vecs.reserve(r.entries.size());
            for (const auto& e : r.entries) {
                const auto pos = index.position_of(e.doc_id);
                if (!pos)
                    throw ArgumentError("retrieved doc id missing from index");
                vecs.push_back(index.vector_at(*pos));
            }
            return vecs;
        };
        const auto vecs_orig = vectors_of(t.retrieval_orig);
        const auto vecs_pert = vectors_of(t.retrieval_pert);
        t.rrs = rrs_score(t.retrieval_orig, t.retrieval_pert, vecs_orig, vecs_pert, cfg.metric,
                          cfg.hamming_mode);

        auto context_of = [&](const RetrievalResult& r) {
            std::vector<std::string> texts;
            texts.reserve(r.entries.size());
            for (const auto& e : r.entries) {
                const auto it = docs_by_id.find(e.doc_id);
                if (it == docs_by_id.end())
                    throw ConfigError("index doc id " + std::to_string(e.doc_id) +
                                      " is not present in the corpus");
                texts.push_back(it->second->text);
            }
            return texts;
        };
        const auto [sys_orig, user_orig] = build_prompt(context_of(t.retrieval_orig), pair.original);
        t.response_orig = chat.chat_complete(sys_orig, user_orig, cfg.generation);
        const auto [sys_pert, user_pert] = build_prompt(context_of(t.retrieval_pert), pair.perturbed);
        t.response_pert = chat.chat_complete(sys_pert, user_pert, cfg.generation);

        t.label_orig = extract_sentiment(t.response_orig);
        t.label_pert = extract_sentiment(t.response_pert);
        t.retrieval_violated = retrieval_mrt(t.retrieval_orig, t.retrieval_pert);
        t.generation_violated = generation_mrt(t.label_orig, t.label_pert);
    } catch (const Error& e) {
        t = TrialRecord{};
        t.pair_id = pair.pair_id;
        t.seed_id = pair.seed_id;
        t.category = pair.category;
        t.term = pair.term;
        t.status = TrialStatus::failed;
        t.error = e.what();
    }
    return t;
}

} // namespace

RunReport run_pipeline(const RunConfig& cfg, EmbeddingClient& embedder, ChatClient& chat) {
    cfg.validate();

    std::vector<Document> docs = load_documents(cfg.corpus_path);
    if (docs.empty())
        throw ConfigError("corpus is empty: " + cfg.corpus_path);
    if (cfg.sample)
        docs = sample_corpus(docs, cfg.sample->fraction, cfg.sample->seed);
    if (static_cast<std::size_t>(cfg.top_k) > docs.size())
        throw ConfigError("top_k=" + std::to_string(cfg.top_k) + " exceeds corpus size " +
                          std::to_string(docs.size()));

    const Lexicon lexicon = load_lexicon(cfg.lexicon_path);

    std::optional<VectorIndex> index;
    if (!cfg.index_path.empty() && std::filesystem::exists(cfg.index_path)) {
        index = VectorIndex::load(cfg.index_path);
        if (static_cast<std::size_t>(cfg.top_k) > index->size())
            throw ConfigError("top_k exceeds loaded index size");
    } else {
        index = VectorIndex::build(docs, embed_corpus(embedder, docs));
        if (!cfg.index_path.empty())
            index->save(cfg.index_path);
    }

    std::unordered_map<std::uint64_t, const Document*> docs_by_id;
    docs_by_id.reserve(docs.size());
    for (const auto& d : docs)
        docs_by_id[d.id] = &d;
    for (std::size_t pos = 0; pos < index->size(); ++pos)
        if (!docs_by_id.count(index->doc_id_at(pos)))
            throw ConfigError("index doc id " + std::to_string(index->doc_id_at(pos)) +
                              " has no corpus text");

    std::vector<QueryPair> pairs;
    if (!cfg.pairs_path.empty())
        pairs = load_pairs(cfg.pairs_path);
    else
        pairs = generate_pairs(load_seeds(cfg.seeds_path), lexicon);
    if (pairs.empty())
        throw ConfigError("no query pairs to run");
    std::sort(pairs.begin(), pairs.end(),
              [](const QueryPair& a, const QueryPair& b) { return a.pair_id < b.pair_id; });

    std::vector<TrialRecord> trials(pairs.size());
    const unsigned workers = std::max(
        1u, std::min({static_cast<unsigned>(pairs.size()),
                      static_cast<unsigned>(std::max(cfg.chat_endpoint.max_concurrency, 1)),
                      32u}));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1))
            trials[i] = run_single_trial(pairs[i], *index, docs_by_id, cfg, embedder, chat);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    RunReport report;
    report.timestamp = utc_timestamp();
    report.config_echo = cfg.echo();
    report.lexicon_hash = sha256_hex(read_text_file(cfg.lexicon_path));
    report.template_text = lexicon.prefix_template;
    report.system_prompt = kSentimentSystemPrompt;
    report.quantile_convention = kQuantileConvention;
    report.threshold_rule = "mean_dist <= d_th predicts robust";
    report.offline = cfg.offline;
    report.rrs_thresholds = cfg.rrs_thresholds;
    report.trials = std::move(trials);

    std::uint64_t failed = 0;
    for (const auto& t : report.trials)
        failed += t.status == TrialStatus::failed ? 1 : 0;
    const double failed_fraction =
        static_cast<double>(failed) / static_cast<double>(report.trials.size());
    report.run_failed = failed_fraction > cfg.failure_ceiling;

    try {
        report.aggregates = compute_aggregates(report.trials, cfg.rrs_thresholds);
    } catch (const InsufficientDataError&) {
        report.run_failed = true;
    }
    seal_report(report);
    return report;
}

RunReport run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    std::unique_ptr<EmbeddingClient> embedder;
    std::unique_ptr<ChatClient> chat;
    if (cfg.offline) {
        embedder = make_offline_embedder(cfg.offline_cfg);
        chat = make_offline_model(cfg.offline_cfg);
    } else {
        embedder = make_http_embedding_client(cfg.embedding_endpoint);
        chat = make_http_chat_client(cfg.chat_endpoint);
    }
    return run_pipeline(cfg, *embedder, *chat);
}

} // namespace ragfair
