// ragfair - metamorphic fairness-testing harness for RAG pipelines.
//
// Subcommands mirror the pipeline stages so each is independently invocable:
//   clean -> index -> perturb -> run -> report, plus validate for config lint.
// Exit codes: 0 success, 1 run failed, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ragfair/clients.hpp"
#include "ragfair/corpus.hpp"
#include "ragfair/errors.hpp"
#include "ragfair/flatindex.hpp"
#include "ragfair/jsonl.hpp"
#include "ragfair/perturb.hpp"
#include "ragfair/pipeline.hpp"
#include "ragfair/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailed = 1;
constexpr int kExitConfig = 2;

struct CleanArgs {
    std::string in, out;
    std::size_t min_chars = 10;
    double iqr_mult = 1.5;
    double sample_frac = 0.0;
    std::uint64_t sample_seed = 0;
};

int do_clean(const CleanArgs& args) {
    ragfair::CleaningConfig cfg;
    cfg.min_chars = args.min_chars;
    cfg.iqr_multiplier = args.iqr_mult;

    const auto raw = ragfair::load_raw_corpus(args.in);
    auto docs = ragfair::clean_corpus(raw, cfg);
    if (docs.empty())
        std::cerr << "warning: every entry was filtered out\n";
    if (args.sample_frac > 0.0)
        docs = ragfair::sample_corpus(docs, args.sample_frac, args.sample_seed);

    ragfair::write_text_file(args.out, ragfair::documents_to_jsonl(docs));
    std::cout << "cleaned " << raw.size() << " -> " << docs.size() << " docs (" << args.out
              << ")\n";
    return kExitOk;
}

struct IndexArgs {
    std::string corpus, out, config;
    bool offline = false;
    std::size_t stub_dim = 64;
    std::uint64_t stub_salt = 42;
    int top_k = 0;
};

int do_index(const IndexArgs& args) {
    const auto docs = ragfair::load_documents(args.corpus);
    if (docs.empty())
        throw ragfair::ConfigError("corpus is empty: " + args.corpus);
    if (args.top_k > 0 && static_cast<std::size_t>(args.top_k) > docs.size())
        throw ragfair::ConfigError("top_k exceeds corpus size");

    std::unique_ptr<ragfair::EmbeddingClient> embedder;
    if (args.offline) {
        embedder = ragfair::stub_embedder(args.stub_dim, args.stub_salt);
    } else {
        if (args.config.empty())
            throw ragfair::ConfigError("index needs --offline or --config with [endpoint.embedding]");
        const auto cfg = ragfair::load_run_config(args.config);
        if (cfg.offline)
            embedder = ragfair::make_offline_embedder(cfg.offline_cfg);
        else
            embedder = ragfair::make_http_embedding_client(cfg.embedding_endpoint);
    }

    const auto index = ragfair::VectorIndex::build(docs, ragfair::embed_corpus(*embedder, docs));
    index.save(args.out);
    std::cout << "indexed " << index.size() << " docs, dim " << index.dim() << " (" << args.out
              << ")\n";
    return kExitOk;
}

struct PerturbArgs {
    std::string seeds, lexicon, out;
};

int do_perturb(const PerturbArgs& args) {
    const auto seeds = ragfair::load_seeds(args.seeds);
    const auto lexicon = ragfair::load_lexicon(args.lexicon);
    const auto pairs = ragfair::generate_pairs(seeds, lexicon);
    ragfair::write_text_file(args.out, ragfair::pairs_to_jsonl(pairs));
    std::cout << "generated " << pairs.size() << " pairs (" << seeds.size() << " seeds x "
              << lexicon.entries.size() << " terms)\n";
    return kExitOk;
}

int do_run(const ragfair::RunConfig& cfg) {
    const ragfair::RunReport report = ragfair::run_pipeline(cfg);

    std::filesystem::create_directories(cfg.output_dir);
    const auto out = [&](const char* name) {
        return (std::filesystem::path(cfg.output_dir) / name).string();
    };
    ragfair::write_text_file(out("report.json"),
                             ragfair::emit_report(report, ragfair::ReportFormat::json));
    ragfair::write_text_file(out("trials.csv"),
                             ragfair::emit_report(report, ragfair::ReportFormat::csv));
    ragfair::write_text_file(out("report.md"),
                             ragfair::emit_report(report, ragfair::ReportFormat::markdown));

    std::cout << "trials: " << report.trials.size() << "\n";
    if (report.aggregates) {
        const auto& a = *report.aggregates;
        std::cout << "retrieval ASR: " << a.retrieval_asr.percent() << "%\n";
        if (a.generation_asr)
            std::cout << "generation ASR: " << a.generation_asr->percent() << "%\n";
        std::cout << "excluded trials: " << a.trials_excluded
                  << ", unparsed: " << a.unparsed_trials << "\n";
    }
    std::cout << "report written to " << cfg.output_dir << "\n";
    if (report.run_failed) {
        std::cerr << "run failed: trial failure fraction exceeded the ceiling\n";
        return kExitRunFailed;
    }
    return kExitOk;
}

struct ReportArgs {
    std::string in, out, format = "markdown";
    bool verify = false;
};

int do_report(const ReportArgs& args) {
    const auto report = ragfair::parse_report_json(ragfair::read_text_file(args.in));
    if (args.verify) {
        std::string diagnostic;
        if (!ragfair::verify_report(report, &diagnostic)) {
            std::cerr << "self-consistency check FAILED: " << diagnostic << "\n";
            return kExitRunFailed;
        }
        std::cout << "self-consistency check passed\n";
    }
    const auto rendered =
        ragfair::emit_report(report, ragfair::report_format_from_string(args.format));
    if (args.out.empty())
        std::cout << rendered;
    else
        ragfair::write_text_file(args.out, rendered);
    return kExitOk;
}

struct ValidateArgs {
    std::string config, lexicon;
};

int do_validate(const ValidateArgs& args) {
    if (args.config.empty() && args.lexicon.empty())
        throw ragfair::ConfigError("validate needs --config and/or --lexicon");
    if (!args.lexicon.empty()) {
        const auto lexicon = ragfair::load_lexicon(args.lexicon);
        std::cout << "lexicon ok: " << lexicon.entries.size() << " terms\n";
    }
    if (!args.config.empty()) {
        const auto cfg = ragfair::load_run_config(args.config);
        cfg.validate();
        std::cout << "config ok\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"metamorphic fairness-testing harness for RAG pipelines"};
    app.require_subcommand(1);

    CleanArgs clean_args;
    auto* clean = app.add_subcommand("clean", "clean and filter a raw corpus");
    clean->add_option("--in", clean_args.in, "raw corpus JSONL")->required();
    clean->add_option("--out", clean_args.out, "cleaned corpus JSONL")->required();
    clean->add_option("--min-chars", clean_args.min_chars, "minimum text length");
    clean->add_option("--iqr-mult", clean_args.iqr_mult, "IQR outlier multiplier");
    clean->add_option("--sample-frac", clean_args.sample_frac, "uniform sample fraction (0,1]");
    clean->add_option("--sample-seed", clean_args.sample_seed, "sampling seed");

    IndexArgs index_args;
    auto* index = app.add_subcommand("index", "embed a cleaned corpus and build the flat index");
    index->add_option("--corpus", index_args.corpus, "cleaned corpus JSONL")->required();
    index->add_option("--out", index_args.out, "index output path")->required();
    index->add_option("--config", index_args.config, "run TOML with [endpoint.embedding]");
    index->add_flag("--offline", index_args.offline, "use the deterministic stub embedder");
    index->add_option("--stub-dim", index_args.stub_dim, "stub embedder dimension");
    index->add_option("--stub-salt", index_args.stub_salt, "stub embedder salt");
    index->add_option("--top-k", index_args.top_k, "validate that k fits the corpus");

    PerturbArgs perturb_args;
    auto* perturb = app.add_subcommand("perturb", "generate demographic query pairs");
    perturb->add_option("--seeds", perturb_args.seeds, "seed texts JSONL")->required();
    perturb->add_option("--lexicon", perturb_args.lexicon, "lexicon TOML")->required();
    perturb->add_option("--out", perturb_args.out, "pairs JSONL output")->required();

    auto* run = app.add_subcommand("run", "run the full pipeline and write reports");
    std::string run_config_path;
    run->add_option("--config", run_config_path, "run configuration TOML");
    std::string o_corpus, o_seeds, o_pairs, o_lexicon, o_index, o_outdir, o_metric, o_hamming;
    int o_topk = 0;
    bool o_offline = false;
    std::size_t o_dim = 0;
    std::uint64_t o_salt = 0;
    double o_t1 = 0, o_t2 = 0, o_frac = 0, o_ceiling = 0;
    std::uint64_t o_sample_seed = 0;
    double o_temp = 0, o_topp = 0;
    int o_gtopk = 0, o_maxtok = 0;
    bool o_dosample = true;
    std::int64_t o_gseed = 0;
    std::string e_url, e_model, e_key, c_url, c_model, c_key;
    double e_timeout = 0, c_timeout = 0;
    int e_retries = 0, c_retries = 0, e_conc = 0, c_conc = 0;
    run->add_option("--corpus", o_corpus, "cleaned corpus JSONL");
    run->add_option("--seeds", o_seeds, "seed texts JSONL");
    run->add_option("--pairs", o_pairs, "pre-generated pairs JSONL");
    run->add_option("--lexicon", o_lexicon, "lexicon TOML");
    run->add_option("--index", o_index, "index file (loaded if present, else built)");
    run->add_option("--out-dir", o_outdir, "report output directory");
    run->add_option("--top-k", o_topk, "documents retrieved per query");
    run->add_option("--metric", o_metric, "euclidean or cosine");
    run->add_option("--hamming-mode", o_hamming, "rank or matched");
    run->add_flag("--offline", o_offline, "stub clients, no network");
    run->add_option("--stub-dim", o_dim, "offline embedder dimension");
    run->add_option("--stub-salt", o_salt, "offline embedder salt");
    run->add_option("--rrs-t1", o_t1, "robustness band boundary t1");
    run->add_option("--rrs-t2", o_t2, "robustness band boundary t2");
    run->add_option("--sample-frac", o_frac, "corpus sample fraction");
    run->add_option("--sample-seed", o_sample_seed, "corpus sample seed");
    run->add_option("--failure-ceiling", o_ceiling, "max tolerated trial failure fraction");
    run->add_option("--temperature", o_temp, "generation temperature");
    run->add_option("--top-p", o_topp, "generation top_p");
    run->add_option("--gen-top-k", o_gtopk, "generation top_k");
    run->add_option("--max-tokens", o_maxtok, "generation max_tokens");
    run->add_option("--do-sample", o_dosample, "generation do_sample");
    run->add_option("--gen-seed", o_gseed, "generation seed");
    run->add_option("--embed-url", e_url, "embedding endpoint base URL");
    run->add_option("--embed-model", e_model, "embedding model name");
    run->add_option("--embed-api-key", e_key, "embedding API key");
    run->add_option("--embed-timeout", e_timeout, "embedding timeout seconds");
    run->add_option("--embed-retries", e_retries, "embedding max retries");
    run->add_option("--embed-concurrency", e_conc, "embedding max concurrency");
    run->add_option("--chat-url", c_url, "chat endpoint base URL");
    run->add_option("--chat-model", c_model, "chat model name");
    run->add_option("--chat-api-key", c_key, "chat API key");
    run->add_option("--chat-timeout", c_timeout, "chat timeout seconds");
    run->add_option("--chat-retries", c_retries, "chat max retries");
    run->add_option("--chat-concurrency", c_conc, "chat max concurrency");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "re-render or verify a saved report.json");
    report->add_option("--in", report_args.in, "saved report.json")->required();
    report->add_option("--format", report_args.format, "json, csv, or markdown");
    report->add_option("--out", report_args.out, "output path (stdout when omitted)");
    report->add_flag("--verify", report_args.verify, "recompute aggregates and compare");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "lint a config and/or lexicon");
    validate->add_option("--config", validate_args.config, "run configuration TOML");
    validate->add_option("--lexicon", validate_args.lexicon, "lexicon TOML");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (clean->parsed())
            return do_clean(clean_args);
        if (index->parsed())
            return do_index(index_args);
        if (perturb->parsed())
            return do_perturb(perturb_args);
        if (report->parsed())
            return do_report(report_args);
        if (validate->parsed())
            return do_validate(validate_args);

        // run: config file first, then flag overrides
        ragfair::RunConfig cfg;
        if (!run_config_path.empty())
            cfg = ragfair::load_run_config(run_config_path);
        const auto set = [&](const char* flag) { return run->count(flag) > 0; };
        if (set("--corpus")) cfg.corpus_path = o_corpus;
        if (set("--seeds")) cfg.seeds_path = o_seeds;
        if (set("--pairs")) cfg.pairs_path = o_pairs;
        if (set("--lexicon")) cfg.lexicon_path = o_lexicon;
        if (set("--index")) cfg.index_path = o_index;
        if (set("--out-dir")) cfg.output_dir = o_outdir;
        if (set("--top-k")) cfg.top_k = o_topk;
        if (set("--metric")) cfg.metric = ragfair::metric_from_string(o_metric);
        if (set("--hamming-mode")) cfg.hamming_mode = ragfair::hamming_mode_from_string(o_hamming);
        if (set("--offline")) cfg.offline = o_offline;
        if (set("--stub-dim")) cfg.offline_cfg.embed_dim = o_dim;
        if (set("--stub-salt")) cfg.offline_cfg.embed_salt = o_salt;
        if (set("--rrs-t1")) cfg.rrs_thresholds.t1 = o_t1;
        if (set("--rrs-t2")) cfg.rrs_thresholds.t2 = o_t2;
        if (set("--sample-frac")) {
            ragfair::SampleSpec s = cfg.sample.value_or(ragfair::SampleSpec{});
            s.fraction = o_frac;
            cfg.sample = s;
        }
        if (set("--sample-seed")) {
            ragfair::SampleSpec s = cfg.sample.value_or(ragfair::SampleSpec{});
            s.seed = o_sample_seed;
            cfg.sample = s;
        }
        if (set("--failure-ceiling")) cfg.failure_ceiling = o_ceiling;
        if (set("--temperature")) cfg.generation.temperature = o_temp;
        if (set("--top-p")) cfg.generation.top_p = o_topp;
        if (set("--gen-top-k")) cfg.generation.top_k = o_gtopk;
        if (set("--max-tokens")) cfg.generation.max_tokens = o_maxtok;
        if (set("--do-sample")) cfg.generation.do_sample = o_dosample;
        if (set("--gen-seed")) cfg.generation.seed = o_gseed;
        if (set("--embed-url")) cfg.embedding_endpoint.base_url = e_url;
        if (set("--embed-model")) cfg.embedding_endpoint.model_name = e_model;
        if (set("--embed-api-key")) cfg.embedding_endpoint.api_key = e_key;
        if (set("--embed-timeout")) cfg.embedding_endpoint.timeout_s = e_timeout;
        if (set("--embed-retries")) cfg.embedding_endpoint.max_retries = e_retries;
        if (set("--embed-concurrency")) cfg.embedding_endpoint.max_concurrency = e_conc;
        if (set("--chat-url")) cfg.chat_endpoint.base_url = c_url;
        if (set("--chat-model")) cfg.chat_endpoint.model_name = c_model;
        if (set("--chat-api-key")) cfg.chat_endpoint.api_key = c_key;
        if (set("--chat-timeout")) cfg.chat_endpoint.timeout_s = c_timeout;
        if (set("--chat-retries")) cfg.chat_endpoint.max_retries = c_retries;
        if (set("--chat-concurrency")) cfg.chat_endpoint.max_concurrency = c_conc;
        return do_run(cfg);
    } catch (const ragfair::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ragfair::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailed;
    }
}
