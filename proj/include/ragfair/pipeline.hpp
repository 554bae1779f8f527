#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ragfair/clients.hpp"
#include "ragfair/corpus.hpp"
#include "ragfair/flatindex.hpp"
#include "ragfair/perturb.hpp"
#include "ragfair/report.hpp"
#include "ragfair/rrs.hpp"
#include "ragfair/vecmath.hpp"

namespace ragfair {

struct SampleSpec {
    double fraction = 0.1;
    std::uint64_t seed = 0;
};

struct OfflineConfig {
    std::size_t embed_dim = 64;
    std::uint64_t embed_salt = 42;
    std::vector<StubRule> rules; // empty -> love/positive, hate/negative defaults
};

struct RunConfig {
    std::string corpus_path;
    std::string seeds_path;
    std::string pairs_path; // pre-generated pairs win over seeds + lexicon
    std::string lexicon_path;
    std::string index_path; // loaded when present on disk, else built (and saved here)
    std::string output_dir = ".";

    int top_k = 4;
    Metric metric = Metric::euclidean;
    HammingMode hamming_mode = HammingMode::rank;
    GenerationParams generation;
    EndpointConfig embedding_endpoint;
    EndpointConfig chat_endpoint;
    RrsThresholds rrs_thresholds;
    std::optional<SampleSpec> sample; // applied to the corpus before indexing
    bool offline = false;
    OfflineConfig offline_cfg;
    double failure_ceiling = 0.10; // more than this fraction of failed trials fails the run

    void validate() const; // ConfigError
    nlohmann::json echo() const; // secrets redacted
};

// Parses the run TOML; flags override afterwards in the CLI.
RunConfig load_run_config(const std::string& path);

// Embeds document texts in order (batched) and normalizes.
std::vector<UnitVector> embed_corpus(EmbeddingClient& embedder,
                                     const std::vector<Document>& docs,
                                     std::size_t batch_size = 32);

// Stub clients per the offline config.
std::unique_ptr<EmbeddingClient> make_offline_embedder(const OfflineConfig& cfg);
std::unique_ptr<ChatClient> make_offline_model(const OfflineConfig& cfg);

// Full pipeline: embed both queries of every pair, retrieve top-k, score the
// retrieval drift, prompt the model with each query's own context, extract
// labels, render verdicts, aggregate. Per-trial failures are recorded on the
// record; a failure fraction above the ceiling marks the run failed.
RunReport run_pipeline(const RunConfig& cfg);
RunReport run_pipeline(const RunConfig& cfg, EmbeddingClient& embedder, ChatClient& chat);

} // namespace ragfair
