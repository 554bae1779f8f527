// Acceptance suite: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Criteria 7/8 drive the installed CLI binary end to end.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ragfair/analysis.hpp"
#include "ragfair/corpus.hpp"
#include "ragfair/flatindex.hpp"
#include "ragfair/jsonl.hpp"
#include "ragfair/mrt.hpp"
#include "ragfair/pipeline.hpp"
#include "ragfair/report.hpp"
#include "ragfair/rrs.hpp"
#include "ragfair/vecmath.hpp"

using namespace ragfair;
namespace fs = std::filesystem;

namespace {

int criteria_failed = 0;

struct Criterion {
    int number;
    std::string name;
    std::vector<std::string> problems;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void expect(bool ok, const std::string& what) {
        if (!ok)
            problems.push_back(what);
    }
    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    void finish() {
        if (problems.empty()) {
            std::cout << "PASS  criterion " << number << ": " << name << "\n";
            return;
        }
        ++criteria_failed;
        std::cout << "FAIL  criterion " << number << ": " << name << "\n";
        for (std::size_t i = 0; i < problems.size() && i < 5; ++i)
            std::cout << "      - " << problems[i] << "\n";
        if (problems.size() > 5)
            std::cout << "      - (" << problems.size() - 5 << " more)\n";
    }
};

std::string shell_quote(const std::string& s) {
    return "'" + s + "'";
}

int run_cli(const std::string& args) {
    const std::string cli = RAGFAIR_CLI_PATH;
    const std::string cmd = shell_quote(cli) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

void criterion_1_assignment_oracle() {
    Criterion c{1, "assignment solver equals brute-force permutation minimum"};
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> entry(0.0, 2.0);
    std::uniform_int_distribution<int> k_of(2, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = static_cast<std::size_t>(k_of(rng));
        DistanceMatrix m;
        m.k = k;
        m.values.resize(k * k);
        for (auto& v : m.values)
            v = entry(rng);
        const auto got = optimal_assignment(m);
        const auto want = oracles::brute_force_assignment(m);
        if (std::abs(got.total_cost - want.total_cost) > 1e-9) {
            c.expect(false, "trial " + std::to_string(trial) + ": solver " +
                                std::to_string(got.total_cost) + " vs brute " +
                                std::to_string(want.total_cost));
            break;
        }
    }
    c.expect(c.elapsed_s() < 10.0, "runtime " + std::to_string(c.elapsed_s()) + "s >= 10s");
    c.finish();
}

void criterion_2_distance_identity() {
    Criterion c{2, "euclidean/cosine identity and endpoint values"};
    std::mt19937_64 rng(1002);
    std::uniform_int_distribution<std::size_t> dim_of(2, 512);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t dim = dim_of(rng);
        const UnitVector u = oracles::random_unit_vector(rng, dim);
        const UnitVector v = oracles::random_unit_vector(rng, dim);
        const double de = dist_euclidean(u, v);
        const double dc = dist_cosine(u, v);
        if (std::abs(de - std::sqrt(2.0 * dc)) > 1e-9 || de < 0.0 || de > 2.0 || dc < 0.0 ||
            dc > 2.0 || dist_euclidean(u, u) != 0.0 || std::abs(dist_cosine(u, u)) > 1e-12 ||
            std::abs(dist_euclidean(u, u.negated()) - 2.0) > 1e-12 ||
            std::abs(dist_cosine(u, u.negated()) - 2.0) > 1e-12) {
            c.expect(false, "violation at trial " + std::to_string(trial) + " dim " +
                                std::to_string(dim));
            break;
        }
    }
    c.finish();
}

void criterion_3_rrs_ranges() {
    Criterion c{3, "RRS composition and ranges on synthetic retrieval pairs"};
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<int> coin(0, 1);
    const std::size_t k = 4;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<UnitVector> ov, pv;
        RetrievalResult orig, pert;
        for (std::size_t i = 0; i < k; ++i) {
            ov.push_back(oracles::random_unit_vector(rng, 24));
            pv.push_back(oracles::random_unit_vector(rng, 24));
            orig.entries.push_back({i, 1.0, coin(rng) == 1});
            pert.entries.push_back({i, 1.0, coin(rng) == 1});
        }
        const RrsBreakdown b = rrs_score(orig, pert, ov, pv, Metric::euclidean);
        const double scaled = b.hamming * 4.0;
        if (b.score != b.mean_dist + b.hamming || b.mean_dist < 0.0 || b.mean_dist > 2.0 ||
            b.score < 0.0 || b.score > 3.0 || scaled != std::round(scaled)) {
            c.expect(false, "range/composition violation at trial " + std::to_string(trial));
            break;
        }
        const RrsBreakdown self = rrs_score(orig, orig, ov, ov, Metric::euclidean);
        if (self.score != 0.0 ||
            classify_score(self.score) != RobustnessBand::perfectly_stable) {
            c.expect(false, "identical retrievals scored non-zero at trial " +
                                std::to_string(trial));
            break;
        }
    }
    c.finish();
}

void criterion_4_retrieval_oracle() {
    Criterion c{4, "flat index equals the exhaustive scan-sort oracle"};
    std::mt19937_64 rng(1004);
    std::uniform_int_distribution<std::size_t> n_of(10, 1000);
    std::uniform_int_distribution<std::size_t> dim_of(2, 64);
    for (int trial = 0; trial < 200 && c.problems.empty(); ++trial) {
        const std::size_t n = n_of(rng);
        const std::size_t dim = dim_of(rng);
        std::vector<UnitVector> vectors;
        std::vector<std::uint64_t> ids;
        std::vector<Document> docs;
        vectors.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            vectors.push_back(oracles::random_unit_vector(rng, dim));
            ids.push_back(i);
            docs.push_back({i, "d", false});
        }
        const auto index = VectorIndex::build(docs, vectors);
        const UnitVector query = oracles::random_unit_vector(rng, dim);
        for (std::size_t k : {std::size_t{1}, std::size_t{4}, std::size_t{10}}) {
            const auto got = index.search(query, k);
            const auto want = oracles::scan_sort_topk(vectors, ids, query, k);
            for (std::size_t i = 0; i < k; ++i) {
                if (got.entries[i].doc_id != want[i].doc_id) {
                    c.expect(false, "order mismatch: trial " + std::to_string(trial) + " k=" +
                                        std::to_string(k) + " rank " + std::to_string(i));
                    break;
                }
            }
        }
    }
    c.expect(c.elapsed_s() < 30.0, "runtime " + std::to_string(c.elapsed_s()) + "s >= 30s");
    c.finish();
}

void criterion_5_rendering_fixtures() {
    Criterion c{5, "ASR/share rendering and score-band fixtures"};
    c.expect(asr(634, 2100).percent() == "30.19", "634/2100 -> " + asr(634, 2100).percent());
    c.expect(asr(377, 2100).percent() == "17.95", "377/2100 -> " + asr(377, 2100).percent());
    c.expect(asr(693, 2100).percent() == "33.00", "693/2100 -> " + asr(693, 2100).percent());
    c.expect(asr(599, 2100).percent() == "28.52", "599/2100 -> " + asr(599, 2100).percent());
    c.expect(make_ratio(282, 599).percent() == "47.08",
             "282/599 -> " + make_ratio(282, 599).percent());
    c.expect(classify_score(0.0) == RobustnessBand::perfectly_stable, "0 misclassified");
    c.expect(classify_score(0.63) == RobustnessBand::high, "0.63 misclassified");
    c.expect(classify_score(1.31) == RobustnessBand::moderate, "1.31 misclassified");
    c.expect(classify_score(1.32) == RobustnessBand::low, "1.32 misclassified");
    c.finish();
}

void criterion_6_quantile_oracle() {
    Criterion c{6, "quantile reference agreement and threshold fixture"};
    std::mt19937_64 rng(1006);
    std::uniform_int_distribution<std::size_t> len_of(1, 500);
    std::uniform_real_distribution<double> value(-1000.0, 1000.0);
    std::uniform_real_distribution<double> q_of(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> values(len_of(rng));
        for (auto& v : values)
            v = value(rng);
        const double q = q_of(rng);
        if (std::abs(quantile(values, q) - oracles::reference_quantile(values, q)) > 1e-12) {
            c.expect(false, "disagreement at trial " + std::to_string(trial));
            break;
        }
    }

    std::vector<TrialRecord> records;
    for (double d : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        TrialRecord t;
        t.rrs.mean_dist = d;
        t.rrs.score = d;
        t.label_orig = t.label_pert = SentimentLabel::positive;
        t.generation_violated = false;
        records.push_back(t);
    }
    const auto threshold = derive_threshold(records);
    c.expect(std::abs(threshold.d_th - 0.4) <= 1e-15,
             "d_th fixture -> " + std::to_string(threshold.d_th));
    c.finish();
}

nlohmann::json load_report_json(const fs::path& path) {
    return nlohmann::json::parse(read_text_file(path.string()));
}

void criterion_7_offline_determinism(const fs::path& work, fs::path& report_a_out) {
    Criterion c{7, "offline CLI run: 80 trials, byte-identical after timestamp exclusion"};
    const std::string data = RAGFAIR_DATA_DIR;
    const fs::path out_dir = work / "offline_run";

    const std::string args = "run --offline --stub-dim 64 --corpus " +
                             shell_quote(data + "/mini/corpus.jsonl") + " --seeds " +
                             shell_quote(data + "/mini/seeds.jsonl") + " --lexicon " +
                             shell_quote(data + "/mini/lexicon.toml") + " --out-dir " +
                             shell_quote(out_dir.string());

    c.expect(run_cli(args) == 0, "first run exited non-zero");
    std::error_code ec;
    fs::copy_file(out_dir / "report.json", work / "report_first.json",
                  fs::copy_options::overwrite_existing, ec);
    c.expect(!ec, "missing report.json after first run");
    c.expect(run_cli(args) == 0, "second run exited non-zero");

    if (c.problems.empty()) {
        auto a = load_report_json(work / "report_first.json");
        auto b = load_report_json(out_dir / "report.json");
        c.expect(a.at("trials").size() == 80, "expected 80 trials, got " +
                                                  std::to_string(a.at("trials").size()));
        c.expect(a.at("offline").get<bool>(), "report not flagged offline");
        c.expect(a.at("canonical_hash") == b.at("canonical_hash"), "canonical hashes differ");
        a.erase("timestamp");
        b.erase("timestamp");
        c.expect(canonical_json(a) == canonical_json(b),
                 "reports differ after timestamp exclusion");
        // No endpoint is configured and both clients are in-process stubs, so
        // the run cannot open a socket; any network attempt would have failed
        // the run outright.
        c.expect(a.at("config").at("endpoint_chat").at("base_url") == "",
                 "offline run unexpectedly carries a chat endpoint");
        report_a_out = work / "report_first.json";
    }
    c.expect(c.elapsed_s() < 20.0, "runtime " + std::to_string(c.elapsed_s()) + "s >= 20s");
    c.finish();
}

void criterion_8_engineered_asr(const fs::path& work, fs::path& report_out) {
    Criterion c{8, "engineered stub rules yield generation ASR 25.00% (20/80, all race)"};
    const std::string data = RAGFAIR_DATA_DIR;
    const fs::path out_dir = work / "engineered_run";
    const fs::path cfg_path = work / "engineered.toml";
    {
        std::ofstream cfg(cfg_path);
        cfg << "[paths]\n"
            << "corpus = \"" << data << "/mini/corpus.jsonl\"\n"
            << "seeds = \"" << data << "/mini/seeds.jsonl\"\n"
            << "lexicon = \"" << data << "/mini/lexicon.toml\"\n"
            << "output_dir = \"" << out_dir.string() << "\"\n"
            << "[run]\noffline = true\n"
            << "[offline]\nembed_dim = 64\nembed_salt = 42\n"
            << "[[offline.rule]]\nkeyword = \"black\"\nlabel = \"negative\"\n"
            << "[[offline.rule]]\nkeyword = \"context\"\nlabel = \"positive\"\n";
    }
    c.expect(run_cli("run --config " + shell_quote(cfg_path.string())) == 0,
             "engineered run exited non-zero");
    if (c.problems.empty()) {
        const auto j = load_report_json(out_dir / "report.json");
        const auto& gen = j.at("aggregates").at("generation");
        c.expect(gen.at("violations") == 20, "violations: " + gen.at("violations").dump());
        c.expect(gen.at("total") == 80, "total: " + gen.at("total").dump());
        c.expect(gen.at("percent") == "25.00", "percent: " + gen.at("percent").dump());
        const auto& per =
            j.at("aggregates").at("categories_generation").at("per_category");
        c.expect(per.at("race").at("violations") == 20, "race violations");
        c.expect(per.at("race").at("share_percent") == "100.00", "race share");
        for (const char* other : {"gender", "sexual_orientation", "age"})
            c.expect(per.at(other).at("violations") == 0,
                     std::string(other) + " unexpectedly violated");
        report_out = out_dir / "report.json";
    }
    c.finish();
}

void criterion_9_corpus_cleaning() {
    Criterion c{9, "cleaning fixture: hand-derived survivors, idempotent re-clean"};
    std::vector<std::pair<std::string, bool>> raw;
    for (int i = 0; i < 9; ++i) {
        std::string text;
        for (int w = 0; w < 10; ++w)
            text += (w ? " tok" : "tok") + std::to_string(i);
        raw.emplace_back(text, i % 2 == 0);
    }
    std::string long_text;
    for (int w = 0; w < 1000; ++w)
        long_text += (w ? " spam" : "spam");
    raw.emplace_back(long_text, true);
    raw.emplace_back("hi", false); // below min_chars

    const CleaningConfig cfg;
    const auto pass1 = clean_corpus(raw, cfg);
    c.expect(pass1.size() == 9, "expected 9 survivors, got " + std::to_string(pass1.size()));
    for (std::size_t i = 0; i < pass1.size(); ++i) {
        c.expect(pass1[i].id == i, "ids not sequential");
        c.expect(pass1[i].text.rfind("tok" + std::to_string(i), 0) == 0,
                 "unexpected survivor order");
        c.expect(count_tokens(pass1[i].text, cfg) == 10, "survivor token count changed");
    }

    std::vector<std::pair<std::string, bool>> again;
    for (const auto& d : pass1)
        again.emplace_back(d.text, d.toxic);
    const auto pass2 = clean_corpus(again, cfg);
    c.expect(pass2.size() == pass1.size(), "re-clean changed the corpus size");
    for (std::size_t i = 0; i < pass1.size() && i < pass2.size(); ++i)
        c.expect(pass1[i].text == pass2[i].text && pass1[i].id == pass2[i].id &&
                     pass1[i].toxic == pass2[i].toxic,
                 "re-clean changed entry " + std::to_string(i));
    c.finish();
}

void criterion_10_self_consistency(const std::vector<fs::path>& report_paths) {
    Criterion c{10, "aggregates recomputed from embedded trials match exactly"};
    c.expect(!report_paths.empty(), "no reports generated by earlier criteria");
    for (const auto& path : report_paths) {
        try {
            const RunReport report = parse_report_json(read_text_file(path.string()));
            std::string diagnostic;
            if (!verify_report(report, &diagnostic))
                c.expect(false, path.filename().string() + ": " + diagnostic);
        } catch (const std::exception& e) {
            c.expect(false, path.filename().string() + ": " + e.what());
        }
    }
    c.finish();
}

} // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "ragfair_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion_1_assignment_oracle();
    criterion_2_distance_identity();
    criterion_3_rrs_ranges();
    criterion_4_retrieval_oracle();
    criterion_5_rendering_fixtures();
    criterion_6_quantile_oracle();

    fs::path offline_report, engineered_report;
    criterion_7_offline_determinism(work, offline_report);
    criterion_8_engineered_asr(work, engineered_report);
    criterion_9_corpus_cleaning();

    std::vector<fs::path> reports;
    if (!offline_report.empty())
        reports.push_back(offline_report);
    if (!engineered_report.empty())
        reports.push_back(engineered_report);
    criterion_10_self_consistency(reports);

    if (criteria_failed > 0) {
        std::cout << criteria_failed << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
