#include "ragfair/report.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "ragfair/errors.hpp"
#include "ragfair/sha256.hpp"

namespace ragfair {
namespace {

std::string fmt_double(double v) {
    if (!std::isfinite(v))
        throw ArgumentError("non-finite value in report");
    std::array<char, 64> buf;
    auto [end, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), end);
}

std::string fmt_fixed(double v, int decimals) {
    std::array<char, 64> buf;
    auto [end, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    return std::string(buf.data(), end);
}

void write_canonical(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            out += "null";
            break;
        case nlohmann::json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case nlohmann::json::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            break;
        case nlohmann::json::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            break;
        case nlohmann::json::value_t::number_float:
            out += fmt_double(j.get<double>());
            break;
        case nlohmann::json::value_t::string:
            out += j.dump(); // escaped string literal
            break;
        case nlohmann::json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : j) {
                if (!first)
                    out += ',';
                first = false;
                write_canonical(item, out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) { // object_t is a sorted map
                if (!first)
                    out += ',';
                first = false;
                out += nlohmann::json(key).dump();
                out += ':';
                write_canonical(value, out);
            }
            out += '}';
            break;
        }
        default:
            throw ArgumentError("unsupported JSON value in report");
    }
}

nlohmann::json retrieval_to_json(const RetrievalResult& r) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : r.entries)
        arr.push_back({{"doc_id", e.doc_id}, {"score", e.score}, {"toxic", e.toxic}});
    return arr;
}

RetrievalResult retrieval_from_json(const nlohmann::json& j) {
    RetrievalResult r;
    for (const auto& item : j) {
        RetrievedDoc d;
        d.doc_id = item.at("doc_id").get<std::uint64_t>();
        d.score = item.at("score").get<double>();
        d.toxic = item.at("toxic").get<bool>();
        r.entries.push_back(d);
    }
    return r;
}

nlohmann::json quartiles_to_json(const QuartileSummary& s) {
    return {{"q1", s.q1}, {"q2", s.q2}, {"q3", s.q3}, {"max", s.max}, {"n", s.n}};
}

QuartileSummary quartiles_from_json(const nlohmann::json& j) {
    QuartileSummary s;
    s.q1 = j.at("q1").get<double>();
    s.q2 = j.at("q2").get<double>();
    s.q3 = j.at("q3").get<double>();
    s.max = j.at("max").get<double>();
    s.n = j.at("n").get<std::uint64_t>();
    return s;
}

nlohmann::json ratio_to_json(const Ratio& r) {
    return {{"violations", r.num}, {"total", r.den}, {"percent", r.percent()}};
}

Ratio ratio_from_json(const nlohmann::json& j) {
    return make_ratio(j.at("violations").get<std::uint64_t>(),
                      j.at("total").get<std::uint64_t>());
}

nlohmann::json breakdown_to_json(const CategoryBreakdown& b) {
    nlohmann::json per;
    for (const auto& [cat, share] : b.per_category)
        per[to_string(cat)] = {{"violations", share.violations},
                               {"share_percent", share.share.percent()}};
    return {{"per_category", per},
            {"total_violations", b.total_violations},
            {"zero_total", b.zero_total}};
}

CategoryBreakdown breakdown_from_json(const nlohmann::json& j) {
    CategoryBreakdown b;
    b.total_violations = j.at("total_violations").get<std::uint64_t>();
    b.zero_total = j.at("zero_total").get<bool>();
    for (const auto& [name, item] : j.at("per_category").items()) {
        CategoryShare share;
        share.violations = item.at("violations").get<std::uint64_t>();
        share.share = b.zero_total ? Ratio{0, 1} : make_ratio(share.violations, b.total_violations);
        b.per_category[category_from_string(name)] = share;
    }
    return b;
}

nlohmann::json threshold_to_json(const ThresholdReport& t) {
    nlohmann::json j{{"d_th", t.d_th},
                     {"n_flip", t.n_flip},
                     {"n_noflip", t.n_noflip},
                     {"quartiles_noflip", quartiles_to_json(t.quartiles_noflip)}};
    j["quartiles_flip"] =
        t.quartiles_flip ? quartiles_to_json(*t.quartiles_flip) : nlohmann::json();
    return j;
}

ThresholdReport threshold_from_json(const nlohmann::json& j) {
    ThresholdReport t;
    t.d_th = j.at("d_th").get<double>();
    t.n_flip = j.at("n_flip").get<std::uint64_t>();
    t.n_noflip = j.at("n_noflip").get<std::uint64_t>();
    t.quartiles_noflip = quartiles_from_json(j.at("quartiles_noflip"));
    if (!j.at("quartiles_flip").is_null())
        t.quartiles_flip = quartiles_from_json(j.at("quartiles_flip"));
    return t;
}

nlohmann::json aggregates_to_json(const AggregateBlock& a) {
    static const char* band_names[] = {"perfectly_stable", "high", "moderate", "low"};
    nlohmann::json hist;
    for (std::size_t i = 0; i < 4; ++i)
        hist[band_names[i]] = a.band_histogram[i];
    nlohmann::json j{{"trials_total", a.trials_total},
                     {"trials_included", a.trials_included},
                     {"trials_excluded", a.trials_excluded},
                     {"unparsed_trials", a.unparsed_trials},
                     {"retrieval", ratio_to_json(a.retrieval_asr)},
                     {"score_quartiles", quartiles_to_json(a.score_quartiles)},
                     {"band_histogram", hist},
                     {"threshold_note", a.threshold_note},
                     {"categories_retrieval", breakdown_to_json(a.retrieval_categories)},
                     {"categories_generation", breakdown_to_json(a.generation_categories)}};
    j["generation"] = a.generation_asr ? ratio_to_json(*a.generation_asr) : nlohmann::json();
    j["threshold"] = a.threshold ? threshold_to_json(*a.threshold) : nlohmann::json();
    return j;
}

AggregateBlock aggregates_from_json(const nlohmann::json& j) {
    AggregateBlock a;
    a.trials_total = j.at("trials_total").get<std::uint64_t>();
    a.trials_included = j.at("trials_included").get<std::uint64_t>();
    a.trials_excluded = j.at("trials_excluded").get<std::uint64_t>();
    a.unparsed_trials = j.at("unparsed_trials").get<std::uint64_t>();
    a.retrieval_asr = ratio_from_json(j.at("retrieval"));
    if (!j.at("generation").is_null())
        a.generation_asr = ratio_from_json(j.at("generation"));
    a.score_quartiles = quartiles_from_json(j.at("score_quartiles"));
    static const char* band_names[] = {"perfectly_stable", "high", "moderate", "low"};
    for (std::size_t i = 0; i < 4; ++i)
        a.band_histogram[i] = j.at("band_histogram").at(band_names[i]).get<std::uint64_t>();
    if (!j.at("threshold").is_null())
        a.threshold = threshold_from_json(j.at("threshold"));
    a.threshold_note = j.at("threshold_note").get<std::string>();
    a.retrieval_categories = breakdown_from_json(j.at("categories_retrieval"));
    a.generation_categories = breakdown_from_json(j.at("categories_generation"));
    return a;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_doc_ids(const RetrievalResult& r) {
    std::string out;
    for (const auto& e : r.entries) {
        if (!out.empty())
            out += ';';
        out += std::to_string(e.doc_id);
    }
    return out;
}

} // namespace

AggregateBlock compute_aggregates(const std::vector<TrialRecord>& trials,
                                  const RrsThresholds& thresholds) {
    AggregateBlock a;
    a.trials_total = trials.size();

    std::vector<double> scores;
    std::uint64_t retrieval_violations = 0;
    std::uint64_t generation_violations = 0;
    std::uint64_t generation_total = 0;
    for (const auto& t : trials) {
        if (t.status != TrialStatus::ok) {
            ++a.trials_excluded;
            continue;
        }
        ++a.trials_included;
        scores.push_back(t.rrs.score);
        ++a.band_histogram[static_cast<std::size_t>(classify_score(t.rrs.score, thresholds))];
        retrieval_violations += t.retrieval_violated ? 1 : 0;
        if (t.has_unparsed_label()) {
            ++a.unparsed_trials;
        } else {
            ++generation_total;
            generation_violations += t.generation_violated ? 1 : 0;
        }
    }
    if (a.trials_included == 0)
        throw InsufficientDataError("compute_aggregates: no included trials");

    a.retrieval_asr = asr(retrieval_violations, a.trials_included);
    if (generation_total > 0)
        a.generation_asr = asr(generation_violations, generation_total);
    a.score_quartiles = QuartileSummary::from_values(scores);
    try {
        a.threshold = derive_threshold(trials);
    } catch (const InsufficientDataError& e) {
        a.threshold_note = e.what();
    }
    a.retrieval_categories = category_breakdown(trials, VerdictField::retrieval);
    a.generation_categories = category_breakdown(trials, VerdictField::generation);
    return a;
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json")
        return ReportFormat::json;
    if (name == "csv")
        return ReportFormat::csv;
    if (name == "markdown" || name == "md")
        return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + name + "'");
}

std::string canonical_json(const nlohmann::json& j) {
    std::string out;
    write_canonical(j, out);
    return out;
}

nlohmann::json trial_to_json(const TrialRecord& t) {
    return {{"pair_id", t.pair_id},
            {"seed_id", t.seed_id},
            {"category", to_string(t.category)},
            {"term", t.term},
            {"status", t.status == TrialStatus::ok ? "ok" : "failed"},
            {"error", t.error},
            {"retrieval_orig", retrieval_to_json(t.retrieval_orig)},
            {"retrieval_pert", retrieval_to_json(t.retrieval_pert)},
            {"rrs",
             {{"mean_dist", t.rrs.mean_dist},
              {"hamming", t.rrs.hamming},
              {"score", t.rrs.score},
              {"metric", to_string(t.rrs.metric)},
              {"k", t.rrs.k}}},
            {"label_orig", to_string(t.label_orig)},
            {"label_pert", to_string(t.label_pert)},
            {"retrieval_violated", t.retrieval_violated},
            {"generation_violated", t.generation_violated},
            {"response_orig", t.response_orig},
            {"response_pert", t.response_pert}};
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord t;
    t.pair_id = j.at("pair_id").get<std::uint64_t>();
    t.seed_id = j.at("seed_id").get<std::uint64_t>();
    t.category = category_from_string(j.at("category").get<std::string>());
    t.term = j.at("term").get<std::string>();
    t.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::ok : TrialStatus::failed;
    t.error = j.at("error").get<std::string>();
    t.retrieval_orig = retrieval_from_json(j.at("retrieval_orig"));
    t.retrieval_pert = retrieval_from_json(j.at("retrieval_pert"));
    const auto& rrs = j.at("rrs");
    t.rrs.mean_dist = rrs.at("mean_dist").get<double>();
    t.rrs.hamming = rrs.at("hamming").get<double>();
    t.rrs.score = rrs.at("score").get<double>();
    t.rrs.metric = metric_from_string(rrs.at("metric").get<std::string>());
    t.rrs.k = rrs.at("k").get<std::size_t>();
    t.label_orig = sentiment_from_string(j.at("label_orig").get<std::string>());
    t.label_pert = sentiment_from_string(j.at("label_pert").get<std::string>());
    t.retrieval_violated = j.at("retrieval_violated").get<bool>();
    t.generation_violated = j.at("generation_violated").get<bool>();
    t.response_orig = j.at("response_orig").get<std::string>();
    t.response_pert = j.at("response_pert").get<std::string>();
    return t;
}

nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials)
        trials.push_back(trial_to_json(t));
    nlohmann::json j{{"timestamp", r.timestamp},
                     {"config", r.config_echo},
                     {"lexicon_hash", r.lexicon_hash},
                     {"template", r.template_text},
                     {"system_prompt", r.system_prompt},
                     {"quantile_convention", r.quantile_convention},
                     {"threshold_rule", r.threshold_rule},
                     {"offline", r.offline},
                     {"run_failed", r.run_failed},
                     {"rrs_thresholds", {{"t1", r.rrs_thresholds.t1}, {"t2", r.rrs_thresholds.t2}}},
                     {"trials", trials},
                     {"canonical_hash", r.canonical_hash}};
    j["aggregates"] = r.aggregates ? aggregates_to_json(*r.aggregates) : nlohmann::json();
    return j;
}

RunReport parse_report_json(const std::string& bytes) {
    const auto j = nlohmann::json::parse(bytes, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("report: invalid JSON");
    try {
        RunReport r;
        r.timestamp = j.at("timestamp").get<std::string>();
        r.config_echo = j.at("config");
        r.lexicon_hash = j.at("lexicon_hash").get<std::string>();
        r.template_text = j.at("template").get<std::string>();
        r.system_prompt = j.at("system_prompt").get<std::string>();
        r.quantile_convention = j.at("quantile_convention").get<std::string>();
        r.threshold_rule = j.at("threshold_rule").get<std::string>();
        r.offline = j.at("offline").get<bool>();
        r.run_failed = j.at("run_failed").get<bool>();
        r.rrs_thresholds.t1 = j.at("rrs_thresholds").at("t1").get<double>();
        r.rrs_thresholds.t2 = j.at("rrs_thresholds").at("t2").get<double>();
        for (const auto& t : j.at("trials"))
            r.trials.push_back(trial_from_json(t));
        if (!j.at("aggregates").is_null())
            r.aggregates = aggregates_from_json(j.at("aggregates"));
        r.canonical_hash = j.at("canonical_hash").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }
}

void seal_report(RunReport& report) {
    nlohmann::json j = report_to_json(report);
    j.erase("timestamp");
    j.erase("canonical_hash");
    report.canonical_hash = sha256_hex(canonical_json(j));
}

namespace {

std::string emit_csv(const RunReport& report) {
    std::string out =
        "pair_id,seed_id,category,term,status,error,mean_dist,hamming,score,band,metric,k,"
        "label_orig,label_pert,retrieval_violated,generation_violated,toxic_count_orig,"
        "toxic_count_pert,docs_orig,docs_pert,response_orig,response_pert\n";
    for (const auto& t : report.trials) {
        std::vector<std::string> fields;
        fields.push_back(std::to_string(t.pair_id));
        fields.push_back(std::to_string(t.seed_id));
        fields.push_back(to_string(t.category));
        fields.push_back(t.term);
        fields.push_back(t.status == TrialStatus::ok ? "ok" : "failed");
        fields.push_back(t.error);
        if (t.status == TrialStatus::ok) {
            fields.push_back(fmt_double(t.rrs.mean_dist));
            fields.push_back(fmt_double(t.rrs.hamming));
            fields.push_back(fmt_double(t.rrs.score));
            fields.push_back(to_string(classify_score(t.rrs.score, report.rrs_thresholds)));
            fields.push_back(to_string(t.rrs.metric));
            fields.push_back(std::to_string(t.rrs.k));
            fields.push_back(to_string(t.label_orig));
            fields.push_back(to_string(t.label_pert));
            fields.push_back(t.retrieval_violated ? "true" : "false");
            fields.push_back(t.generation_violated ? "true" : "false");
            fields.push_back(std::to_string(t.retrieval_orig.toxic_count()));
            fields.push_back(std::to_string(t.retrieval_pert.toxic_count()));
            fields.push_back(join_doc_ids(t.retrieval_orig));
            fields.push_back(join_doc_ids(t.retrieval_pert));
            fields.push_back(t.response_orig);
            fields.push_back(t.response_pert);
        } else {
            for (int i = 0; i < 16; ++i)
                fields.emplace_back();
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out += ',';
            out += csv_escape(fields[i]);
        }
        out += '\n';
    }
    return out;
}

void append_quartile_row(std::string& out, const std::string& label,
                         const QuartileSummary& q) {
    out += "| " + label + " | " + fmt_fixed(q.q1, 4) + " | " + fmt_fixed(q.q2, 4) + " | " +
           fmt_fixed(q.q3, 4) + " | " + fmt_fixed(q.max, 4) + " | " + std::to_string(q.n) +
           " |\n";
}

void append_breakdown(std::string& out, const std::string& title, const CategoryBreakdown& b) {
    out += "### " + title + "\n\n";
    if (b.zero_total)
        out += "No violations recorded (shares shown as 0.00%).\n\n";
    out += "| category | violations | share |\n|---|---|---|\n";
    for (const auto& [cat, share] : b.per_category)
        out += "| " + to_string(cat) + " | " + std::to_string(share.violations) + " | " +
               share.share.percent() + "% |\n";
    out += "\n";
}

std::string emit_markdown(const RunReport& report) {
    std::string out = "# ragfair run report\n\n";
    out += "- timestamp: " + report.timestamp + "\n";
    out += "- offline: " + std::string(report.offline ? "true" : "false") + "\n";
    out += "- run failed: " + std::string(report.run_failed ? "true" : "false") + "\n";
    out += "- lexicon hash: `" + report.lexicon_hash + "`\n";
    out += "- template: `" + report.template_text + "`\n";
    out += "- system prompt: `" + report.system_prompt + "`\n";
    out += "- quantile convention: " + report.quantile_convention + "\n";
    out += "- threshold rule: " + report.threshold_rule + "\n";
    out += "- canonical hash: `" + report.canonical_hash + "`\n\n";

    if (!report.aggregates) {
        out += "Run produced no aggregates.\n";
        return out;
    }
    const AggregateBlock& a = *report.aggregates;

    out += "## Attack success rates\n\n";
    out += "retrieval ASR: " + a.retrieval_asr.percent() + "%\n";
    if (a.generation_asr)
        out += "generation ASR: " + a.generation_asr->percent() + "%\n";
    else
        out += "generation ASR: unavailable (all trials unparsed)\n";
    out += "\n| verdict | violations | total | ASR |\n|---|---|---|---|\n";
    out += "| retrieval | " + std::to_string(a.retrieval_asr.num) + " | " +
           std::to_string(a.retrieval_asr.den) + " | " + a.retrieval_asr.percent() + "% |\n";
    if (a.generation_asr)
        out += "| generation | " + std::to_string(a.generation_asr->num) + " | " +
               std::to_string(a.generation_asr->den) + " | " + a.generation_asr->percent() +
               "% |\n";
    out += "\n- trials: " + std::to_string(a.trials_total) + " total, " +
           std::to_string(a.trials_included) + " included, " +
           std::to_string(a.trials_excluded) + " excluded, " +
           std::to_string(a.unparsed_trials) + " unparsed\n\n";

    out += "## Robustness score quartiles\n\n";
    out += "| group | Q1 | Q2 | Q3 | max | n |\n|---|---|---|---|---|---|\n";
    append_quartile_row(out, "all scores", a.score_quartiles);
    out += "\n";

    static const char* band_names[] = {"perfectly_stable", "high", "moderate", "low"};
    out += "## Robustness bands\n\n| band | trials |\n|---|---|\n";
    for (std::size_t i = 0; i < 4; ++i)
        out += "| " + std::string(band_names[i]) + " | " + std::to_string(a.band_histogram[i]) +
               " |\n";
    out += "\n";

    out += "## Decision threshold\n\n";
    if (a.threshold) {
        out += "- d_th (Q3 of no-flip MeanDist): " + fmt_fixed(a.threshold->d_th, 4) + "\n";
        out += "- groups: " + std::to_string(a.threshold->n_noflip) + " no-flip, " +
               std::to_string(a.threshold->n_flip) + " flip\n\n";
        out += "| group | Q1 | Q2 | Q3 | max | n |\n|---|---|---|---|---|---|\n";
        append_quartile_row(out, "no-flip MeanDist", a.threshold->quartiles_noflip);
        if (a.threshold->quartiles_flip)
            append_quartile_row(out, "flip MeanDist", *a.threshold->quartiles_flip);
        out += "\n";
    } else {
        out += "- unavailable: " + a.threshold_note + "\n\n";
    }

    out += "## Violations by category\n\n";
    append_breakdown(out, "retrieval", a.retrieval_categories);
    append_breakdown(out, "generation", a.generation_categories);
    return out;
}

} // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::json:
            return canonical_json(report_to_json(report)) + "\n";
        case ReportFormat::csv:
            return emit_csv(report);
        case ReportFormat::markdown:
            return emit_markdown(report);
    }
    throw ArgumentError("unknown report format");
}

bool verify_report(const RunReport& report, std::string* diagnostic) {
    if (!report.aggregates) {
        if (diagnostic)
            *diagnostic = "report carries no aggregates";
        return false;
    }
    AggregateBlock recomputed;
    try {
        recomputed = compute_aggregates(report.trials, report.rrs_thresholds);
    } catch (const Error& e) {
        if (diagnostic)
            *diagnostic = std::string("recompute failed: ") + e.what();
        return false;
    }
    const std::string stored = canonical_json(aggregates_to_json(*report.aggregates));
    const std::string fresh = canonical_json(aggregates_to_json(recomputed));
    if (stored != fresh) {
        if (diagnostic)
            *diagnostic = "aggregate mismatch:\n  stored:     " + stored +
                          "\n  recomputed: " + fresh;
        return false;
    }
    if (diagnostic)
        diagnostic->clear();
    return true;
}

} // namespace ragfair
