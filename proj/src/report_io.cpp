#include "tdf/report_io.hpp"

#include <fstream>

#include "tdf/errors.hpp"

namespace tdf {

namespace {

nlohmann::ordered_json config_json(const FilterConfig& config) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(config.mode);
    j["threshold"] = config.threshold;
    j["max_iterations"] = config.max_iterations;
    j["parallelism"] = config.parallelism;
    j["seed"] = config.seed;
    j["index"]["mode"] = config.index.mode == IndexMode::flat ? "flat" : "ivf";
    j["index"]["nlist"] = config.index.ivf.nlist;
    j["index"]["nprobe"] = config.index.ivf.nprobe;
    j["tree"]["max_depth"] = config.tree.max_depth;
    j["tree"]["min_samples_leaf"] = config.tree.min_samples_leaf;
    return j;
}

FilterConfig config_from_json(const nlohmann::json& j) {
    FilterConfig config;
    config.mode = filter_mode_from_string(j.at("mode").get<std::string>());
    config.threshold = j.at("threshold").get<double>();
    config.max_iterations = j.at("max_iterations").get<int>();
    config.parallelism = j.at("parallelism").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.index.mode =
        j.at("index").at("mode").get<std::string>() == "ivf" ? IndexMode::ivf : IndexMode::flat;
    config.index.ivf.nlist = j.at("index").at("nlist").get<std::size_t>();
    config.index.ivf.nprobe = j.at("index").at("nprobe").get<std::size_t>();
    config.tree.max_depth = j.at("tree").at("max_depth").get<int>();
    config.tree.min_samples_leaf = j.at("tree").at("min_samples_leaf").get<int>();
    return config;
}

Verdict verdict_from_string(const std::string& name) {
    if (name == "accepted") return Verdict::accepted;
    if (name == "rejected") return Verdict::rejected;
    if (name == "deferred_final") return Verdict::deferred_final;
    throw TdfError(ErrorKind::parse, "unknown verdict '" + name + "'");
}

}  // namespace

nlohmann::ordered_json manifest_json(const FilterReport& report) {
    nlohmann::ordered_json doc;
    doc["config"] = config_json(report.config);

    doc["iterations"] = nlohmann::ordered_json::array();
    for (const auto& tally : report.iterations) {
        nlohmann::ordered_json t;
        t["iteration"] = tally.iteration;
        t["processed"] = tally.processed;
        t["matched"] = tally.matched;
        t["accepted"] = tally.accepted;
        t["rejected"] = tally.rejected;
        t["deferred"] = tally.deferred;
        doc["iterations"].push_back(std::move(t));
    }

    doc["kb_size_by_iteration"] = report.kb_size_by_iteration;

    doc["outcomes"] = nlohmann::ordered_json::array();
    for (const auto& outcome : report.outcomes) {
        nlohmann::ordered_json o;
        o["id"] = outcome.id;
        o["verdict"] = to_string(outcome.verdict);
        o["iteration"] = outcome.iteration;
        if (outcome.eval) {
            o["y1"] = outcome.eval->y1;
            o["c1"] = outcome.eval->c1;
            o["y2"] = outcome.eval->y2;
            o["c2"] = outcome.eval->c2;
        } else {
            o["y1"] = nullptr;
            o["c1"] = nullptr;
            o["y2"] = nullptr;
            o["c2"] = nullptr;
        }
        o["matched_id"] = outcome.matched_id ? nlohmann::ordered_json(*outcome.matched_id)
                                             : nlohmann::ordered_json(nullptr);
        o["similarity"] = outcome.similarity ? nlohmann::ordered_json(*outcome.similarity)
                                             : nlohmann::ordered_json(nullptr);
        doc["outcomes"].push_back(std::move(o));
    }
    return doc;
}

std::string manifest_text(const FilterReport& report) {
    return manifest_json(report).dump(2) + "\n";
}

FilterReport manifest_from_json(const nlohmann::json& doc) {
    FilterReport report;
    report.config = config_from_json(doc.at("config"));
    for (const auto& t : doc.at("iterations")) {
        IterationTally tally;
        tally.iteration = t.at("iteration").get<int>();
        tally.processed = t.at("processed").get<std::int64_t>();
        tally.matched = t.at("matched").get<std::int64_t>();
        tally.accepted = t.at("accepted").get<std::int64_t>();
        tally.rejected = t.at("rejected").get<std::int64_t>();
        tally.deferred = t.at("deferred").get<std::int64_t>();
        report.iterations.push_back(tally);
    }
    report.kb_size_by_iteration = doc.at("kb_size_by_iteration").get<std::vector<std::size_t>>();
    for (const auto& o : doc.at("outcomes")) {
        ItemOutcome outcome;
        outcome.id = o.at("id").get<std::string>();
        outcome.verdict = verdict_from_string(o.at("verdict").get<std::string>());
        outcome.iteration = o.at("iteration").get<int>();
        if (!o.at("y1").is_null()) {
            outcome.eval = EvalRecord{o.at("y1").get<int>(), o.at("c1").get<double>(),
                                      o.at("y2").get<int>(), o.at("c2").get<double>()};
        }
        if (!o.at("matched_id").is_null()) outcome.matched_id = o.at("matched_id").get<std::string>();
        if (!o.at("similarity").is_null()) outcome.similarity = o.at("similarity").get<double>();
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

FilterReport load_manifest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw TdfError(ErrorKind::config, "cannot open manifest '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::parse, "bad manifest '" + path + "': " + e.what());
    }
    return manifest_from_json(doc);
}

nlohmann::ordered_json metrics_json(const MetricsResult& m, std::int64_t deferred) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["precision_degenerate"] = m.precision_degenerate;
    j["recall_degenerate"] = m.recall_degenerate;
    j["f1_degenerate"] = m.f1_degenerate;
    j["deferred"] = deferred;
    return j;
}

nlohmann::ordered_json comparison_json(const std::vector<ComparisonRow>& rows,
                                       const std::string& dataset_label,
                                       const std::string& model_label) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json r;
        r["dataset"] = dataset_label;
        r["model"] = model_label;
        r["methodology"] = row.mode;
        r["accuracy"] = row.metrics.accuracy;
        r["precision"] = row.metrics.precision;
        r["recall"] = row.metrics.recall;
        r["f1"] = row.metrics.f1;
        r["deferred"] = row.deferred;
        r["delta_accuracy"] = row.delta_accuracy ? nlohmann::ordered_json(*row.delta_accuracy)
                                                 : nlohmann::ordered_json(nullptr);
        r["delta_precision"] = row.delta_precision ? nlohmann::ordered_json(*row.delta_precision)
                                                   : nlohmann::ordered_json(nullptr);
        r["delta_recall"] = row.delta_recall ? nlohmann::ordered_json(*row.delta_recall)
                                             : nlohmann::ordered_json(nullptr);
        r["delta_f1"] = row.delta_f1 ? nlohmann::ordered_json(*row.delta_f1)
                                     : nlohmann::ordered_json(nullptr);
        doc.push_back(std::move(r));
    }
    return doc;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw TdfError(ErrorKind::config, "cannot write file '" + path + "'");
    }
    out << content;
}

}  // namespace tdf
