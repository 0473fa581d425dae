#include "tdf/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "tdf/errors.hpp"

namespace tdf {

ScoredConfusion confusion(const std::vector<ItemOutcome>& outcomes,
                          const std::vector<KnowledgeItem>& items) {
    std::unordered_map<std::string, const KnowledgeItem*> by_id;
    by_id.reserve(items.size());
    for (const auto& item : items) by_id.emplace(item.id, &item);

    ScoredConfusion result;
    for (const auto& outcome : outcomes) {
        if (outcome.verdict == Verdict::deferred_final) {
            ++result.deferred;
            continue;
        }
        auto it = by_id.find(outcome.id);
        if (it == by_id.end()) {
            throw TdfError(ErrorKind::consistency,
                           "outcome references unknown item id '" + outcome.id + "'");
        }
        if (!it->second->gold_flag) {
            throw TdfError(ErrorKind::validation,
                           "scored item '" + outcome.id + "' has no gold flag");
        }
        const int flag = *it->second->gold_flag;
        const bool accepted = outcome.verdict == Verdict::accepted;
        if (accepted && flag == 1) ++result.cm.tp;
        else if (accepted && flag == 0) ++result.cm.fp;
        else if (!accepted && flag == 1) ++result.cm.fn;
        else ++result.cm.tn;
    }
    return result;
}

MetricsResult metrics(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw TdfError(ErrorKind::size, "empty confusion matrix");
    }
    MetricsResult m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);

    if (cm.tp + cm.fp == 0) {
        m.precision_degenerate = true;
    } else {
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    }
    if (cm.tp + cm.fn == 0) {
        m.recall_degenerate = true;
    } else {
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    }
    if (m.precision_degenerate || m.recall_degenerate || m.precision + m.recall == 0.0) {
        m.f1_degenerate = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

namespace {

int mode_rank(const std::string& mode) {
    if (mode == "basic") return 0;
    if (mode == "fake") return 1;
    return 2;  // self_nli
}

}  // namespace

std::vector<ComparisonRow> compare_modes(const std::vector<const FilterReport*>& reports,
                                         const std::vector<KnowledgeItem>& items) {
    if (reports.empty()) {
        throw TdfError(ErrorKind::size, "no reports to compare");
    }

    std::set<std::string> reference_ids;
    for (const auto& outcome : reports.front()->outcomes) reference_ids.insert(outcome.id);
    for (const FilterReport* report : reports) {
        std::set<std::string> ids;
        for (const auto& outcome : report->outcomes) ids.insert(outcome.id);
        if (ids != reference_ids) {
            throw TdfError(ErrorKind::consistency, "reports cover different item sets");
        }
    }

    std::vector<ComparisonRow> rows;
    rows.reserve(reports.size());
    for (const FilterReport* report : reports) {
        const ScoredConfusion scored = confusion(report->outcomes, items);
        ComparisonRow row;
        row.mode = to_string(report->config.mode);
        row.metrics = metrics(scored.cm);
        row.deferred = scored.deferred;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        return mode_rank(a.mode) < mode_rank(b.mode);
    });

    const auto basic = std::find_if(rows.begin(), rows.end(),
                                    [](const ComparisonRow& r) { return r.mode == "basic"; });
    if (basic != rows.end()) {
        for (auto& row : rows) {
            if (&row == &*basic) continue;
            row.delta_accuracy = row.metrics.accuracy - basic->metrics.accuracy;
            row.delta_precision = row.metrics.precision - basic->metrics.precision;
            row.delta_recall = row.metrics.recall - basic->metrics.recall;
            row.delta_f1 = row.metrics.f1 - basic->metrics.f1;
        }
    }
    return rows;
}

std::string render_comparison_text(const std::vector<ComparisonRow>& rows,
                                   const std::string& dataset_label,
                                   const std::string& model_label) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %-10s %-11s %9s %10s %8s %8s %9s %10s\n",
                  "Dataset", "Model", "Methodology", "Accuracy", "Precision", "Recall", "F1",
                  "Deferred", "dAccuracy");
    out += line;
    for (const auto& row : rows) {
        if (row.delta_accuracy) {
            std::snprintf(line, sizeof(line),
                          "%-12s %-10s %-11s %9.4f %10.4f %8.4f %8.4f %9lld %+10.4f\n",
                          dataset_label.c_str(), model_label.c_str(), row.mode.c_str(),
                          row.metrics.accuracy, row.metrics.precision, row.metrics.recall,
                          row.metrics.f1, static_cast<long long>(row.deferred),
                          *row.delta_accuracy);
        } else {
            std::snprintf(line, sizeof(line),
                          "%-12s %-10s %-11s %9.4f %10.4f %8.4f %8.4f %9lld %10s\n",
                          dataset_label.c_str(), model_label.c_str(), row.mode.c_str(),
                          row.metrics.accuracy, row.metrics.precision, row.metrics.recall,
                          row.metrics.f1, static_cast<long long>(row.deferred), "-");
        }
        out += line;
    }
    return out;
}

}  // namespace tdf
