#include "condid/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace condid {

using ojson = nlohmann::ordered_json;

namespace {

// First standalone digit whose value lies in [0, max_code]. A digit is
// standalone when its neighbors are not alphanumeric, which skips the 19
// of "COVID-19" but accepts "0." and "(1)".
std::optional<int> first_standalone_digit(std::string_view raw, int max_code) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c < '0' || c > '9') continue;
        const bool left_ok =
            i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        const bool right_ok =
            i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
        if (!left_ok || !right_ok) continue;
        const int v = c - '0';
        if (v <= max_code) return v;
    }
    return std::nullopt;
}

// Keywords tried longest-first; first one present wins.
std::optional<int> keyword_match(const std::string& norm,
                                 std::vector<std::pair<std::string, int>> keywords) {
    std::stable_sort(keywords.begin(), keywords.end(),
                     [](const auto& a, const auto& b) {
                         return a.first.size() > b.first.size();
                     });
    for (const auto& [word, code] : keywords) {
        if (find_word(norm, word) != std::string_view::npos) return code;
    }
    return std::nullopt;
}

double safe_div(double num, double den) { return den > 0 ? num / den : 0.0; }

void fill_averages(MetricsReport& report) {
    double total_support = 0;
    double w_pre = 0, w_rec = 0, w_f1 = 0;
    double m_pre = 0, m_rec = 0, m_f1 = 0;
    std::size_t supported = 0;
    for (const auto& c : report.per_class) {
        if (c.support == 0) continue;
        const double s = static_cast<double>(c.support);
        total_support += s;
        w_pre += s * c.precision;
        w_rec += s * c.recall;
        w_f1 += s * c.f1;
        m_pre += c.precision;
        m_rec += c.recall;
        m_f1 += c.f1;
        ++supported;
    }
    if (total_support > 0) {
        report.pre = w_pre / total_support;
        report.rec = w_rec / total_support;
        report.weighted_f1 = w_f1 / total_support;
        report.macro_pre = m_pre / supported;
        report.macro_rec = m_rec / supported;
        report.macro_f1 = m_f1 / supported;
    } else {
        report.warnings.push_back(
            "no class has positive support; weighted metrics reported as 0");
    }
}

}  // namespace

ParsedLabel parse_response(TaskId task, std::string_view raw) {
    ParsedLabel out;
    out.task = task;
    const std::string norm = normalize_for_match(raw);

    if (task == TaskId::T2) {
        for (ConspiracyCategory c : all_categories()) {
            if (find_word(norm, category_display_name(c)) != std::string_view::npos)
                out.categories.insert(c);
        }
        if (!out.categories.empty()) return out;
        if (find_word(norm, "no conspiracy") != std::string_view::npos)
            return out;  // compliant empty set
        out.compliant = false;  // fallback: empty set
        return out;
    }

    const int max_code = task == TaskId::T4 ? 1 : 2;
    if (auto digit = first_standalone_digit(raw, max_code)) {
        switch (task) {
            case TaskId::T1:
            case TaskId::T3:
                out.intention = static_cast<IntentionLabel>(*digit);
                return out;
            case TaskId::T4:
                out.is_conspiracy = *digit == 1;
                return out;
            case TaskId::T5:
                out.relatedness = static_cast<RelatednessLabel>(*digit);
                return out;
            default:
                break;
        }
    }

    std::optional<int> code;
    switch (task) {
        case TaskId::T1:
        case TaskId::T3:
            code = keyword_match(norm, {{"unrelated", 0}, {"related", 1}, {"conspiracy", 2}});
            if (code) {
                out.intention = static_cast<IntentionLabel>(*code);
                return out;
            }
            out.compliant = false;
            out.intention = IntentionLabel::Unrelated;
            return out;
        case TaskId::T4:
            code = keyword_match(norm, {{"non conspiracy", 0}, {"conspiracy", 1}});
            if (code) {
                out.is_conspiracy = *code == 1;
                return out;
            }
            out.compliant = false;
            out.is_conspiracy = false;
            return out;
        case TaskId::T5:
            code = keyword_match(norm, {{"not related", 0},
                                        {"closely related", 1},
                                        {"broadly related", 2}});
            if (code) {
                out.relatedness = static_cast<RelatednessLabel>(*code);
                return out;
            }
            out.compliant = false;
            out.relatedness = RelatednessLabel::NotRelated;
            return out;
        default:
            break;
    }
    out.compliant = false;
    return out;
}

MetricsReport compute_single_label_metrics(const std::vector<int>& golds,
                                           const std::vector<int>& preds,
                                           const std::vector<std::string>& class_names) {
    if (golds.empty()) throw DataError("metrics: empty input");
    if (golds.size() != preds.size())
        throw DataError("metrics: gold/pred length mismatch (" +
                        std::to_string(golds.size()) + " vs " +
                        std::to_string(preds.size()) + ")");
    const int k = static_cast<int>(class_names.size());
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (golds[i] < 0 || golds[i] >= k || preds[i] < 0 || preds[i] >= k)
            throw DataError("metrics: class index out of range at position " +
                            std::to_string(i));
    }

    MetricsReport report;
    report.n = golds.size();

    std::size_t correct = 0;
    std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
    for (std::size_t i = 0; i < golds.size(); ++i) {
        ++support[golds[i]];
        if (golds[i] == preds[i]) {
            ++correct;
            ++tp[golds[i]];
        } else {
            ++fp[preds[i]];
            ++fn[golds[i]];
        }
    }
    report.acc = static_cast<double>(correct) / static_cast<double>(report.n);

    for (int c = 0; c < k; ++c) {
        ClassMetrics cm;
        cm.name = class_names[c];
        cm.support = support[c];
        cm.precision = safe_div(static_cast<double>(tp[c]),
                                static_cast<double>(tp[c] + fp[c]));
        cm.recall = safe_div(static_cast<double>(tp[c]),
                             static_cast<double>(tp[c] + fn[c]));
        cm.f1 = safe_div(2 * cm.precision * cm.recall, cm.precision + cm.recall);
        report.per_class.push_back(std::move(cm));
    }
    fill_averages(report);
    return report;
}

MetricsReport compute_multilabel_metrics(
    const std::vector<std::set<ConspiracyCategory>>& golds,
    const std::vector<std::set<ConspiracyCategory>>& preds) {
    if (golds.empty()) throw DataError("metrics: empty input");
    if (golds.size() != preds.size())
        throw DataError("metrics: gold/pred length mismatch (" +
                        std::to_string(golds.size()) + " vs " +
                        std::to_string(preds.size()) + ")");

    MetricsReport report;
    report.n = golds.size();

    std::size_t exact = 0;
    for (std::size_t i = 0; i < golds.size(); ++i)
        if (golds[i] == preds[i]) ++exact;
    report.acc = static_cast<double>(exact) / static_cast<double>(report.n);

    for (ConspiracyCategory c : all_categories()) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < golds.size(); ++i) {
            const bool in_gold = golds[i].count(c) > 0;
            const bool in_pred = preds[i].count(c) > 0;
            if (in_gold) ++support;
            if (in_gold && in_pred) ++tp;
            else if (!in_gold && in_pred) ++fp;
            else if (in_gold && !in_pred) ++fn;
        }
        ClassMetrics cm;
        cm.name = std::string(category_display_name(c));
        cm.support = support;
        cm.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
        cm.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
        cm.f1 = safe_div(2 * cm.precision * cm.recall, cm.precision + cm.recall);
        report.per_class.push_back(std::move(cm));
    }
    fill_averages(report);
    return report;
}

TaskScore score_run(TaskId task, const std::vector<InstructionRecord>& dataset,
                    const RunManifest& manifest) {
    if (dataset.size() != manifest.records.size())
        throw DataError("score_run: dataset has " + std::to_string(dataset.size()) +
                        " records but manifest has " +
                        std::to_string(manifest.records.size()) + " responses");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!manifest.records[i].source_id.empty() &&
            manifest.records[i].source_id != dataset[i].source_id)
            throw DataError("score_run: manifest/dataset misalignment at index " +
                            std::to_string(i) + " ('" + manifest.records[i].source_id +
                            "' vs '" + dataset[i].source_id + "')");
        if (dataset[i].task != task)
            throw DataError("score_run: dataset record " + std::to_string(i) +
                            " belongs to task " + std::to_string(task_number(dataset[i].task)));
    }

    std::vector<ParsedLabel> gold_labels(dataset.size()), pred_labels(dataset.size());
    std::size_t non_compliant = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        gold_labels[i] = parse_response(task, dataset[i].gold_output);
        pred_labels[i] = parse_response(task, manifest.records[i].response);
        if (!pred_labels[i].compliant) ++non_compliant;
    }

    TaskScore score;
    if (task == TaskId::T2) {
        std::vector<std::set<ConspiracyCategory>> golds(dataset.size()),
            preds(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            golds[i] = gold_labels[i].categories;
            preds[i] = pred_labels[i].categories;
        }
        score.report = compute_multilabel_metrics(golds, preds);
    } else {
        std::vector<std::string> class_names;
        auto code_of = [task](const ParsedLabel& label) {
            switch (task) {
                case TaskId::T1:
                case TaskId::T3: return static_cast<int>(label.intention);
                case TaskId::T4: return label.is_conspiracy ? 1 : 0;
                default: return static_cast<int>(label.relatedness);
            }
        };
        switch (task) {
            case TaskId::T1:
            case TaskId::T3:
                class_names = {"Unrelated", "Related", "Conspiracy"};
                break;
            case TaskId::T4:
                class_names = {"non-conspiracy", "conspiracy"};
                break;
            default:
                class_names = {"not related", "closely related", "broadly related"};
                break;
        }
        std::vector<int> golds(dataset.size()), preds(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            golds[i] = code_of(gold_labels[i]);
            preds[i] = code_of(pred_labels[i]);
        }
        score.report = compute_single_label_metrics(golds, preds, class_names);

        if (task == TaskId::T3) {
            // Per-category breakdown alongside the pooled report.
            std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> buckets;
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                if (!dataset[i].category) continue;
                auto& [g, p] = buckets[std::string(category_key(*dataset[i].category))];
                g.push_back(golds[i]);
                p.push_back(preds[i]);
            }
            for (auto& [key, gp] : buckets)
                score.per_category[key] =
                    compute_single_label_metrics(gp.first, gp.second, class_names);
        }
    }
    score.report.non_compliant_rate =
        static_cast<double>(non_compliant) / static_cast<double>(dataset.size());
    return score;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    ojson j;
    j["acc"] = m.acc;
    j["pre"] = m.pre;
    j["rec"] = m.rec;
    j["weighted_f1"] = m.weighted_f1;
    j["macro_pre"] = m.macro_pre;
    j["macro_rec"] = m.macro_rec;
    j["macro_f1"] = m.macro_f1;
    j["n"] = m.n;
    j["non_compliant_rate"] = m.non_compliant_rate;
    ojson classes = ojson::array();
    for (const auto& c : m.per_class) {
        ojson cj;
        cj["class"] = c.name;
        cj["support"] = c.support;
        cj["precision"] = c.precision;
        cj["recall"] = c.recall;
        cj["f1"] = c.f1;
        classes.push_back(std::move(cj));
    }
    j["per_class"] = std::move(classes);
    if (!m.warnings.empty()) j["warnings"] = m.warnings;
    return j;
}

std::string render_report_table(const std::vector<ReportRow>& rows) {
    std::set<int> tasks;
    std::size_t label_width = 5;
    for (const auto& row : rows) {
        label_width = std::max(label_width, row.label.size());
        for (const auto& [t, _] : row.per_task) tasks.insert(t);
    }

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(label_width) + 2) << "Model";
    for (int t : tasks) {
        std::ostringstream head;
        head << "Task" << t;
        out << std::left << std::setw(28) << head.str();
    }
    out << '\n';
    out << std::string(label_width + 2, ' ');
    for (std::size_t i = 0; i < tasks.size(); ++i)
        out << std::left << std::setw(7) << "ACC" << std::setw(7) << "PRE"
            << std::setw(7) << "REC" << std::setw(7) << "F1";
    out << '\n';

    for (const auto& row : rows) {
        out << std::left << std::setw(static_cast<int>(label_width) + 2) << row.label;
        for (int t : tasks) {
            auto it = row.per_task.find(t);
            if (it == row.per_task.end()) {
                for (int c = 0; c < 4; ++c) out << std::left << std::setw(7) << "-";
                continue;
            }
            const MetricsReport& m = it->second;
            out << std::fixed << std::setprecision(3);
            out << std::left << std::setw(7) << m.acc << std::setw(7) << m.pre
                << std::setw(7) << m.rec << std::setw(7) << m.weighted_f1;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace condid
