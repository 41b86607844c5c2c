// Parses raw model responses into task labels and computes accuracy,
// precision, recall and weighted F1, with per-class breakdowns.
#pragma once

#include "condid/inference.hpp"
#include "condid/instructions.hpp"

#include <map>
#include <set>
#include <vector>

namespace condid {

// Exactly one variant is meaningful, selected by `task`. `compliant` is
// false when the fallback rule supplied the label.
struct ParsedLabel {
    TaskId task = TaskId::T1;
    bool compliant = true;
    IntentionLabel intention = IntentionLabel::Unrelated;     // T1/T3
    std::set<ConspiracyCategory> categories;                  // T2
    bool is_conspiracy = false;                               // T4
    RelatednessLabel relatedness = RelatednessLabel::NotRelated;  // T5
};

// Total over arbitrary text. Cascade: first standalone digit in the task's
// code range; else longest class-name keyword; T2 collects every category
// name present ("no conspiracy" = empty set); else the fallback label
// (Unrelated / empty set / non-conspiracy / not related) with compliant=false.
ParsedLabel parse_response(TaskId task, std::string_view raw);

struct ClassMetrics {
    std::string name;
    std::size_t support = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct MetricsReport {
    double acc = 0;
    double pre = 0;          // support-weighted precision
    double rec = 0;          // support-weighted recall
    double weighted_f1 = 0;
    double macro_pre = 0;    // secondary: unweighted over classes with support
    double macro_rec = 0;
    double macro_f1 = 0;
    std::vector<ClassMetrics> per_class;
    std::size_t n = 0;
    double non_compliant_rate = 0;  // filled by score_run
    WarningList warnings;
};

// golds/preds are indices into `class_names`. Zero-denominator precision/
// recall/F1 are 0; weighted averages run over classes with support > 0.
MetricsReport compute_single_label_metrics(const std::vector<int>& golds,
                                           const std::vector<int>& preds,
                                           const std::vector<std::string>& class_names);

// Subset accuracy plus per-label binary metrics over the 12 categories,
// support-weighted over labels with positive support.
MetricsReport compute_multilabel_metrics(
    const std::vector<std::set<ConspiracyCategory>>& golds,
    const std::vector<std::set<ConspiracyCategory>>& preds);

struct TaskScore {
    MetricsReport report;
    // T3 only: per-category breakdown next to the pooled report.
    std::map<std::string, MetricsReport> per_category;
};

// Parses responses and golds, dispatches to the metric routine for the
// task (T3 pools all category-record pairs into one computation).
TaskScore score_run(TaskId task, const std::vector<InstructionRecord>& dataset,
                    const RunManifest& manifest);

nlohmann::ordered_json metrics_to_json(const MetricsReport& m);

// One row per run in a fixed-width table, tasks across, ACC PRE REC F1 per
// task (the layout the result tables use).
struct ReportRow {
    std::string label;
    std::map<int, MetricsReport> per_task;  // task number -> metrics
};
std::string render_report_table(const std::vector<ReportRow>& rows);

}  // namespace condid
