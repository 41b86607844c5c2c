// Builds the five-task instruction dataset from gold corpus records, with
// optional affective augmentation, and serializes it as JSON lines.
#pragma once

#include "condid/affect.hpp"
#include "condid/corpus.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace condid {

enum class TaskId : int { T1 = 1, T2 = 2, T3 = 3, T4 = 4, T5 = 5 };

inline constexpr std::array<TaskId, 5> kAllTasks = {TaskId::T1, TaskId::T2, TaskId::T3,
                                                    TaskId::T4, TaskId::T5};

int task_number(TaskId t);
std::optional<TaskId> task_from_number(int n);
// Tasks 1-3 consume COCO records, tasks 4-5 consume LOCO records.
bool task_uses_coco(TaskId t);

struct InstructionRecord {
    TaskId task = TaskId::T1;
    std::string source_id;
    std::optional<ConspiracyCategory> category;  // present exactly for T3
    std::string task_prompt;
    std::string input_text;
    std::string query_cue;
    std::string gold_output;
    std::optional<std::string> affective_block;

    bool operator==(const InstructionRecord&) const = default;
};

// Task prompt texts. T3 is instantiated per category, T5 per topic.
std::string task_prompt_t1();
std::string task_prompt_t2();
std::string task_prompt_t3(ConspiracyCategory category);
std::string task_prompt_t4();
std::string task_prompt_t5(std::string_view topic_display);

// "sandy-hook" -> "the Sandy Hook school shooting"; unknown topics pass
// through unchanged.
std::string topic_display(std::string_view raw_topic);

// "Class:" for tasks 1/3/4/5, the mentions cue for task 2.
std::string_view task_query_cue(TaskId t);

// Gold output strings, the task's closed vocabulary.
std::string gold_intention(IntentionLabel l);
std::string gold_categories(const std::set<ConspiracyCategory>& mentioned);
std::string gold_conspiracy(bool is_conspiracy);
std::string gold_relatedness(RelatednessLabel l);
std::vector<std::string> gold_vocabulary(TaskId t);

// One record per input for tasks 1/2/4/5; twelve per input for task 3.
// `affect`, when given, must be aligned 1:1 with `records`.
std::vector<InstructionRecord> build_task_dataset(
    TaskId task, const std::vector<CocoRecord>& records,
    const std::vector<AffectiveProfile>* affect = nullptr);
std::vector<InstructionRecord> build_task_dataset(
    TaskId task, const std::vector<LocoRecord>& records,
    const std::vector<AffectiveProfile>* affect = nullptr);

// "Task: ...\nText: ...\n<cue>", with the affective sentence appended to
// the task prompt when the record carries a block.
std::string render_prompt(const InstructionRecord& rec);

void write_records(const std::vector<InstructionRecord>& records,
                   const std::filesystem::path& path);
std::vector<InstructionRecord> read_records(const std::filesystem::path& path);

}  // namespace condid
