#include "condid/instructions.hpp"

#include "json.hpp"

#include <fstream>

namespace condid {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kIntentionClasses =
    "0. Unrelated. 1. Related (but not supporting). 2. Conspiracy (related and "
    "supporting).";

constexpr std::string_view kCueClass = "Class:";
constexpr std::string_view kCueMentions = "The text mentions or refers to conspiracies:";

constexpr std::string_view kNoConspiracy = "no conspiracy";

std::string attach_affect(const std::string& task_prompt,
                          const std::optional<std::string>& block) {
    if (!block) return task_prompt;
    return task_prompt + " " + std::string(kAffectiveLeadIn) + *block;
}

InstructionRecord make_record(TaskId task, const std::string& source_id,
                              std::string task_prompt, const std::string& text,
                              std::string gold,
                              const AffectiveProfile* profile,
                              std::optional<ConspiracyCategory> category = std::nullopt) {
    InstructionRecord rec;
    rec.task = task;
    rec.source_id = source_id;
    rec.category = category;
    rec.task_prompt = std::move(task_prompt);
    rec.input_text = text;
    rec.query_cue = std::string(task_query_cue(task));
    rec.gold_output = std::move(gold);
    if (profile) rec.affective_block = format_affective_block(*profile);
    return rec;
}

const AffectiveProfile* profile_at(const std::vector<AffectiveProfile>* affect,
                                   std::size_t i) {
    return affect ? &(*affect)[i] : nullptr;
}

void check_alignment(std::size_t records, const std::vector<AffectiveProfile>* affect) {
    if (affect && affect->size() != records)
        throw DataError("affective profiles not aligned with records: " +
                        std::to_string(affect->size()) + " profiles for " +
                        std::to_string(records) + " records");
}

}  // namespace

int task_number(TaskId t) { return static_cast<int>(t); }

std::optional<TaskId> task_from_number(int n) {
    if (n >= 1 && n <= 5) return static_cast<TaskId>(n);
    return std::nullopt;
}

bool task_uses_coco(TaskId t) {
    return t == TaskId::T1 || t == TaskId::T2 || t == TaskId::T3;
}

std::string task_prompt_t1() {
    return "Classify the text regarding COVID-19 conspiracy theories or misinformation "
           "into one of the following three classes: " +
           std::string(kIntentionClasses);
}

std::string task_prompt_t2() {
    return "detect whether the text in any form mentions or refers to any of the "
           "specific categories of COVID-19 conspiracy theories ('suppressed cures', "
           "'behavior control', 'anti vaccination', 'fake virus', 'intentional "
           "pandemic', 'harmful radiation', 'depopulation', 'new world order', "
           "'satanism', 'esoteric misinformation', 'other conspiracy theory') or other "
           "misinformation. If it doesn't, it is 'no conspiracy.";
}

std::string task_prompt_t3(ConspiracyCategory category) {
    return "Classify the text regarding the specific category " +
           std::string(category_display_name(category)) +
           " into one of the following three classes: " + std::string(kIntentionClasses);
}

std::string task_prompt_t4() {
    return "Determine if the text is a conspiracy theory. Classify it into one of the "
           "following two classes: 0. non-conspiracy. 1. conspiracy.";
}

std::string task_prompt_t5(std::string_view topic_display) {
    return "Determine the relatedness between the text and " + std::string(topic_display) +
           ". Classify it into one of the following three classes: 0. not related. "
           "1. closely related. 2. broadly related.";
}

std::string topic_display(std::string_view raw_topic) {
    const std::string norm = normalize_for_match(raw_topic);
    if (norm == "sandy hook" || norm == "sandyhook")
        return "the Sandy Hook school shooting";
    if (norm == "coronavirus" || norm == "covid" || norm == "covid 19")
        return "coronavirus";
    return std::string(raw_topic);
}

std::string_view task_query_cue(TaskId t) {
    return t == TaskId::T2 ? kCueMentions : kCueClass;
}

std::string gold_intention(IntentionLabel l) {
    switch (l) {
        case IntentionLabel::Unrelated: return "0. Unrelated";
        case IntentionLabel::Related: return "1. Related (but not supporting)";
        case IntentionLabel::Conspiracy: return "2. Conspiracy (related and supporting)";
    }
    return "0. Unrelated";
}

std::string gold_categories(const std::set<ConspiracyCategory>& mentioned) {
    if (mentioned.empty()) return std::string(kNoConspiracy);
    std::string out;
    bool first = true;
    for (ConspiracyCategory c : mentioned) {  // std::set iterates in enum order
        if (!first) out += ", ";
        out += std::string(category_display_name(c));
        first = false;
    }
    return out;
}

std::string gold_conspiracy(bool is_conspiracy) {
    return is_conspiracy ? "1. conspiracy" : "0. non-conspiracy";
}

std::string gold_relatedness(RelatednessLabel l) {
    switch (l) {
        case RelatednessLabel::NotRelated: return "0. not related";
        case RelatednessLabel::CloselyRelated: return "1. closely related";
        case RelatednessLabel::BroadlyRelated: return "2. broadly related";
    }
    return "0. not related";
}

std::vector<std::string> gold_vocabulary(TaskId t) {
    std::vector<std::string> out;
    switch (t) {
        case TaskId::T1:
        case TaskId::T3:
            for (auto l : {IntentionLabel::Unrelated, IntentionLabel::Related,
                           IntentionLabel::Conspiracy})
                out.push_back(gold_intention(l));
            break;
        case TaskId::T2:
            for (ConspiracyCategory c : all_categories())
                out.push_back(std::string(category_display_name(c)));
            out.push_back(std::string(kNoConspiracy));
            break;
        case TaskId::T4:
            out.push_back(gold_conspiracy(false));
            out.push_back(gold_conspiracy(true));
            break;
        case TaskId::T5:
            for (auto l : {RelatednessLabel::NotRelated, RelatednessLabel::CloselyRelated,
                           RelatednessLabel::BroadlyRelated})
                out.push_back(gold_relatedness(l));
            break;
    }
    return out;
}

std::vector<InstructionRecord> build_task_dataset(
    TaskId task, const std::vector<CocoRecord>& records,
    const std::vector<AffectiveProfile>* affect) {
    if (!task_uses_coco(task))
        throw DataError("task " + std::to_string(task_number(task)) +
                        " consumes LOCO records, not COCO");
    check_alignment(records.size(), affect);

    std::vector<InstructionRecord> out;
    out.reserve(records.size() * (task == TaskId::T3 ? kCategoryCount : 1));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const CocoRecord& rec = records[i];
        const AffectiveProfile* profile = profile_at(affect, i);
        switch (task) {
            case TaskId::T1:
                out.push_back(make_record(task, rec.id, task_prompt_t1(), rec.text,
                                          gold_intention(rec.overall), profile));
                break;
            case TaskId::T2:
                out.push_back(make_record(
                    task, rec.id, task_prompt_t2(), rec.text,
                    gold_categories(derive_mentioned_categories(rec.category_labels)),
                    profile));
                break;
            case TaskId::T3:
                for (ConspiracyCategory c : all_categories()) {
                    out.push_back(make_record(
                        task, rec.id, task_prompt_t3(c), rec.text,
                        gold_intention(rec.category_labels[static_cast<int>(c)]), profile,
                        c));
                }
                break;
            default:
                break;
        }
    }
    return out;
}

std::vector<InstructionRecord> build_task_dataset(
    TaskId task, const std::vector<LocoRecord>& records,
    const std::vector<AffectiveProfile>* affect) {
    if (task_uses_coco(task))
        throw DataError("task " + std::to_string(task_number(task)) +
                        " consumes COCO records, not LOCO");
    check_alignment(records.size(), affect);

    std::vector<InstructionRecord> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const LocoRecord& rec = records[i];
        const AffectiveProfile* profile = profile_at(affect, i);
        if (task == TaskId::T4) {
            out.push_back(make_record(task, rec.id, task_prompt_t4(), rec.text,
                                      gold_conspiracy(rec.is_conspiracy), profile));
        } else {
            out.push_back(make_record(task, rec.id, task_prompt_t5(topic_display(rec.topic)),
                                      rec.text, gold_relatedness(rec.relatedness), profile));
        }
    }
    return out;
}

std::string render_prompt(const InstructionRecord& rec) {
    std::string out = "Task: ";
    out += attach_affect(rec.task_prompt, rec.affective_block);
    out += "\nText: ";
    out += rec.input_text;
    out += "\n";
    out += rec.query_cue;
    return out;
}

void write_records(const std::vector<InstructionRecord>& records, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    for (const auto& rec : records) {
        ojson j;
        j["task"] = task_number(rec.task);
        j["source_id"] = rec.source_id;
        if (rec.category) j["category"] = std::string(category_key(*rec.category));
        j["task_prompt"] = rec.task_prompt;
        j["input_text"] = rec.input_text;
        j["query_cue"] = rec.query_cue;
        j["gold_output"] = rec.gold_output;
        if (rec.affective_block) j["affective_block"] = *rec.affective_block;
        out << j.dump() << '\n';
    }
}

std::vector<InstructionRecord> read_records(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path.string());
    std::vector<InstructionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const std::exception& e) {
            throw DataError(where + ": bad JSON: " + e.what());
        }
        InstructionRecord rec;
        if (!j.contains("task") || !j["task"].is_number_integer())
            throw DataError(where + ": missing integer field 'task'");
        auto task = task_from_number(j["task"].get<int>());
        if (!task) throw DataError(where + ": task number out of range");
        rec.task = *task;
        for (const char* field :
             {"source_id", "task_prompt", "input_text", "query_cue", "gold_output"}) {
            if (!j.contains(field) || !j[field].is_string())
                throw DataError(where + ": missing field '" + std::string(field) + "'");
        }
        rec.source_id = j["source_id"].get<std::string>();
        rec.task_prompt = j["task_prompt"].get<std::string>();
        rec.input_text = j["input_text"].get<std::string>();
        rec.query_cue = j["query_cue"].get<std::string>();
        rec.gold_output = j["gold_output"].get<std::string>();
        if (j.contains("category")) {
            auto cat = category_from_key(j["category"].get<std::string>());
            if (!cat) throw DataError(where + ": unknown category key");
            rec.category = cat;
        }
        if ((rec.task == TaskId::T3) != rec.category.has_value())
            throw DataError(where + ": category must be present exactly for task 3");
        if (j.contains("affective_block"))
            rec.affective_block = j["affective_block"].get<std::string>();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace condid
