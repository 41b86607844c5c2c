#include "condid/corpus.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace condid {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct CategoryNames {
    ConspiracyCategory cat;
    std::string_view display;
    std::string_view key;
};

constexpr std::array<CategoryNames, kCategoryCount> kCategoryNames = {{
    {ConspiracyCategory::SuppressedCures, "suppressed cures", "suppressed_cures"},
    {ConspiracyCategory::BehaviorControl, "behavior control", "behavior_control"},
    {ConspiracyCategory::AntiVaccination, "anti vaccination", "anti_vaccination"},
    {ConspiracyCategory::FakeVirus, "fake virus", "fake_virus"},
    {ConspiracyCategory::IntentionalPandemic, "intentional pandemic", "intentional_pandemic"},
    {ConspiracyCategory::HarmfulRadiation, "harmful radiation", "harmful_radiation"},
    {ConspiracyCategory::Depopulation, "depopulation", "depopulation"},
    {ConspiracyCategory::NewWorldOrder, "new world order", "new_world_order"},
    {ConspiracyCategory::EsotericMisinformation, "esoteric misinformation", "esoteric_misinformation"},
    {ConspiracyCategory::Satanism, "satanism", "satanism"},
    {ConspiracyCategory::OtherConspiracyTheory, "other conspiracy theory", "other_conspiracy_theory"},
    {ConspiracyCategory::OtherMisinformation, "other misinformation", "other_misinformation"},
}};

std::string line_err(const fs::path& path, std::size_t line, const std::string& what) {
    return path.string() + ":" + std::to_string(line) + ": " + what;
}

// Minimal RFC-4180 CSV reader. Handles quoted fields with embedded commas,
// doubled quotes and newlines (tweets contain all three). Tracks the line
// each record starts on for error reporting.
struct CsvRow {
    std::vector<std::string> cells;
    std::size_t line = 0;
};

std::vector<CsvRow> read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    // strip UTF-8 BOM
    if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) data.erase(0, 3);

    std::vector<CsvRow> rows;
    CsvRow row;
    row.line = 1;
    std::string cell;
    bool in_quotes = false;
    bool row_has_data = false;
    std::size_t line = 1;

    auto end_cell = [&] {
        row.cells.push_back(std::move(cell));
        cell.clear();
    };
    auto end_row = [&] {
        if (row_has_data || !row.cells.empty()) {
            end_cell();
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        row.line = line;
        row_has_data = false;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_data = true;
                break;
            case ',':
                end_cell();
                row_has_data = true;
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                cell.push_back(c);
                row_has_data = true;
        }
    }
    if (in_quotes) throw DataError(line_err(path, row.line, "unterminated quoted field"));
    if (row_has_data || !cell.empty() || !row.cells.empty()) end_row();
    return rows;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

IntentionLabel parse_label_cell(const fs::path& path, std::size_t line,
                                std::string_view key, const std::string& value) {
    auto parsed = intention_from_string(trim(value));
    if (!parsed) {
        throw DataError(line_err(path, line,
                                 "unknown label '" + value + "' for category '" +
                                     std::string(key) +
                                     "' (expected unrelated|related|conspiracy)"));
    }
    return *parsed;
}

void finish_coco_record(CocoRecord& rec, std::optional<IntentionLabel> claimed_overall,
                        const fs::path& path, std::size_t line, WarningList& warnings) {
    rec.overall = derive_overall_intention(rec.category_labels);
    if (claimed_overall && *claimed_overall != rec.overall) {
        warnings.push_back(line_err(
            path, line,
            "record '" + rec.id + "' claims overall=" +
                std::string(intention_name(*claimed_overall)) + " but labels imply " +
                std::string(intention_name(rec.overall)) + "; recomputed value kept"));
    }
}

}  // namespace

const std::array<ConspiracyCategory, kCategoryCount>& all_categories() {
    static const std::array<ConspiracyCategory, kCategoryCount> cats = [] {
        std::array<ConspiracyCategory, kCategoryCount> a{};
        for (int i = 0; i < kCategoryCount; ++i) a[i] = kCategoryNames[i].cat;
        return a;
    }();
    return cats;
}

std::string_view category_display_name(ConspiracyCategory c) {
    return kCategoryNames[static_cast<int>(c)].display;
}

std::string_view category_key(ConspiracyCategory c) {
    return kCategoryNames[static_cast<int>(c)].key;
}

std::optional<ConspiracyCategory> category_from_key(std::string_view key) {
    for (const auto& n : kCategoryNames)
        if (n.key == key) return n.cat;
    return std::nullopt;
}

std::optional<ConspiracyCategory> category_from_display(std::string_view name) {
    const std::string norm = normalize_for_match(name);
    for (const auto& n : kCategoryNames)
        if (n.display == norm) return n.cat;
    return std::nullopt;
}

std::string_view intention_name(IntentionLabel l) {
    switch (l) {
        case IntentionLabel::Unrelated: return "Unrelated";
        case IntentionLabel::Related: return "Related";
        case IntentionLabel::Conspiracy: return "Conspiracy";
    }
    return "Unrelated";
}

std::optional<IntentionLabel> intention_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "unrelated") return IntentionLabel::Unrelated;
    if (v == "related") return IntentionLabel::Related;
    if (v == "conspiracy") return IntentionLabel::Conspiracy;
    return std::nullopt;
}

std::string_view relatedness_name(RelatednessLabel l) {
    switch (l) {
        case RelatednessLabel::NotRelated: return "not related";
        case RelatednessLabel::CloselyRelated: return "closely related";
        case RelatednessLabel::BroadlyRelated: return "broadly related";
    }
    return "not related";
}

std::optional<RelatednessLabel> relatedness_from_string(std::string_view s) {
    const std::string v = normalize_for_match(s);
    if (v == "not related") return RelatednessLabel::NotRelated;
    if (v == "closely related") return RelatednessLabel::CloselyRelated;
    if (v == "broadly related") return RelatednessLabel::BroadlyRelated;
    return std::nullopt;
}

IntentionLabel derive_overall_intention(const CategoryLabels& labels) {
    bool any_related = false;
    for (IntentionLabel l : labels) {
        if (l == IntentionLabel::Conspiracy) return IntentionLabel::Conspiracy;
        if (l == IntentionLabel::Related) any_related = true;
    }
    return any_related ? IntentionLabel::Related : IntentionLabel::Unrelated;
}

std::set<ConspiracyCategory> derive_mentioned_categories(const CategoryLabels& labels) {
    std::set<ConspiracyCategory> out;
    for (int i = 0; i < kCategoryCount; ++i) {
        if (labels[i] != IntentionLabel::Unrelated)
            out.insert(static_cast<ConspiracyCategory>(i));
    }
    return out;
}

CocoLoadResult load_coco(const fs::path& path, CorpusFormat format) {
    CocoLoadResult result;
    std::unordered_set<std::string> seen_ids;

    auto check_dup = [&](const std::string& id, std::size_t line) {
        if (!seen_ids.insert(id).second)
            throw DataError(line_err(path, line, "duplicate record id '" + id + "'"));
    };

    if (format == CorpusFormat::Csv) {
        const auto rows = read_csv(path);
        if (rows.empty()) {
            result.warnings.push_back(path.string() + ": file is empty");
            return result;
        }
        const auto& header = rows.front().cells;
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;

        for (const char* required : {"id", "text"}) {
            if (!col.count(required))
                throw DataError(line_err(path, rows.front().line,
                                         std::string("missing column '") + required + "'"));
        }
        for (const auto& n : kCategoryNames) {
            if (!col.count(std::string(n.key)))
                throw DataError(line_err(path, rows.front().line,
                                         "missing category column '" + std::string(n.key) + "'"));
        }
        const bool has_overall = col.count("overall") > 0;

        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.cells.size() != header.size()) {
                // Name the first header column the short row fails to cover.
                std::string missing = row.cells.size() < header.size()
                                          ? header[row.cells.size()]
                                          : "";
                throw DataError(line_err(
                    path, row.line,
                    "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(row.cells.size()) +
                        (missing.empty() ? "" : " (first missing: '" + missing + "')")));
            }
            CocoRecord rec;
            rec.id = trim(row.cells[col["id"]]);
            rec.text = row.cells[col["text"]];
            check_dup(rec.id, row.line);
            for (const auto& n : kCategoryNames) {
                const std::string& cell = row.cells[col[std::string(n.key)]];
                rec.category_labels[static_cast<int>(n.cat)] =
                    parse_label_cell(path, row.line, n.key, cell);
            }
            std::optional<IntentionLabel> claimed;
            if (has_overall) {
                const std::string& cell = row.cells[col["overall"]];
                if (!trim(cell).empty()) {
                    claimed = intention_from_string(cell);
                    if (!claimed)
                        throw DataError(line_err(path, row.line,
                                                 "unknown overall label '" + cell + "'"));
                }
            }
            finish_coco_record(rec, claimed, path, row.line, result.warnings);
            result.records.push_back(std::move(rec));
        }
    } else {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open file: " + path.string());
        std::string line;
        std::size_t lineno = 0;
        bool any = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            any = true;
            ojson j;
            try {
                j = ojson::parse(line);
            } catch (const std::exception& e) {
                throw DataError(line_err(path, lineno, std::string("bad JSON: ") + e.what()));
            }
            CocoRecord rec;
            if (!j.contains("id") || !j["id"].is_string())
                throw DataError(line_err(path, lineno, "missing field 'id'"));
            if (!j.contains("text") || !j["text"].is_string())
                throw DataError(line_err(path, lineno, "missing field 'text'"));
            rec.id = j["id"].get<std::string>();
            rec.text = j["text"].get<std::string>();
            check_dup(rec.id, lineno);
            for (const auto& n : kCategoryNames) {
                const std::string key(n.key);
                if (!j.contains(key))
                    throw DataError(line_err(path, lineno,
                                             "missing category field '" + key + "'"));
                rec.category_labels[static_cast<int>(n.cat)] =
                    parse_label_cell(path, lineno, n.key, j[key].get<std::string>());
            }
            std::optional<IntentionLabel> claimed;
            if (j.contains("overall")) {
                claimed = intention_from_string(j["overall"].get<std::string>());
                if (!claimed)
                    throw DataError(line_err(path, lineno,
                                             "unknown overall label '" +
                                                 j["overall"].get<std::string>() + "'"));
            }
            finish_coco_record(rec, claimed, path, lineno, result.warnings);
            result.records.push_back(std::move(rec));
        }
        if (!any) result.warnings.push_back(path.string() + ": file is empty");
    }
    return result;
}

LocoLoadResult load_loco(const fs::path& path) {
    LocoLoadResult result;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        any = true;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const std::exception& e) {
            throw DataError(line_err(path, lineno, std::string("bad JSON: ") + e.what()));
        }
        LocoRecord rec;
        if (!j.contains("id") || !j["id"].is_string())
            throw DataError(line_err(path, lineno, "missing field 'id'"));
        rec.id = j["id"].get<std::string>();
        if (!j.contains("text") || !j["text"].is_string())
            throw DataError(line_err(path, lineno,
                                     "missing text for record '" + rec.id + "'"));
        rec.text = j["text"].get<std::string>();
        if (!j.contains("conspiracy") || !j["conspiracy"].is_boolean())
            throw DataError(line_err(path, lineno, "missing boolean field 'conspiracy'"));
        rec.is_conspiracy = j["conspiracy"].get<bool>();
        if (!j.contains("relatedness"))
            throw DataError(line_err(path, lineno, "missing field 'relatedness'"));
        const std::string rel = j["relatedness"].get<std::string>();
        auto parsed = relatedness_from_string(rel);
        if (!parsed)
            throw DataError(line_err(path, lineno,
                                     "unknown relatedness '" + rel +
                                         "' (expected one of: not related, closely related, "
                                         "broadly related)"));
        rec.relatedness = *parsed;
        rec.topic = j.value("topic", std::string());
        if (!seen_ids.insert(rec.id).second)
            result.warnings.push_back(line_err(path, lineno,
                                               "duplicate record id '" + rec.id + "'"));
        result.records.push_back(std::move(rec));
    }
    if (!any) result.warnings.push_back(path.string() + ": file is empty");
    return result;
}

void write_coco(const std::vector<CocoRecord>& records, const fs::path& path,
                CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    if (format == CorpusFormat::Csv) {
        out << "id,text";
        for (const auto& n : kCategoryNames) out << ',' << n.key;
        out << '\n';
        for (const auto& rec : records) {
            out << csv_quote(rec.id) << ',' << csv_quote(rec.text);
            for (const auto& n : kCategoryNames) {
                out << ','
                    << to_lower(intention_name(rec.category_labels[static_cast<int>(n.cat)]));
            }
            out << '\n';
        }
    } else {
        for (const auto& rec : records) {
            ojson j;
            j["id"] = rec.id;
            j["text"] = rec.text;
            for (const auto& n : kCategoryNames)
                j[std::string(n.key)] =
                    to_lower(intention_name(rec.category_labels[static_cast<int>(n.cat)]));
            j["overall"] = to_lower(intention_name(rec.overall));
            out << j.dump() << '\n';
        }
    }
}

void write_loco(const std::vector<LocoRecord>& records, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    for (const auto& rec : records) {
        ojson j;
        j["id"] = rec.id;
        j["text"] = rec.text;
        j["conspiracy"] = rec.is_conspiracy;
        j["relatedness"] = std::string(relatedness_name(rec.relatedness));
        j["topic"] = rec.topic;
        out << j.dump() << '\n';
    }
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "train";
}

std::optional<Split> split_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "train") return Split::Train;
    if (v == "dev" || v == "valid" || v == "validation") return Split::Dev;
    if (v == "test") return Split::Test;
    return std::nullopt;
}

const std::vector<std::string>& SplitAssignment::ids(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Dev: return dev;
        case Split::Test: return test;
    }
    return train;
}

std::map<std::string, Split> SplitAssignment::index() const {
    std::map<std::string, Split> out;
    for (const auto& id : train) out[id] = Split::Train;
    for (const auto& id : dev) out[id] = Split::Dev;
    for (const auto& id : test) out[id] = Split::Test;
    return out;
}

SplitAssignment split(const std::vector<std::string>& ids, SplitRatios ratios,
                      std::uint64_t seed) {
    if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0)
        throw DataError("split ratios must be non-negative");
    const double sum = ratios.train + ratios.dev + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9)
        throw DataError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
    {
        std::unordered_set<std::string> seen;
        for (const auto& id : ids)
            if (!seen.insert(id).second)
                throw DataError("duplicate id in split input: '" + id + "'");
    }

    std::vector<std::string> shuffled = ids;
    // Hand-rolled Fisher-Yates: std::shuffle's draw sequence is
    // implementation-defined, and the assignment must be a pure function
    // of (ids, ratios, seed) on every platform.
    std::mt19937_64 rng(seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::uint64_t j = static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(rng()) * i) >> 64);
        std::swap(shuffled[i - 1], shuffled[j]);
    }

    const std::size_t n = shuffled.size();
    const std::size_t n_test =
        std::min<std::size_t>(n, static_cast<std::size_t>(
                                     std::ceil(static_cast<double>(n) * ratios.test)));
    const std::size_t n_dev = std::min<std::size_t>(
        n - n_test,
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.dev)));

    SplitAssignment out;
    out.seed = seed;
    out.ratios = ratios;
    out.test.assign(shuffled.begin(), shuffled.begin() + n_test);
    out.dev.assign(shuffled.begin() + n_test, shuffled.begin() + n_test + n_dev);
    out.train.assign(shuffled.begin() + n_test + n_dev, shuffled.end());
    return out;
}

SplitAssignment split_from_lists(std::vector<std::string> train,
                                 std::vector<std::string> dev,
                                 std::vector<std::string> test) {
    SplitAssignment out;
    out.train = std::move(train);
    out.dev = std::move(dev);
    out.test = std::move(test);
    std::unordered_set<std::string> seen;
    for (const auto* part : {&out.train, &out.dev, &out.test}) {
        for (const auto& id : *part)
            if (!seen.insert(id).second)
                throw DataError("id assigned to more than one split: '" + id + "'");
    }
    return out;
}

void write_split_manifest(const SplitAssignment& a, const fs::path& path,
                          const std::map<std::string, std::string>& extra) {
    ojson j;
    j["train"] = a.train;
    j["dev"] = a.dev;
    j["test"] = a.test;
    j["seed"] = a.seed;
    j["ratios"] = {a.ratios.train, a.ratios.dev, a.ratios.test};
    for (const auto& [k, v] : extra) j[k] = v;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

SplitAssignment read_split_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open split manifest: " + path.string());
    ojson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("bad split manifest " + path.string() + ": " + e.what());
    }
    for (const char* key : {"train", "dev", "test"}) {
        if (!j.contains(key) || !j[key].is_array())
            throw DataError("split manifest " + path.string() + " missing array '" +
                            key + "'");
    }
    auto a = split_from_lists(j["train"].get<std::vector<std::string>>(),
                              j["dev"].get<std::vector<std::string>>(),
                              j["test"].get<std::vector<std::string>>());
    if (j.contains("seed") && j["seed"].is_number_unsigned())
        a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("ratios") && j["ratios"].is_array() && j["ratios"].size() == 3) {
        a.ratios.train = j["ratios"][0].get<double>();
        a.ratios.dev = j["ratios"][1].get<double>();
        a.ratios.test = j["ratios"][2].get<double>();
    }
    return a;
}

}  // namespace condid
