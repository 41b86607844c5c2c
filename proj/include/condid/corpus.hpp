// Raw corpus ingestion: COCO-style tweets with 12 per-category intention
// labels, LOCO-style documents with conspiracy/relatedness labels, gold
// derivation, and deterministic train/dev/test splitting.
#pragma once

#include "condid/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace condid {

enum class ConspiracyCategory : int {
    SuppressedCures = 0,
    BehaviorControl,
    AntiVaccination,
    FakeVirus,
    IntentionalPandemic,
    HarmfulRadiation,
    Depopulation,
    NewWorldOrder,
    EsotericMisinformation,
    Satanism,
    OtherConspiracyTheory,
    OtherMisinformation,
};

inline constexpr int kCategoryCount = 12;

const std::array<ConspiracyCategory, kCategoryCount>& all_categories();

// "suppressed cures" — the wording used inside task prompts and golds.
std::string_view category_display_name(ConspiracyCategory c);
// "suppressed_cures" — the identifier used in file schemas.
std::string_view category_key(ConspiracyCategory c);
std::optional<ConspiracyCategory> category_from_key(std::string_view key);
std::optional<ConspiracyCategory> category_from_display(std::string_view name);

enum class IntentionLabel : int { Unrelated = 0, Related = 1, Conspiracy = 2 };

std::string_view intention_name(IntentionLabel l);  // "Unrelated" / ...
std::optional<IntentionLabel> intention_from_string(std::string_view s);

// Total map over the 12 categories; totality is enforced by the array type.
using CategoryLabels = std::array<IntentionLabel, kCategoryCount>;

struct CocoRecord {
    std::string id;
    std::string text;
    CategoryLabels category_labels{};
    // Always recomputed from category_labels; never trusted from files.
    IntentionLabel overall = IntentionLabel::Unrelated;
};

enum class RelatednessLabel : int {
    NotRelated = 0,
    CloselyRelated = 1,
    BroadlyRelated = 2,
};

std::string_view relatedness_name(RelatednessLabel l);  // "not related" / ...
std::optional<RelatednessLabel> relatedness_from_string(std::string_view s);

struct LocoRecord {
    std::string id;
    std::string text;
    bool is_conspiracy = false;
    RelatednessLabel relatedness = RelatednessLabel::NotRelated;
    std::string topic;  // e.g. "sandy-hook", "coronavirus"
};

// Conspiracy wins over Related; Unrelated only when all 12 are Unrelated.
IntentionLabel derive_overall_intention(const CategoryLabels& labels);

// Categories whose label is Related or Conspiracy; empty = "no conspiracy".
std::set<ConspiracyCategory> derive_mentioned_categories(const CategoryLabels& labels);

enum class CorpusFormat { Csv, JsonLines };

struct CocoLoadResult {
    std::vector<CocoRecord> records;
    WarningList warnings;
};
struct LocoLoadResult {
    std::vector<LocoRecord> records;
    WarningList warnings;
};

CocoLoadResult load_coco(const std::filesystem::path& path, CorpusFormat format);
LocoLoadResult load_loco(const std::filesystem::path& path);

void write_coco(const std::vector<CocoRecord>& records,
                const std::filesystem::path& path, CorpusFormat format);
void write_loco(const std::vector<LocoRecord>& records,
                const std::filesystem::path& path);

enum class Split { Train, Dev, Test };

std::string_view split_name(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct SplitRatios {
    double train = 0.6;
    double dev = 0.2;
    double test = 0.2;
};

struct SplitAssignment {
    std::uint64_t seed = 0;
    SplitRatios ratios;
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;

    const std::vector<std::string>& ids(Split s) const;
    std::map<std::string, Split> index() const;
};

// Deterministic shuffle of `ids` with a fixed PRNG, then carve out
// test = ceil(N*r_test) and dev = floor(N*r_dev); the remainder trains.
// Pure function of (ids, ratios, seed).
SplitAssignment split(const std::vector<std::string>& ids, SplitRatios ratios,
                      std::uint64_t seed);

// Builds an assignment from explicit id lists (published-split manifests).
SplitAssignment split_from_lists(std::vector<std::string> train,
                                 std::vector<std::string> dev,
                                 std::vector<std::string> test);

// Manifest JSON: {"train":[...],"dev":[...],"test":[...]} plus any extra
// provenance fields supplied by the caller.
void write_split_manifest(const SplitAssignment& a, const std::filesystem::path& path,
                          const std::map<std::string, std::string>& extra = {});
SplitAssignment read_split_manifest(const std::filesystem::path& path);

}  // namespace condid
