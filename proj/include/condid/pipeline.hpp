// Pipeline verbs behind the CLI: ingest -> split -> annotate-affect ->
// build -> run -> score -> analyze -> report, each producing its artifact
// files under the configured output directory.
#pragma once

#include "condid/affect.hpp"
#include "condid/backend.hpp"
#include "condid/corpus.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace condid {

struct PipelineConfig {
    std::filesystem::path output_dir = "out";

    std::optional<std::filesystem::path> coco_path;
    CorpusFormat coco_format = CorpusFormat::Csv;
    std::optional<std::filesystem::path> loco_path;

    std::uint64_t seed = 42;
    SplitRatios ratios;
    std::optional<std::filesystem::path> coco_split_manifest;
    std::optional<std::filesystem::path> loco_split_manifest;

    std::vector<int> tasks = {1, 2, 3, 4, 5};
    bool tasks_explicit = false;  // set when --task was given
    std::vector<std::string> build_splits = {"train", "dev", "test"};

    bool affect_enabled = false;
    std::string affect_provider = "synthetic";  // "synthetic" | "http"
    std::optional<std::filesystem::path> affect_cache;
    int affect_parallelism = 1;
    BackendConfig affect_backend;
    DimensionPrompts affect_prompts = DimensionPrompts::defaults();

    std::string run_backend = "mock-echo";  // "http" | "mock-echo" | "mock-constant:<text>"
    std::string run_split = "test";
    BackendConfig backend;

    int analysis_bins = 50;
    bool analysis_svg = true;
    bool analysis_kde = false;

    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // Hash of the canonical config JSON; embedded in every artifact.
    std::string config_hash() const;
    std::filesystem::path affect_cache_path() const;
};

// Serializes commands per output directory; throws DataError when another
// command holds the lock.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& output_dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
    bool held_ = false;
};

void verb_ingest(const PipelineConfig& cfg, std::ostream& log);
void verb_split(const PipelineConfig& cfg, std::ostream& log);
void verb_annotate_affect(const PipelineConfig& cfg, std::ostream& log);
void verb_build(const PipelineConfig& cfg, std::ostream& log);
void verb_run(const PipelineConfig& cfg, std::ostream& log);
void verb_score(const PipelineConfig& cfg, std::ostream& log);
void verb_analyze(const PipelineConfig& cfg, std::ostream& log);
void verb_report(const PipelineConfig& cfg, std::ostream& log);

// Dispatch by verb name; throws UsageError for unknown verbs.
void run_verb(const std::string& verb, const PipelineConfig& cfg, std::ostream& log);

inline constexpr std::array<std::string_view, 8> kVerbs = {
    "ingest", "split", "annotate-affect", "build",
    "run",    "score", "analyze",         "report"};

}  // namespace condid
