#include "condid/pipeline.hpp"

#include "condid/analysis.hpp"
#include "condid/inference.hpp"
#include "condid/instructions.hpp"
#include "condid/scoring.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <unordered_map>

namespace condid {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

fs::path corpus_dir(const PipelineConfig& cfg) { return cfg.output_dir / "corpus"; }
fs::path splits_dir(const PipelineConfig& cfg) { return cfg.output_dir / "splits"; }
fs::path datasets_dir(const PipelineConfig& cfg) { return cfg.output_dir / "datasets"; }
fs::path runs_dir(const PipelineConfig& cfg) { return cfg.output_dir / "runs"; }
fs::path reports_dir(const PipelineConfig& cfg) { return cfg.output_dir / "reports"; }
fs::path analysis_dir(const PipelineConfig& cfg) { return cfg.output_dir / "analysis"; }

fs::path coco_file(const PipelineConfig& cfg) { return corpus_dir(cfg) / "coco.jsonl"; }
fs::path loco_file(const PipelineConfig& cfg) { return corpus_dir(cfg) / "loco.jsonl"; }

std::string dataset_stem(int task, const std::string& split) {
    return "t" + std::to_string(task) + "_" + split;
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing artifact " + path.string() + "; run `" + producer +
                        "` first");
}

void log_warnings(std::ostream& log, const WarningList& warnings) {
    for (const auto& w : warnings) log << "[warn] " << w << '\n';
}

BackendConfig backend_from_json(const json& j, BackendConfig base = {}) {
    BackendConfig cfg = std::move(base);
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.model = j.value("model", cfg.model);
    if (j.contains("mode")) {
        auto mode = backend_mode_from_string(j["mode"].get<std::string>());
        if (!mode) throw UsageError("bad backend mode: " + j["mode"].get<std::string>());
        cfg.mode = *mode;
    }
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    if (j.contains("retry")) {
        cfg.retry.max_attempts = j["retry"].value("max_attempts", cfg.retry.max_attempts);
        cfg.retry.base_backoff_ms =
            j["retry"].value("base_backoff_ms", cfg.retry.base_backoff_ms);
    }
    cfg.auth_token_env = j.value("auth_token_env", cfg.auth_token_env);
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    return cfg;
}

json backend_to_json(const BackendConfig& cfg) {
    json j;
    j["endpoint"] = cfg.endpoint;
    j["model"] = cfg.model;
    j["mode"] = std::string(backend_mode_name(cfg.mode));
    j["temperature"] = cfg.temperature;
    j["max_output_tokens"] = cfg.max_output_tokens;
    j["parallelism"] = cfg.parallelism;
    j["retry"] = json{{"max_attempts", cfg.retry.max_attempts},
                      {"base_backoff_ms", cfg.retry.base_backoff_ms}};
    j["auth_token_env"] = cfg.auth_token_env;
    j["timeout_s"] = cfg.timeout_s;
    return j;
}

std::vector<CocoRecord> load_canonical_coco(const PipelineConfig& cfg) {
    require_artifact(coco_file(cfg), "ingest");
    return load_coco(coco_file(cfg), CorpusFormat::JsonLines).records;
}

std::vector<LocoRecord> load_canonical_loco(const PipelineConfig& cfg) {
    require_artifact(loco_file(cfg), "ingest");
    return load_loco(loco_file(cfg)).records;
}

template <typename Record>
std::vector<Record> select_split(const std::vector<Record>& records,
                                 const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const Record*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    std::vector<Record> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw DataError("split manifest references unknown record id '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

template <typename Record>
std::vector<AcquireItem> acquire_items(const std::vector<Record>& records) {
    std::vector<AcquireItem> items;
    items.reserve(records.size());
    for (const auto& r : records) items.push_back({r.id, r.text});
    return items;
}

// Profiles for `records` from the warmed cache only.
template <typename Record>
std::vector<AffectiveProfile> cached_profiles(const PipelineConfig& cfg,
                                              const std::vector<Record>& records) {
    require_artifact(cfg.affect_cache_path(), "annotate-affect");
    CacheOnlyProvider provider;
    return acquire_profiles(acquire_items(records), provider, cfg.affect_cache_path(), 1)
        .profiles;
}

struct EffectiveTasks {
    std::vector<TaskId> coco;
    std::vector<TaskId> loco;
};

EffectiveTasks effective_tasks(const PipelineConfig& cfg, bool have_coco, bool have_loco,
                               std::ostream& log) {
    EffectiveTasks out;
    for (int n : cfg.tasks) {
        auto task = task_from_number(n);
        if (!task) throw UsageError("task number out of range: " + std::to_string(n));
        const bool available = task_uses_coco(*task) ? have_coco : have_loco;
        if (!available) {
            const std::string corpus = task_uses_coco(*task) ? "COCO" : "LOCO";
            if (cfg.tasks_explicit)
                throw DataError("task " + std::to_string(n) + " requires the " + corpus +
                                " corpus, which is not configured");
            log << "[warn] skipping task " << n << " (" << corpus
                << " corpus not configured)\n";
            continue;
        }
        (task_uses_coco(*task) ? out.coco : out.loco).push_back(*task);
    }
    return out;
}

std::unique_ptr<Backend> make_backend(const PipelineConfig& cfg) {
    if (cfg.run_backend == "mock-echo") return std::make_unique<MockEchoBackend>();
    if (cfg.run_backend.rfind("mock-constant:", 0) == 0)
        return std::make_unique<MockConstantBackend>(
            cfg.run_backend.substr(std::string("mock-constant:").size()));
    if (cfg.run_backend == "http") return std::make_unique<HttpBackend>(cfg.backend);
    throw UsageError("unknown run backend '" + cfg.run_backend +
                     "' (expected http, mock-echo or mock-constant:<text>)");
}

std::unique_ptr<AffectProvider> make_affect_provider(const PipelineConfig& cfg) {
    if (cfg.affect_provider == "synthetic")
        return std::make_unique<SyntheticAffectProvider>();
    if (cfg.affect_provider == "http")
        return std::make_unique<RemoteAffectProvider>(cfg.affect_backend,
                                                      cfg.affect_prompts);
    throw UsageError("unknown affect provider '" + cfg.affect_provider +
                     "' (expected synthetic or http)");
}

std::string provenance(const PipelineConfig& cfg) {
    return "config=" + cfg.config_hash() + " seed=" + std::to_string(cfg.seed);
}

void write_json_file(const ojson& j, const fs::path& path) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

ojson read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    ojson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("bad JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("coco")) {
        cfg.coco_path = j["coco"].value("path", std::string());
        if (cfg.coco_path->empty()) cfg.coco_path.reset();
        const std::string fmt = j["coco"].value("format", "csv");
        if (fmt == "csv") cfg.coco_format = CorpusFormat::Csv;
        else if (fmt == "jsonl" || fmt == "json-lines") cfg.coco_format = CorpusFormat::JsonLines;
        else throw UsageError("bad coco format '" + fmt + "' (expected csv or jsonl)");
    }
    if (j.contains("loco")) {
        cfg.loco_path = j["loco"].value("path", std::string());
        if (cfg.loco_path->empty()) cfg.loco_path.reset();
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        cfg.seed = s.value("seed", cfg.seed);
        if (s.contains("ratios")) {
            if (!s["ratios"].is_array() || s["ratios"].size() != 3)
                throw UsageError("split.ratios must be an array of 3 numbers");
            cfg.ratios.train = s["ratios"][0].get<double>();
            cfg.ratios.dev = s["ratios"][1].get<double>();
            cfg.ratios.test = s["ratios"][2].get<double>();
        }
        if (s.contains("coco_manifest") && !s["coco_manifest"].get<std::string>().empty())
            cfg.coco_split_manifest = s["coco_manifest"].get<std::string>();
        if (s.contains("loco_manifest") && !s["loco_manifest"].get<std::string>().empty())
            cfg.loco_split_manifest = s["loco_manifest"].get<std::string>();
    }
    if (j.contains("tasks")) {
        cfg.tasks = j["tasks"].get<std::vector<int>>();
        cfg.tasks_explicit = true;
    }
    if (j.contains("affect")) {
        const auto& a = j["affect"];
        cfg.affect_enabled = a.value("enabled", cfg.affect_enabled);
        cfg.affect_provider = a.value("provider", cfg.affect_provider);
        if (a.contains("cache") && !a["cache"].get<std::string>().empty())
            cfg.affect_cache = a["cache"].get<std::string>();
        cfg.affect_parallelism = a.value("parallelism", cfg.affect_parallelism);
        if (a.contains("backend")) cfg.affect_backend = backend_from_json(a["backend"]);
        if (a.contains("prompts")) {
            for (int d = 0; d < kAffectDimensionCount; ++d) {
                const std::string key(affect_dimension_key(static_cast<AffectDimension>(d)));
                if (a["prompts"].contains(key))
                    cfg.affect_prompts.templates[d] = a["prompts"][key].get<std::string>();
            }
        }
    }
    if (j.contains("run")) {
        const auto& r = j["run"];
        cfg.run_backend = r.value("backend", cfg.run_backend);
        cfg.run_split = r.value("split", cfg.run_split);
        if (r.contains("http")) cfg.backend = backend_from_json(r["http"]);
    }
    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        cfg.analysis_bins = a.value("bins", cfg.analysis_bins);
        cfg.analysis_svg = a.value("svg", cfg.analysis_svg);
        cfg.analysis_kde = a.value("kde", cfg.analysis_kde);
    }
    return cfg;
}

json PipelineConfig::to_json() const {
    json j;
    j["output_dir"] = output_dir.string();
    if (coco_path)
        j["coco"] = json{{"path", coco_path->string()},
                         {"format", coco_format == CorpusFormat::Csv ? "csv" : "jsonl"}};
    if (loco_path) j["loco"] = json{{"path", loco_path->string()}};
    j["split"] = json{{"seed", seed}, {"ratios", {ratios.train, ratios.dev, ratios.test}}};
    if (coco_split_manifest) j["split"]["coco_manifest"] = coco_split_manifest->string();
    if (loco_split_manifest) j["split"]["loco_manifest"] = loco_split_manifest->string();
    j["tasks"] = tasks;
    json prompts;
    for (int d = 0; d < kAffectDimensionCount; ++d)
        prompts[std::string(affect_dimension_key(static_cast<AffectDimension>(d)))] =
            affect_prompts.templates[d];
    j["affect"] = json{{"enabled", affect_enabled},
                       {"provider", affect_provider},
                       {"cache", affect_cache ? affect_cache->string() : ""},
                       {"parallelism", affect_parallelism},
                       {"backend", backend_to_json(affect_backend)},
                       {"prompts", prompts}};
    j["run"] = json{{"backend", run_backend},
                    {"split", run_split},
                    {"http", backend_to_json(backend)}};
    j["analysis"] = json{{"bins", analysis_bins}, {"svg", analysis_svg}, {"kde", analysis_kde}};
    return j;
}

std::string PipelineConfig::config_hash() const {
    // nlohmann::json orders object keys, so the dump is canonical.
    return fnv1a64_hex(to_json().dump());
}

fs::path PipelineConfig::affect_cache_path() const {
    if (affect_cache) return *affect_cache;
    return output_dir / "affect" / "cache.jsonl";
}

OutputLock::OutputLock(const fs::path& output_dir) {
    fs::create_directories(output_dir);
    path_ = output_dir / ".condid.lock";
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw DataError("another command is running in " + output_dir.string() +
                            " (lock file " + path_.string() + " exists)");
        throw DataError("cannot create lock file " + path_.string());
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    held_ = true;
}

OutputLock::~OutputLock() {
    if (held_) ::unlink(path_.c_str());
}

void verb_ingest(const PipelineConfig& cfg, std::ostream& log) {
    if (!cfg.coco_path && !cfg.loco_path)
        throw UsageError("ingest: no corpus configured (set coco.path and/or loco.path)");
    fs::create_directories(corpus_dir(cfg));

    ojson manifest;
    manifest["config_hash"] = cfg.config_hash();
    manifest["seed"] = cfg.seed;

    if (cfg.coco_path) {
        if (!fs::exists(*cfg.coco_path))
            throw DataError("coco path does not exist: " + cfg.coco_path->string());
        auto loaded = load_coco(*cfg.coco_path, cfg.coco_format);
        log_warnings(log, loaded.warnings);
        write_coco(loaded.records, coco_file(cfg), CorpusFormat::JsonLines);
        ojson entry;
        entry["source"] = cfg.coco_path->string();
        entry["source_hash"] = file_sha_hex(cfg.coco_path->string());
        entry["count"] = loaded.records.size();
        entry["warnings"] = loaded.warnings;
        manifest["coco"] = std::move(entry);
        log << "ingested " << loaded.records.size() << " COCO records -> "
            << coco_file(cfg).string() << '\n';
    }
    if (cfg.loco_path) {
        if (!fs::exists(*cfg.loco_path))
            throw DataError("loco path does not exist: " + cfg.loco_path->string());
        auto loaded = load_loco(*cfg.loco_path);
        log_warnings(log, loaded.warnings);
        write_loco(loaded.records, loco_file(cfg));
        ojson entry;
        entry["source"] = cfg.loco_path->string();
        entry["source_hash"] = file_sha_hex(cfg.loco_path->string());
        entry["count"] = loaded.records.size();
        entry["warnings"] = loaded.warnings;
        manifest["loco"] = std::move(entry);
        log << "ingested " << loaded.records.size() << " LOCO records -> "
            << loco_file(cfg).string() << '\n';
    }
    write_json_file(manifest, corpus_dir(cfg) / "ingest.json");
}

namespace {

void split_one(const PipelineConfig& cfg, std::ostream& log, const std::string& name,
               const std::vector<std::string>& ids,
               const std::optional<fs::path>& explicit_manifest) {
    SplitAssignment assignment;
    if (explicit_manifest) {
        if (!fs::exists(*explicit_manifest))
            throw DataError("split manifest does not exist: " + explicit_manifest->string());
        assignment = read_split_manifest(*explicit_manifest);
        // Every corpus record must be assigned exactly once.
        auto index = assignment.index();
        if (index.size() != ids.size())
            throw DataError("split manifest " + explicit_manifest->string() + " assigns " +
                            std::to_string(index.size()) + " ids but corpus has " +
                            std::to_string(ids.size()));
        for (const auto& id : ids)
            if (!index.count(id))
                throw DataError("split manifest " + explicit_manifest->string() +
                                " does not assign corpus id '" + id + "'");
        assignment.seed = cfg.seed;
    } else {
        assignment = split(ids, cfg.ratios, cfg.seed);
    }
    const fs::path path = splits_dir(cfg) / (name + ".json");
    write_split_manifest(assignment, path, {{"config_hash", cfg.config_hash()}});
    log << name << " split: train=" << assignment.train.size()
        << " dev=" << assignment.dev.size() << " test=" << assignment.test.size()
        << " -> " << path.string() << '\n';
}

}  // namespace

void verb_split(const PipelineConfig& cfg, std::ostream& log) {
    fs::create_directories(splits_dir(cfg));
    bool any = false;
    if (fs::exists(coco_file(cfg))) {
        auto records = load_canonical_coco(cfg);
        std::vector<std::string> ids;
        ids.reserve(records.size());
        for (const auto& r : records) ids.push_back(r.id);
        split_one(cfg, log, "coco", ids, cfg.coco_split_manifest);
        any = true;
    }
    if (fs::exists(loco_file(cfg))) {
        auto records = load_canonical_loco(cfg);
        std::vector<std::string> ids;
        ids.reserve(records.size());
        for (const auto& r : records) ids.push_back(r.id);
        split_one(cfg, log, "loco", ids, cfg.loco_split_manifest);
        any = true;
    }
    if (!any)
        throw DataError("split: no ingested corpus found under " +
                        corpus_dir(cfg).string() + "; run `ingest` first");
}

void verb_annotate_affect(const PipelineConfig& cfg, std::ostream& log) {
    auto provider = make_affect_provider(cfg);
    const fs::path cache = cfg.affect_cache_path();

    ojson manifest;
    manifest["config_hash"] = cfg.config_hash();
    manifest["provider"] = provider->describe();
    manifest["cache"] = cache.string();

    bool any = false;
    std::size_t calls = 0, hits = 0;
    if (fs::exists(coco_file(cfg))) {
        auto records = load_canonical_coco(cfg);
        auto result = acquire_profiles(acquire_items(records), *provider, cache,
                                       cfg.affect_parallelism);
        log_warnings(log, result.warnings);
        calls += result.provider_calls;
        hits += result.cache_hits;
        manifest["coco_count"] = records.size();
        any = true;
    }
    if (fs::exists(loco_file(cfg))) {
        auto records = load_canonical_loco(cfg);
        auto result = acquire_profiles(acquire_items(records), *provider, cache,
                                       cfg.affect_parallelism);
        log_warnings(log, result.warnings);
        calls += result.provider_calls;
        hits += result.cache_hits;
        manifest["loco_count"] = records.size();
        any = true;
    }
    if (!any)
        throw DataError("annotate-affect: no ingested corpus found under " +
                        corpus_dir(cfg).string() + "; run `ingest` first");

    manifest["provider_calls"] = calls;
    manifest["cache_hits"] = hits;
    write_json_file(manifest, cfg.output_dir / "affect" / "annotate.json");
    log << "affect profiles ready (" << calls << " provider calls, " << hits
        << " cache hits) -> " << cache.string() << '\n';
}

namespace {

template <typename Record>
void build_for_corpus(const PipelineConfig& cfg, std::ostream& log,
                      const std::vector<TaskId>& tasks, const std::string& corpus_name,
                      const std::vector<Record>& records, const fs::path& corpus_path) {
    if (tasks.empty()) return;
    const fs::path split_path = splits_dir(cfg) / (corpus_name + ".json");
    require_artifact(split_path, "split");
    const SplitAssignment assignment = read_split_manifest(split_path);
    const std::string corpus_hash = file_sha_hex(corpus_path.string());

    for (const std::string& split_name : cfg.build_splits) {
        auto split_id = split_from_string(split_name);
        if (!split_id) throw UsageError("unknown split '" + split_name + "'");
        const auto subset = select_split(records, assignment.ids(*split_id));
        if (subset.empty()) {
            log << "[warn] " << corpus_name << " " << split_name
                << " split is empty; skipping\n";
            continue;
        }
        std::vector<AffectiveProfile> profiles;
        if (cfg.affect_enabled) profiles = cached_profiles(cfg, subset);

        for (TaskId task : tasks) {
            const auto dataset = build_task_dataset(
                task, subset, cfg.affect_enabled ? &profiles : nullptr);
            const std::string stem = dataset_stem(task_number(task), split_name);
            const fs::path data_path = datasets_dir(cfg) / (stem + ".jsonl");
            write_records(dataset, data_path);

            ojson manifest;
            manifest["task"] = task_number(task);
            manifest["split"] = split_name;
            manifest["count"] = dataset.size();
            manifest["source_corpus"] = corpus_name;
            manifest["source_corpus_hash"] = corpus_hash;
            manifest["seed"] = cfg.seed;
            manifest["affect"] = cfg.affect_enabled;
            manifest["config_hash"] = cfg.config_hash();
            write_json_file(manifest, datasets_dir(cfg) / (stem + ".manifest.json"));
            log << "built " << dataset.size() << " records -> " << data_path.string()
                << '\n';
        }
    }
}

}  // namespace

void verb_build(const PipelineConfig& cfg, std::ostream& log) {
    fs::create_directories(datasets_dir(cfg));
    const bool have_coco = fs::exists(coco_file(cfg));
    const bool have_loco = fs::exists(loco_file(cfg));
    if (!have_coco && !have_loco)
        throw DataError("build: no ingested corpus found under " +
                        corpus_dir(cfg).string() + "; run `ingest` first");
    const auto tasks = effective_tasks(cfg, have_coco, have_loco, log);
    if (tasks.coco.empty() && tasks.loco.empty())
        throw DataError("build: no runnable task for the configured corpora");
    if (have_coco)
        build_for_corpus(cfg, log, tasks.coco, "coco", load_canonical_coco(cfg),
                         coco_file(cfg));
    if (have_loco)
        build_for_corpus(cfg, log, tasks.loco, "loco", load_canonical_loco(cfg),
                         loco_file(cfg));
}

void verb_run(const PipelineConfig& cfg, std::ostream& log) {
    fs::create_directories(runs_dir(cfg));
    const auto tasks = effective_tasks(cfg, true, true, log);
    auto backend = make_backend(cfg);

    std::vector<TaskId> all;
    all.insert(all.end(), tasks.coco.begin(), tasks.coco.end());
    all.insert(all.end(), tasks.loco.begin(), tasks.loco.end());
    std::sort(all.begin(), all.end());

    for (TaskId task : all) {
        const std::string stem = dataset_stem(task_number(task), cfg.run_split);
        const fs::path data_path = datasets_dir(cfg) / (stem + ".jsonl");
        require_artifact(data_path, "build");
        const auto dataset = read_records(data_path);
        const std::string ref = data_path.string() + "#" + file_sha_hex(data_path.string());
        RunManifest manifest =
            run_task(dataset, *backend, std::max(1, cfg.backend.parallelism), ref);
        const fs::path run_path = runs_dir(cfg) / (stem + ".json");
        write_run_manifest(manifest, run_path);
        std::size_t failed = 0;
        for (const auto& r : manifest.records)
            if (!r.ok) ++failed;
        log << "ran task " << task_number(task) << " on " << dataset.size()
            << " records (" << failed << " failed) -> " << run_path.string() << '\n';
    }
}

void verb_score(const PipelineConfig& cfg, std::ostream& log) {
    fs::create_directories(reports_dir(cfg));
    const auto tasks = effective_tasks(cfg, true, true, log);
    std::vector<TaskId> all;
    all.insert(all.end(), tasks.coco.begin(), tasks.coco.end());
    all.insert(all.end(), tasks.loco.begin(), tasks.loco.end());
    std::sort(all.begin(), all.end());

    std::vector<ReportRow> rows;
    for (TaskId task : all) {
        const std::string stem = dataset_stem(task_number(task), cfg.run_split);
        const fs::path data_path = datasets_dir(cfg) / (stem + ".jsonl");
        const fs::path run_path = runs_dir(cfg) / (stem + ".json");
        require_artifact(data_path, "build");
        require_artifact(run_path, "run");

        const auto dataset = read_records(data_path);
        const auto manifest = read_run_manifest(run_path);
        const TaskScore score = score_run(task, dataset, manifest);
        log_warnings(log, score.report.warnings);

        std::string model = "unknown";
        if (manifest.backend.contains("model") &&
            !manifest.backend["model"].get<std::string>().empty())
            model = manifest.backend["model"].get<std::string>();
        else if (manifest.backend.contains("kind"))
            model = manifest.backend["kind"].get<std::string>();

        ojson report;
        report["task"] = task_number(task);
        report["split"] = cfg.run_split;
        report["model"] = model;
        report["backend"] = manifest.backend;
        report["metrics"] = metrics_to_json(score.report);
        if (!score.per_category.empty()) {
            ojson per_cat;
            for (const auto& [key, m] : score.per_category)
                per_cat[key] = metrics_to_json(m);
            report["per_category"] = std::move(per_cat);
        }
        report["config_hash"] = cfg.config_hash();
        report["seed"] = cfg.seed;
        const fs::path report_path = reports_dir(cfg) / (stem + ".json");
        write_json_file(report, report_path);

        if (rows.empty() || rows.back().label != model) rows.push_back({model, {}});
        rows.back().per_task[task_number(task)] = score.report;
        log << "scored task " << task_number(task) << " (n=" << score.report.n
            << ") -> " << report_path.string() << '\n';
    }
    log << render_report_table(rows);
}

void verb_analyze(const PipelineConfig& cfg, std::ostream& log) {
    fs::create_directories(analysis_dir(cfg));
    const std::string prov = provenance(cfg);
    bool any = false;

    auto emit = [&](const GroupedProfiles& groups, const std::string& stem_prefix) {
        for (ScoreField field : kAllScoreFields) {
            const auto series = density(groups, field, cfg.analysis_bins);
            const std::string stem = stem_prefix + "_" + series.field;
            write_density_csv(series, analysis_dir(cfg) / (stem + ".csv"), prov);
            if (cfg.analysis_svg)
                write_density_svg(series, analysis_dir(cfg) / (stem + ".svg"), stem);
            if (cfg.analysis_kde)
                write_kde_csv(kde_density(groups, field),
                              analysis_dir(cfg) / (stem + "_kde.csv"), prov);
        }
        for (LabelDimension dim : kAllLabelDimensions) {
            const auto dist = label_distribution(groups, dim);
            const std::string stem = stem_prefix + "_" + dist.dimension;
            write_label_csv(dist, analysis_dir(cfg) / (stem + ".csv"), prov);
            if (cfg.analysis_svg)
                write_label_svg(dist, analysis_dir(cfg) / (stem + ".svg"), stem);
        }
        log << "analysis series written for " << stem_prefix << '\n';
    };

    if (fs::exists(coco_file(cfg))) {
        const auto records = load_canonical_coco(cfg);
        const auto profiles = cached_profiles(cfg, records);
        emit(group_coco_by_intention(records, profiles), "coco_by_intention");
        const auto by_category = group_coco_by_category(records, profiles);
        if (!by_category.empty()) emit(by_category, "coco_by_category");
        any = true;
    }
    if (fs::exists(loco_file(cfg))) {
        const auto records = load_canonical_loco(cfg);
        const auto profiles = cached_profiles(cfg, records);
        emit(group_loco_by_conspiracy(records, profiles), "loco_by_conspiracy");
        emit(group_loco_by_relatedness(records, profiles), "loco_by_relatedness");
        any = true;
    }
    if (!any)
        throw DataError("analyze: no ingested corpus found under " +
                        corpus_dir(cfg).string() + "; run `ingest` first");
}

void verb_report(const PipelineConfig& cfg, std::ostream& log) {
    if (!fs::exists(reports_dir(cfg)))
        throw DataError("report: no reports found under " + reports_dir(cfg).string() +
                        "; run `score` first");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(reports_dir(cfg))) {
        if (entry.path().extension() == ".json" &&
            entry.path().filename().string().rfind("t", 0) == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("report: no task reports under " + reports_dir(cfg).string() +
                        "; run `score` first");

    std::set<std::string> splits;
    struct Loaded {
        std::string model, split;
        int task;
        MetricsReport metrics;
    };
    std::vector<Loaded> loaded;
    for (const auto& file : files) {
        const ojson j = read_json_file(file);
        Loaded l;
        l.model = j.value("model", "unknown");
        l.split = j.value("split", "");
        l.task = j.value("task", 0);
        const auto& m = j["metrics"];
        l.metrics.acc = m.value("acc", 0.0);
        l.metrics.pre = m.value("pre", 0.0);
        l.metrics.rec = m.value("rec", 0.0);
        l.metrics.weighted_f1 = m.value("weighted_f1", 0.0);
        l.metrics.n = m.value("n", 0u);
        splits.insert(l.split);
        loaded.push_back(std::move(l));
    }

    std::vector<ReportRow> rows;
    std::map<std::string, std::size_t> row_index;
    for (const auto& l : loaded) {
        std::string label = l.model;
        if (splits.size() > 1) label += " (" + l.split + ")";
        if (!row_index.count(label)) {
            row_index[label] = rows.size();
            rows.push_back({label, {}});
        }
        rows[row_index[label]].per_task[l.task] = l.metrics;
    }

    const std::string table = render_report_table(rows);
    log << table;
    std::ofstream out(reports_dir(cfg) / "summary.txt", std::ios::binary);
    out << table;

    ojson summary;
    summary["config_hash"] = cfg.config_hash();
    ojson items = ojson::array();
    for (const auto& l : loaded) {
        ojson item;
        item["model"] = l.model;
        item["split"] = l.split;
        item["task"] = l.task;
        item["acc"] = l.metrics.acc;
        item["pre"] = l.metrics.pre;
        item["rec"] = l.metrics.rec;
        item["weighted_f1"] = l.metrics.weighted_f1;
        items.push_back(std::move(item));
    }
    summary["reports"] = std::move(items);
    write_json_file(summary, reports_dir(cfg) / "summary.json");
}

void run_verb(const std::string& verb, const PipelineConfig& cfg, std::ostream& log) {
    OutputLock lock(cfg.output_dir);
    if (verb == "ingest") return verb_ingest(cfg, log);
    if (verb == "split") return verb_split(cfg, log);
    if (verb == "annotate-affect") return verb_annotate_affect(cfg, log);
    if (verb == "build") return verb_build(cfg, log);
    if (verb == "run") return verb_run(cfg, log);
    if (verb == "score") return verb_score(cfg, log);
    if (verb == "analyze") return verb_analyze(cfg, log);
    if (verb == "report") return verb_report(cfg, log);
    throw UsageError("unknown verb '" + verb + "'");
}

}  // namespace condid
