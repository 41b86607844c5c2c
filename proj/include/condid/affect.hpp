// Five-dimension affective profiles: acquisition (remote model or cache),
// per-dimension response parsing, and rendering of the affective prompt
// block appended to task prompts.
#pragma once

#include "condid/backend.hpp"
#include "condid/common.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace condid {

enum class EiEmotion : int { Anger = 0, Fear, Joy, Sadness };
inline constexpr int kEiEmotionCount = 4;
std::string_view ei_emotion_name(EiEmotion e);

enum class OrdinalIntensity : int { No = 0, Low, Moderate, High };
std::string_view ordinal_name(OrdinalIntensity o);  // "no"/"low"/"moderate"/"high"
std::optional<OrdinalIntensity> ordinal_from_string(std::string_view s);

enum class SentimentClass : int {
    VeryNegative = 0,
    ModeratelyNegative,
    SlightlyNegative,
    Neutral,
    SlightlyPositive,
    ModeratelyPositive,
    VeryPositive,
};
inline constexpr int kSentimentClassCount = 7;
std::string_view sentiment_class_name(SentimentClass c);  // "very negative" ... "neutral" ...
std::optional<SentimentClass> sentiment_class_from_string(std::string_view s);
// "... mental state can be inferred" phrase used in the rendered block.
std::string sentiment_class_phrase(SentimentClass c);

enum class Emotion : int {
    Anger = 0,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Love,
    Optimism,
    Pessimism,
    Sadness,
    Surprise,
    Trust,
};
inline constexpr int kEmotionCount = 11;
std::string_view emotion_name(Emotion e);
std::optional<Emotion> emotion_from_string(std::string_view s);

struct AffectiveProfile {
    std::array<double, kEiEmotionCount> ei_scores{};  // each in [0,1]
    std::array<OrdinalIntensity, kEiEmotionCount> ei_classes{};
    double sentiment_strength = 0.5;  // 0 most negative, 1 most positive
    SentimentClass sentiment_class = SentimentClass::Neutral;
    // Empty set means "neutral or no emotion".
    std::set<Emotion> emotions;

    bool operator==(const AffectiveProfile&) const = default;
};

// Clamps out-of-range scores into [0,1]; one warning per adjusted field.
WarningList clamp_profile(AffectiveProfile& p);

enum class AffectDimension : int {
    EiScores = 0,
    EiClasses,
    SentimentStrength,
    SentimentClass,
    EmotionSet,
};
inline constexpr int kAffectDimensionCount = 5;
std::string_view affect_dimension_key(AffectDimension d);

struct AffectParseError : DataError {
    AffectParseError(AffectDimension dim, const std::string& what, std::string raw_payload);
    AffectDimension dimension;
    std::string raw;
};

// Per-dimension parsers over free-text model output. Partial results are
// allowed for the two per-emotion maps; profile assembly enforces totality.
std::map<EiEmotion, double> parse_ei_scores(std::string_view raw);
std::map<EiEmotion, OrdinalIntensity> parse_ei_classes(std::string_view raw);
double parse_sentiment_strength(std::string_view raw);
SentimentClass parse_sentiment_class(std::string_view raw);
std::set<Emotion> parse_emotion_set(std::string_view raw);  // empty = neutral

// Assembles a profile from the five raw dimension responses; throws
// AffectParseError if any required component is missing. Out-of-range
// scores are clamped; warnings appended to `warnings` when non-null.
AffectiveProfile assemble_profile(const std::array<std::string, kAffectDimensionCount>& raws,
                                  WarningList* warnings = nullptr);

// Rendering of the Table-style affective block:
//   (1) Emotion intensity: ... (5) The emotions included are: ...
std::string render_ei_scores(const AffectiveProfile& p);
std::string render_ei_classes(const AffectiveProfile& p);
std::string render_emotion_list(const AffectiveProfile& p);
std::string format_affective_block(const AffectiveProfile& p);

// Sentence that introduces the block when a task prompt is augmented.
inline constexpr std::string_view kAffectiveLeadIn =
    "You can also refer to the affective information. ";

// Editable per-dimension query prompts sent to the affective model.
// "{text}" is replaced with the text under analysis.
struct DimensionPrompts {
    std::array<std::string, kAffectDimensionCount> templates;
    static DimensionPrompts defaults();
    std::string render(AffectDimension d, std::string_view text) const;
};

class AffectProvider {
public:
    virtual ~AffectProvider() = default;
    // May throw BackendError (unreachable) or AffectParseError. Clamp
    // warnings are appended to `warnings` when non-null.
    virtual AffectiveProfile analyze(const std::string& text, WarningList* warnings) = 0;
    virtual std::string describe() const = 0;
};

// Queries a chat-completion endpoint once per dimension and assembles the
// five parses into a profile.
class RemoteAffectProvider : public AffectProvider {
public:
    RemoteAffectProvider(BackendConfig cfg, DimensionPrompts prompts);
    AffectiveProfile analyze(const std::string& text, WarningList* warnings) override;
    std::string describe() const override;

private:
    BackendConfig cfg_;
    DimensionPrompts prompts_;
};

// Deterministic text-hash-derived profiles for offline pipelines and tests.
class SyntheticAffectProvider : public AffectProvider {
public:
    AffectiveProfile analyze(const std::string& text, WarningList* warnings) override;
    std::string describe() const override { return "synthetic"; }
};

// Turns every cache miss into an error; used when a verb requires a fully
// warmed cache instead of a live backend.
class CacheOnlyProvider : public AffectProvider {
public:
    AffectiveProfile analyze(const std::string& text, WarningList* warnings) override;
    std::string describe() const override { return "cache-only"; }
};

// Key for the profile cache: content hash of the trimmed text, so texts
// with identical bodies share one profile.
std::string profile_cache_key(std::string_view text);

struct AcquireItem {
    std::string id;
    std::string text;
};

struct AcquireResult {
    std::vector<AffectiveProfile> profiles;  // input order
    WarningList warnings;
    std::size_t provider_calls = 0;
    std::size_t cache_hits = 0;
};

// One profile per item, input order preserved. Hits come from the cache
// file; misses go to the provider (fanned out over `parallelism` workers)
// and are appended to the cache as complete lines, single-writer.
AcquireResult acquire_profiles(const std::vector<AcquireItem>& items,
                               AffectProvider& provider,
                               const std::filesystem::path& cache_path,
                               int parallelism = 1);

struct ProfileCacheEntry {
    std::string key;
    std::string text_id;
    AffectiveProfile profile;
};

std::vector<ProfileCacheEntry> load_profile_cache(const std::filesystem::path& path);

}  // namespace condid
