#include "condid/affect.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

namespace condid {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kEiEmotionCount> kEiNames = {
    "anger", "fear", "joy", "sadness"};

constexpr std::array<std::string_view, 4> kOrdinalNames = {"no", "low", "moderate", "high"};

constexpr std::array<std::string_view, kSentimentClassCount> kSentimentNames = {
    "very negative",     "moderately negative", "slightly negative", "neutral",
    "slightly positive", "moderately positive", "very positive"};

constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "anger", "anticipation", "disgust", "fear",     "joy",  "love",
    "optimism", "pessimism",  "sadness", "surprise", "trust"};

constexpr std::array<std::string_view, kAffectDimensionCount> kDimensionKeys = {
    "emotion_intensity", "emotion_intensity_class", "sentiment_strength",
    "sentiment_class", "emotion_detection"};

constexpr std::string_view kNeutralEmotionPhrase = "neutral or no emotion";

// First parseable real number at or after `from`; npos result if none.
std::optional<double> first_number(std::string_view s, std::size_t from = 0) {
    for (std::size_t i = from; i < s.size(); ++i) {
        const char c = s[i];
        const bool digit = c >= '0' && c <= '9';
        const bool dot_digit =
            c == '.' && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '9';
        if (!digit && !dot_digit) continue;
        std::size_t start = i;
        if (start > from && (s[start - 1] == '-' || s[start - 1] == '+')) --start;
        const std::string token(s.substr(start, 64));
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str()) return v;
    }
    return std::nullopt;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads the word ending just before `pos`, allowing only whitespace between
// the word and `pos`. Returns word and its start.
std::optional<std::pair<std::string, std::size_t>> word_before(const std::string& s,
                                                               std::size_t pos) {
    std::size_t e = pos;
    while (e > 0 && is_space(s[e - 1])) --e;
    if (e == 0) return std::nullopt;
    if (!std::isalnum(static_cast<unsigned char>(s[e - 1]))) return std::nullopt;
    std::size_t b = e;
    while (b > 0 && std::isalnum(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::make_pair(s.substr(b, e - b), b);
}

std::optional<OrdinalIntensity> ordinal_word(const std::string& w) {
    for (int i = 0; i < 4; ++i)
        if (w == kOrdinalNames[i]) return static_cast<OrdinalIntensity>(i);
    return std::nullopt;
}

// Ordinal for one emotion occurrence. Phrase form binds with whitespace only
// ("no joy", "low amount of fear"); key-value form allows ':'/'='/'-' after
// the emotion name ("anger: moderate"). The asymmetry keeps "fear: low,
// anger: moderate" from binding anger to the preceding "low".
std::optional<OrdinalIntensity> ordinal_at_occurrence(const std::string& s,
                                                      std::size_t pos, std::size_t end) {
    if (auto prev = word_before(s, pos)) {
        if (auto ord = ordinal_word(prev->first)) return ord;
        if (prev->first == "of") {
            if (auto amount = word_before(s, prev->second)) {
                if (amount->first == "amount") {
                    if (auto ord_w = word_before(s, amount->second)) {
                        if (auto ord = ordinal_word(ord_w->first)) return ord;
                    }
                }
            }
        }
    }
    std::size_t i = end;
    int seps = 0;
    while (i < s.size() && (is_space(s[i]) || s[i] == ':' || s[i] == '=' || s[i] == '-') &&
           seps < 8) {
        ++i;
        ++seps;
    }
    std::size_t b = i;
    while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
    std::string w = s.substr(b, i - b);
    if (w == "is" || w == "was") {
        while (i < s.size() && is_space(s[i])) ++i;
        b = i;
        while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
        w = s.substr(b, i - b);
    }
    return ordinal_word(w);
}

std::string ordinal_phrase(OrdinalIntensity o, std::string_view emotion) {
    if (o == OrdinalIntensity::No)
        return "no " + std::string(emotion) + " can be inferred";
    return std::string(ordinal_name(o)) + " amount of " + std::string(emotion) +
           " can be inferred";
}

ojson profile_to_json(const AffectiveProfile& p) {
    ojson scores, classes;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        scores[std::string(kEiNames[i])] = p.ei_scores[i];
        classes[std::string(kEiNames[i])] = std::string(ordinal_name(p.ei_classes[i]));
    }
    ojson j;
    j["ei_scores"] = scores;
    j["ei_classes"] = classes;
    j["sentiment_strength"] = p.sentiment_strength;
    j["sentiment_class"] = std::string(sentiment_class_name(p.sentiment_class));
    ojson emos = ojson::array();
    for (Emotion e : p.emotions) emos.push_back(std::string(emotion_name(e)));
    j["emotions"] = emos;
    return j;
}

AffectiveProfile profile_from_json(const ojson& j, const std::string& where) {
    AffectiveProfile p;
    if (!j.contains("ei_scores") || !j.contains("ei_classes") ||
        !j.contains("sentiment_strength") || !j.contains("sentiment_class") ||
        !j.contains("emotions"))
        throw DataError(where + ": profile object missing required fields");
    for (int i = 0; i < kEiEmotionCount; ++i) {
        const std::string name(kEiNames[i]);
        if (!j["ei_scores"].contains(name))
            throw DataError(where + ": ei_scores missing '" + name + "'");
        p.ei_scores[i] = j["ei_scores"][name].get<double>();
        if (!j["ei_classes"].contains(name))
            throw DataError(where + ": ei_classes missing '" + name + "'");
        auto ord = ordinal_from_string(j["ei_classes"][name].get<std::string>());
        if (!ord) throw DataError(where + ": bad ordinal for '" + name + "'");
        p.ei_classes[i] = *ord;
    }
    p.sentiment_strength = j["sentiment_strength"].get<double>();
    auto sc = sentiment_class_from_string(j["sentiment_class"].get<std::string>());
    if (!sc) throw DataError(where + ": bad sentiment_class");
    p.sentiment_class = *sc;
    for (const auto& e : j["emotions"]) {
        const std::string name = e.get<std::string>();
        if (normalize_for_match(name) == kNeutralEmotionPhrase) continue;
        auto emo = emotion_from_string(name);
        if (!emo) throw DataError(where + ": unknown emotion '" + name + "'");
        p.emotions.insert(*emo);
    }
    return p;
}

}  // namespace

std::string_view ei_emotion_name(EiEmotion e) { return kEiNames[static_cast<int>(e)]; }

std::string_view ordinal_name(OrdinalIntensity o) { return kOrdinalNames[static_cast<int>(o)]; }

std::optional<OrdinalIntensity> ordinal_from_string(std::string_view s) {
    return ordinal_word(to_lower(trim(s)));
}

std::string_view sentiment_class_name(SentimentClass c) {
    return kSentimentNames[static_cast<int>(c)];
}

std::optional<SentimentClass> sentiment_class_from_string(std::string_view s) {
    const std::string v = normalize_for_match(s);
    for (int i = 0; i < kSentimentClassCount; ++i)
        if (v == kSentimentNames[i]) return static_cast<SentimentClass>(i);
    if (v == "neutral or mixed") return SentimentClass::Neutral;
    return std::nullopt;
}

std::string sentiment_class_phrase(SentimentClass c) {
    if (c == SentimentClass::Neutral)
        return "neutral or mixed mental state can be inferred";
    return std::string(sentiment_class_name(c)) + " mental state can be inferred";
}

std::string_view emotion_name(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

std::optional<Emotion> emotion_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    for (int i = 0; i < kEmotionCount; ++i)
        if (v == kEmotionNames[i]) return static_cast<Emotion>(i);
    return std::nullopt;
}

WarningList clamp_profile(AffectiveProfile& p) {
    WarningList warnings;
    auto clamp_one = [&warnings](double& v, const std::string& field) {
        if (!std::isfinite(v)) {
            warnings.push_back(field + " is not finite; clamped to 0");
            v = 0.0;
        } else if (v < 0.0) {
            warnings.push_back(field + " = " + format_score(v) + " below 0; clamped");
            v = 0.0;
        } else if (v > 1.0) {
            warnings.push_back(field + " = " + format_score(v) + " above 1; clamped");
            v = 1.0;
        }
    };
    for (int i = 0; i < kEiEmotionCount; ++i)
        clamp_one(p.ei_scores[i], std::string(kEiNames[i]) + " intensity");
    clamp_one(p.sentiment_strength, "sentiment strength");
    return warnings;
}

std::string_view affect_dimension_key(AffectDimension d) {
    return kDimensionKeys[static_cast<int>(d)];
}

AffectParseError::AffectParseError(AffectDimension dim, const std::string& what,
                                   std::string raw_payload)
    : DataError(std::string(affect_dimension_key(dim)) + ": " + what +
                " (raw response: \"" + raw_payload + "\")"),
      dimension(dim),
      raw(std::move(raw_payload)) {}

std::map<EiEmotion, double> parse_ei_scores(std::string_view raw) {
    const std::string low = to_lower(raw);
    std::map<EiEmotion, double> out;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        const auto pos = find_word(low, kEiNames[i]);
        if (pos == std::string_view::npos) continue;
        if (auto v = first_number(low, pos + kEiNames[i].size()))
            out[static_cast<EiEmotion>(i)] = *v;
    }
    if (out.empty())
        throw AffectParseError(AffectDimension::EiScores,
                               "no emotion score found", std::string(raw));
    return out;
}

std::map<EiEmotion, OrdinalIntensity> parse_ei_classes(std::string_view raw) {
    const std::string low = to_lower(raw);
    std::map<EiEmotion, OrdinalIntensity> out;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        const std::string_view name = kEiNames[i];
        std::size_t pos = 0;
        while ((pos = find_word(low, name, pos)) != std::string_view::npos) {
            if (auto ord = ordinal_at_occurrence(low, pos, pos + name.size())) {
                out[static_cast<EiEmotion>(i)] = *ord;
                break;
            }
            pos += name.size();
        }
    }
    if (out.empty())
        throw AffectParseError(AffectDimension::EiClasses,
                               "no ordinal intensity class found", std::string(raw));
    return out;
}

double parse_sentiment_strength(std::string_view raw) {
    if (auto v = first_number(raw)) return *v;
    throw AffectParseError(AffectDimension::SentimentStrength,
                           "no numeric score found", std::string(raw));
}

SentimentClass parse_sentiment_class(std::string_view raw) {
    const std::string norm = normalize_for_match(raw);
    std::size_t best_pos = std::string_view::npos;
    std::optional<SentimentClass> best;
    for (int i = 0; i < kSentimentClassCount; ++i) {
        if (static_cast<SentimentClass>(i) == SentimentClass::Neutral) continue;
        const auto pos = find_word(norm, kSentimentNames[i]);
        if (pos != std::string_view::npos && pos < best_pos) {
            best_pos = pos;
            best = static_cast<SentimentClass>(i);
        }
    }
    if (best) return *best;
    if (find_word(norm, "neutral") != std::string_view::npos) return SentimentClass::Neutral;
    throw AffectParseError(AffectDimension::SentimentClass,
                           "no sentiment class found", std::string(raw));
}

std::set<Emotion> parse_emotion_set(std::string_view raw) {
    const std::string low = to_lower(raw);
    std::set<Emotion> out;
    for (int i = 0; i < kEmotionCount; ++i)
        if (find_word(low, kEmotionNames[i]) != std::string_view::npos)
            out.insert(static_cast<Emotion>(i));
    if (!out.empty()) return out;
    if (find_word(low, "neutral") != std::string_view::npos) return out;  // empty = neutral
    throw AffectParseError(AffectDimension::EmotionSet,
                           "no emotion label found", std::string(raw));
}

AffectiveProfile assemble_profile(const std::array<std::string, kAffectDimensionCount>& raws,
                                  WarningList* warnings) {
    AffectiveProfile p;
    const auto scores = parse_ei_scores(raws[0]);
    const auto classes = parse_ei_classes(raws[1]);
    for (int i = 0; i < kEiEmotionCount; ++i) {
        const auto e = static_cast<EiEmotion>(i);
        auto s = scores.find(e);
        if (s == scores.end())
            throw AffectParseError(AffectDimension::EiScores,
                                   "missing score for '" + std::string(kEiNames[i]) + "'",
                                   raws[0]);
        p.ei_scores[i] = s->second;
        auto c = classes.find(e);
        if (c == classes.end())
            throw AffectParseError(AffectDimension::EiClasses,
                                   "missing class for '" + std::string(kEiNames[i]) + "'",
                                   raws[1]);
        p.ei_classes[i] = c->second;
    }
    p.sentiment_strength = parse_sentiment_strength(raws[2]);
    p.sentiment_class = parse_sentiment_class(raws[3]);
    p.emotions = parse_emotion_set(raws[4]);
    auto clamp_warnings = clamp_profile(p);
    if (warnings)
        warnings->insert(warnings->end(), clamp_warnings.begin(), clamp_warnings.end());
    return p;
}

std::string render_ei_scores(const AffectiveProfile& p) {
    std::string out;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        if (i > 0) out += ", ";
        out += std::string(kEiNames[i]) + ": " + format_score(p.ei_scores[i]);
    }
    return out;
}

std::string render_ei_classes(const AffectiveProfile& p) {
    std::string out;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        if (i > 0) out += " ";
        out += ordinal_phrase(p.ei_classes[i], kEiNames[i]) + ".";
    }
    return out;
}

std::string render_emotion_list(const AffectiveProfile& p) {
    if (p.emotions.empty()) return std::string(kNeutralEmotionPhrase);
    std::string out;
    bool first = true;
    for (Emotion e : p.emotions) {
        if (!first) out += ", ";
        out += std::string(emotion_name(e));
        first = false;
    }
    return out;
}

std::string format_affective_block(const AffectiveProfile& p) {
    std::string out = "(1) Emotion intensity: ";
    out += render_ei_scores(p);
    out += ". (2) Ordinal classification of emotion intensity: ";
    out += render_ei_classes(p);
    out += " (3) Sentiment intensity: ";
    out += format_score(p.sentiment_strength);
    out += ". (4) Sentiment classification: ";
    out += sentiment_class_phrase(p.sentiment_class);
    out += ". (5) The emotions included are: ";
    out += render_emotion_list(p);
    out += ".";
    return out;
}

DimensionPrompts DimensionPrompts::defaults() {
    DimensionPrompts p;
    p.templates[0] =
        "Assign a real-valued score between 0 (least) and 1 (most) for the intensity "
        "of each of the following emotions in the text: anger, fear, joy, sadness. "
        "Answer in the format: anger: <score>, fear: <score>, joy: <score>, "
        "sadness: <score>.\nText: {text}";
    p.templates[1] =
        "Classify the intensity of anger, fear, joy and sadness expressed in the text "
        "into one of four ordinal classes: no, low, moderate, high. Answer with one "
        "sentence per emotion in the format: <class> amount of <emotion> can be "
        "inferred.\nText: {text}";
    p.templates[2] =
        "Assign a real-valued score between 0 (most negative) and 1 (most positive) "
        "for the sentiment intensity of the text. Answer with the score only.\n"
        "Text: {text}";
    p.templates[3] =
        "Classify the sentiment of the text into one of seven ordinal classes: very "
        "negative, moderately negative, slightly negative, neutral or mixed, slightly "
        "positive, moderately positive, very positive. Answer in the format: <class> "
        "mental state can be inferred.\nText: {text}";
    p.templates[4] =
        "Identify which of the following emotions are expressed in the text: anger, "
        "anticipation, disgust, fear, joy, love, optimism, pessimism, sadness, "
        "surprise, trust. Answer with a comma-separated list, or 'neutral or no "
        "emotion' if none applies.\nText: {text}";
    return p;
}

std::string DimensionPrompts::render(AffectDimension d, std::string_view text) const {
    std::string out = templates[static_cast<int>(d)];
    const std::string placeholder = "{text}";
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
        out.replace(pos, placeholder.size(), text);
        pos += text.size();
    }
    return out;
}

RemoteAffectProvider::RemoteAffectProvider(BackendConfig cfg, DimensionPrompts prompts)
    : cfg_(std::move(cfg)), prompts_(std::move(prompts)) {}

AffectiveProfile RemoteAffectProvider::analyze(const std::string& text,
                                               WarningList* warnings) {
    std::array<std::string, kAffectDimensionCount> raws;
    for (int d = 0; d < kAffectDimensionCount; ++d) {
        const auto dim = static_cast<AffectDimension>(d);
        const auto result = execute_completion(cfg_, prompts_.render(dim, text));
        if (!result.ok)
            throw BackendError("affective backend failed on dimension '" +
                               std::string(affect_dimension_key(dim)) +
                               "': " + result.error);
        raws[d] = result.text;
    }
    return assemble_profile(raws, warnings);
}

std::string RemoteAffectProvider::describe() const {
    return "remote(" + cfg_.endpoint + ", " + cfg_.model + ")";
}

AffectiveProfile SyntheticAffectProvider::analyze(const std::string& text,
                                                  WarningList* /*warnings*/) {
    const std::uint64_t h = fnv1a64(trim(text));
    auto bits = [h](int shift, std::uint64_t mask) { return (h >> shift) & mask; };
    AffectiveProfile p;
    for (int i = 0; i < kEiEmotionCount; ++i) {
        const double v = static_cast<double>(bits(i * 10, 0x3FF)) / 1023.0;
        p.ei_scores[i] = v;
        p.ei_classes[i] = v < 0.25   ? OrdinalIntensity::No
                          : v < 0.5  ? OrdinalIntensity::Low
                          : v < 0.75 ? OrdinalIntensity::Moderate
                                     : OrdinalIntensity::High;
    }
    p.sentiment_strength = static_cast<double>(bits(40, 0x3FF)) / 1023.0;
    p.sentiment_class = static_cast<SentimentClass>(std::min<int>(
        kSentimentClassCount - 1,
        static_cast<int>(p.sentiment_strength * kSentimentClassCount)));
    for (int i = 0; i < kEmotionCount; ++i)
        if (bits(50 + i, 1) != 0) p.emotions.insert(static_cast<Emotion>(i));
    return p;
}

AffectiveProfile CacheOnlyProvider::analyze(const std::string& text, WarningList*) {
    throw BackendError("profile cache miss for text (key " + profile_cache_key(text) +
                       "); run annotate-affect first");
}

std::string profile_cache_key(std::string_view text) {
    // Trimmed content hash. Inputs are assumed NFC-normalized upstream;
    // no Unicode normalization is applied here.
    return fnv1a64_hex(trim(text));
}

std::vector<ProfileCacheEntry> load_profile_cache(const fs::path& path) {
    std::vector<ProfileCacheEntry> out;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profile cache: " + path.string());
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
        ProfileCacheEntry entry;
        if (!j.contains("key") || !j["key"].is_string())
            throw DataError(where + ": missing 'key'");
        entry.key = j["key"].get<std::string>();
        entry.text_id = j.value("text_id", std::string());
        entry.profile = profile_from_json(j, where);
        out.push_back(std::move(entry));
    }
    return out;
}

AcquireResult acquire_profiles(const std::vector<AcquireItem>& items,
                               AffectProvider& provider, const fs::path& cache_path,
                               int parallelism) {
    AcquireResult result;
    result.profiles.resize(items.size());

    std::map<std::string, AffectiveProfile> cached;
    if (fs::exists(cache_path)) {
        for (auto& entry : load_profile_cache(cache_path))
            cached[entry.key] = entry.profile;
    } else if (!cache_path.parent_path().empty()) {
        fs::create_directories(cache_path.parent_path());
    }

    std::vector<std::string> keys(items.size());
    // Unique missing keys, first-seen order; duplicates share one call.
    std::vector<std::size_t> miss_indices;
    std::map<std::string, std::size_t> miss_by_key;
    for (std::size_t i = 0; i < items.size(); ++i) {
        keys[i] = profile_cache_key(items[i].text);
        if (cached.count(keys[i])) {
            ++result.cache_hits;
        } else if (!miss_by_key.count(keys[i])) {
            miss_by_key[keys[i]] = miss_indices.size();
            miss_indices.push_back(i);
        }
    }

    struct MissSlot {
        std::optional<AffectiveProfile> profile;
        std::exception_ptr error;
        WarningList warnings;
    };
    std::vector<MissSlot> slots(miss_indices.size());

    if (!miss_indices.empty()) {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        const int workers =
            std::max(1, std::min<int>(parallelism, static_cast<int>(miss_indices.size())));
        auto work = [&] {
            while (true) {
                const std::size_t slot = next.fetch_add(1);
                if (slot >= miss_indices.size() || failed.load()) return;
                const auto& item = items[miss_indices[slot]];
                try {
                    slots[slot].profile = provider.analyze(item.text, &slots[slot].warnings);
                } catch (...) {
                    slots[slot].error = std::current_exception();
                    failed.store(true);
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        result.provider_calls =
            std::count_if(slots.begin(), slots.end(), [](const MissSlot& s) {
                return s.profile.has_value() || s.error != nullptr;
            });

        // Single-writer append: each completed profile becomes one whole
        // line before any error is rethrown, so a failed run never leaves
        // a truncated entry behind.
        std::ofstream app(cache_path, std::ios::binary | std::ios::app);
        if (!app) throw DataError("cannot open profile cache for append: " +
                                  cache_path.string());
        for (std::size_t slot = 0; slot < slots.size(); ++slot) {
            const auto& item = items[miss_indices[slot]];
            auto& s = slots[slot];
            for (auto& w : s.warnings)
                result.warnings.push_back("text '" + item.id + "': " + w);
            if (s.error) {
                try {
                    std::rethrow_exception(s.error);
                } catch (const BackendError& e) {
                    throw BackendError("text '" + item.id + "': " + e.what());
                } catch (const DataError& e) {
                    throw DataError("text '" + item.id + "': " + e.what());
                }
            }
            if (!s.profile) continue;  // scheduling stopped after a failure
            ojson j;
            j["key"] = keys[miss_indices[slot]];
            j["text_id"] = item.id;
            for (auto& [k, v] : profile_to_json(*s.profile).items()) j[k] = v;
            app << j.dump() << '\n';
            app.flush();
            cached[keys[miss_indices[slot]]] = *s.profile;
        }
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
        auto it = cached.find(keys[i]);
        if (it == cached.end())
            throw DataError("no profile available for text '" + items[i].id + "'");
        result.profiles[i] = it->second;
    }
    return result;
}

}  // namespace condid
