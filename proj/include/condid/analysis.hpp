// Affective distribution analyses: per-group score densities and label
// distributions, exported as CSV data plus simple SVG plots.
#pragma once

#include "condid/affect.hpp"
#include "condid/corpus.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace condid {

// Groups are disjoint by construction: each stored profile belongs to
// exactly one key.
using GroupedProfiles = std::map<std::string, std::vector<AffectiveProfile>>;

enum class ScoreField : int {
    AngerIntensity = 0,
    FearIntensity,
    JoyIntensity,
    SadnessIntensity,
    SentimentStrength,
};
inline constexpr std::array<ScoreField, 5> kAllScoreFields = {
    ScoreField::AngerIntensity, ScoreField::FearIntensity, ScoreField::JoyIntensity,
    ScoreField::SadnessIntensity, ScoreField::SentimentStrength};

std::string_view score_field_name(ScoreField f);  // "anger_intensity" ...
double score_value(const AffectiveProfile& p, ScoreField f);

struct DensitySeries {
    std::string field;
    std::vector<double> edges;  // bins+1 equal-width edges over [0,1]
    std::map<std::string, std::vector<std::size_t>> counts;
    std::map<std::string, std::vector<double>> masses;  // normalized per group

    // Mass-weighted mean of bin centers for one group.
    double group_mean(const std::string& group) const;
};

// Equal-width histogram over [0,1], normalized per group. 2 <= bins <= 1000;
// every group must be non-empty.
DensitySeries density(const GroupedProfiles& groups, ScoreField field, int bins);

// Gaussian-kernel smoothing on a uniform grid, bandwidth by Silverman's
// rule; plotting aid next to the canonical histogram data.
struct KdeSeries {
    std::string field;
    std::vector<double> grid;
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, double> bandwidth;
};
KdeSeries kde_density(const GroupedProfiles& groups, ScoreField field,
                      int grid_points = 200);

enum class LabelDimension : int {
    AngerClass = 0,
    FearClass,
    JoyClass,
    SadnessClass,
    SentimentClass,
    EmotionSet,
};
inline constexpr std::array<LabelDimension, 6> kAllLabelDimensions = {
    LabelDimension::AngerClass,    LabelDimension::FearClass,
    LabelDimension::JoyClass,      LabelDimension::SadnessClass,
    LabelDimension::SentimentClass, LabelDimension::EmotionSet};

std::string_view label_dimension_name(LabelDimension d);

struct LabelDistribution {
    std::string dimension;
    // Partitioning dimensions sum to 1 per group; the emotion-set dimension
    // reports per-label incidence rates instead.
    bool partitioning = true;
    std::vector<std::string> labels;  // fixed value order
    std::map<std::string, std::map<std::string, double>> proportions;
};

LabelDistribution label_distribution(const GroupedProfiles& groups, LabelDimension d);

// Grouping helpers. Profiles must be aligned 1:1 with records.
GroupedProfiles group_coco_by_intention(const std::vector<CocoRecord>& records,
                                        const std::vector<AffectiveProfile>& profiles);
// A tweet mentioning several categories contributes a profile copy to each.
GroupedProfiles group_coco_by_category(const std::vector<CocoRecord>& records,
                                       const std::vector<AffectiveProfile>& profiles);
GroupedProfiles group_loco_by_conspiracy(const std::vector<LocoRecord>& records,
                                         const std::vector<AffectiveProfile>& profiles);
GroupedProfiles group_loco_by_relatedness(const std::vector<LocoRecord>& records,
                                          const std::vector<AffectiveProfile>& profiles);

// CSV: one row per (group, bin/label, value). A non-empty provenance string
// becomes a leading "# ..." comment line.
void write_density_csv(const DensitySeries& s, const std::filesystem::path& path,
                       std::string_view provenance = "");
void write_kde_csv(const KdeSeries& s, const std::filesystem::path& path,
                   std::string_view provenance = "");
void write_label_csv(const LabelDistribution& d, const std::filesystem::path& path,
                     std::string_view provenance = "");

void write_density_svg(const DensitySeries& s, const std::filesystem::path& path,
                       std::string_view title);
void write_label_svg(const LabelDistribution& d, const std::filesystem::path& path,
                     std::string_view title);

}  // namespace condid
