#include "condid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace condid {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 5> kScoreFieldNames = {
    "anger_intensity", "fear_intensity", "joy_intensity", "sadness_intensity",
    "sentiment_strength"};

constexpr std::array<std::string_view, 6> kLabelDimensionNames = {
    "anger_class", "fear_class", "joy_class", "sadness_class", "sentiment_class",
    "emotion_set"};

constexpr std::array<std::string_view, 8> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void check_groups(const GroupedProfiles& groups) {
    if (groups.empty()) throw DataError("analysis: no groups");
    for (const auto& [name, profiles] : groups)
        if (profiles.empty()) throw DataError("analysis: group '" + name + "' is empty");
}

std::string num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(12) << v;
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    return out;
}

void write_provenance(std::ofstream& out, std::string_view provenance) {
    if (!provenance.empty()) out << "# " << provenance << '\n';
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0;
    const double idx = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

struct SvgFrame {
    static constexpr double width = 640, height = 400;
    static constexpr double left = 60, right = 610, top = 40, bottom = 350;

    static double x(double frac) { return left + frac * (right - left); }
    static double y(double frac) { return bottom - frac * (bottom - top); }
};

void svg_header(std::ostream& out, std::string_view title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
        << SvgFrame::width << " " << SvgFrame::height << "\">\n";
    out << "<rect width=\"" << SvgFrame::width << "\" height=\"" << SvgFrame::height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << SvgFrame::width / 2
        << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";
    // axes
    out << "<line x1=\"" << SvgFrame::left << "\" y1=\"" << SvgFrame::bottom
        << "\" x2=\"" << SvgFrame::right << "\" y2=\"" << SvgFrame::bottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << SvgFrame::left << "\" y1=\"" << SvgFrame::top << "\" x2=\""
        << SvgFrame::left << "\" y2=\"" << SvgFrame::bottom << "\" stroke=\"black\"/>\n";
}

void svg_legend(std::ostream& out, const std::vector<std::string>& names) {
    double y = SvgFrame::top + 8;
    for (std::size_t g = 0; g < names.size(); ++g) {
        out << "<rect x=\"" << SvgFrame::right - 150 << "\" y=\"" << y - 9
            << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[g % kPalette.size()]
            << "\"/>\n";
        out << "<text x=\"" << SvgFrame::right - 133 << "\" y=\"" << y + 2
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << names[g]
            << "</text>\n";
        y += 18;
    }
}

}  // namespace

std::string_view score_field_name(ScoreField f) {
    return kScoreFieldNames[static_cast<int>(f)];
}

double score_value(const AffectiveProfile& p, ScoreField f) {
    switch (f) {
        case ScoreField::AngerIntensity: return p.ei_scores[0];
        case ScoreField::FearIntensity: return p.ei_scores[1];
        case ScoreField::JoyIntensity: return p.ei_scores[2];
        case ScoreField::SadnessIntensity: return p.ei_scores[3];
        case ScoreField::SentimentStrength: return p.sentiment_strength;
    }
    return 0;
}

double DensitySeries::group_mean(const std::string& group) const {
    auto it = masses.find(group);
    if (it == masses.end()) throw DataError("density: unknown group '" + group + "'");
    double mean = 0;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b)
        mean += it->second[b] * (edges[b] + edges[b + 1]) / 2.0;
    return mean;
}

DensitySeries density(const GroupedProfiles& groups, ScoreField field, int bins) {
    check_groups(groups);
    if (bins < 2 || bins > 1000)
        throw DataError("density: bins must be in [2, 1000], got " + std::to_string(bins));

    DensitySeries s;
    s.field = std::string(score_field_name(field));
    s.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        s.edges[b] = static_cast<double>(b) / static_cast<double>(bins);

    for (const auto& [name, profiles] : groups) {
        std::vector<std::size_t> counts(bins, 0);
        for (const auto& p : profiles) {
            const double v = std::clamp(score_value(p, field), 0.0, 1.0);
            const int idx = std::min(bins - 1, static_cast<int>(std::floor(v * bins)));
            ++counts[idx];
        }
        std::vector<double> mass(bins, 0);
        for (int b = 0; b < bins; ++b)
            mass[b] = static_cast<double>(counts[b]) / static_cast<double>(profiles.size());
        s.counts[name] = std::move(counts);
        s.masses[name] = std::move(mass);
    }
    return s;
}

KdeSeries kde_density(const GroupedProfiles& groups, ScoreField field, int grid_points) {
    check_groups(groups);
    if (grid_points < 2) throw DataError("kde: grid_points must be >= 2");

    KdeSeries s;
    s.field = std::string(score_field_name(field));
    s.grid.resize(grid_points);
    for (int i = 0; i < grid_points; ++i)
        s.grid[i] = static_cast<double>(i) / static_cast<double>(grid_points - 1);

    for (const auto& [name, profiles] : groups) {
        std::vector<double> values;
        values.reserve(profiles.size());
        for (const auto& p : profiles)
            values.push_back(std::clamp(score_value(p, field), 0.0, 1.0));
        std::sort(values.begin(), values.end());

        const double n = static_cast<double>(values.size());
        double mean = 0;
        for (double v : values) mean += v;
        mean /= n;
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        const double sd = values.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        const double iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
        double spread = sd;
        if (iqr > 0) spread = std::min(sd, iqr / 1.34);
        double h = 0.9 * spread * std::pow(n, -0.2);
        if (!(h > 0)) h = 1e-3;  // degenerate (constant) samples

        std::vector<double> density_values(grid_points, 0);
        const double norm = 1.0 / (n * h * std::sqrt(2 * M_PI));
        for (int i = 0; i < grid_points; ++i) {
            double acc = 0;
            for (double v : values) {
                const double z = (s.grid[i] - v) / h;
                acc += std::exp(-0.5 * z * z);
            }
            density_values[i] = norm * acc;
        }
        s.values[name] = std::move(density_values);
        s.bandwidth[name] = h;
    }
    return s;
}

std::string_view label_dimension_name(LabelDimension d) {
    return kLabelDimensionNames[static_cast<int>(d)];
}

LabelDistribution label_distribution(const GroupedProfiles& groups, LabelDimension d) {
    check_groups(groups);

    LabelDistribution out;
    out.dimension = std::string(label_dimension_name(d));
    out.partitioning = d != LabelDimension::EmotionSet;

    switch (d) {
        case LabelDimension::AngerClass:
        case LabelDimension::FearClass:
        case LabelDimension::JoyClass:
        case LabelDimension::SadnessClass:
            for (int i = 0; i < 4; ++i)
                out.labels.push_back(std::string(ordinal_name(static_cast<OrdinalIntensity>(i))));
            break;
        case LabelDimension::SentimentClass:
            for (int i = 0; i < kSentimentClassCount; ++i)
                out.labels.push_back(
                    std::string(sentiment_class_name(static_cast<SentimentClass>(i))));
            break;
        case LabelDimension::EmotionSet:
            for (int i = 0; i < kEmotionCount; ++i)
                out.labels.push_back(std::string(emotion_name(static_cast<Emotion>(i))));
            out.labels.push_back("neutral or no emotion");
            break;
    }

    for (const auto& [name, profiles] : groups) {
        std::map<std::string, double> counts;
        for (const auto& label : out.labels) counts[label] = 0;
        for (const auto& p : profiles) {
            switch (d) {
                case LabelDimension::AngerClass:
                case LabelDimension::FearClass:
                case LabelDimension::JoyClass:
                case LabelDimension::SadnessClass: {
                    const int e = static_cast<int>(d);
                    counts[std::string(ordinal_name(p.ei_classes[e]))] += 1;
                    break;
                }
                case LabelDimension::SentimentClass:
                    counts[std::string(sentiment_class_name(p.sentiment_class))] += 1;
                    break;
                case LabelDimension::EmotionSet:
                    if (p.emotions.empty()) {
                        counts["neutral or no emotion"] += 1;
                    } else {
                        for (Emotion e : p.emotions)
                            counts[std::string(emotion_name(e))] += 1;
                    }
                    break;
            }
        }
        const double n = static_cast<double>(profiles.size());
        for (auto& [label, c] : counts) c /= n;
        out.proportions[name] = std::move(counts);
    }
    return out;
}

GroupedProfiles group_coco_by_intention(const std::vector<CocoRecord>& records,
                                        const std::vector<AffectiveProfile>& profiles) {
    if (records.size() != profiles.size())
        throw DataError("grouping: records/profiles not aligned");
    GroupedProfiles out;
    for (std::size_t i = 0; i < records.size(); ++i)
        out[std::string(intention_name(records[i].overall))].push_back(profiles[i]);
    return out;
}

GroupedProfiles group_coco_by_category(const std::vector<CocoRecord>& records,
                                       const std::vector<AffectiveProfile>& profiles) {
    if (records.size() != profiles.size())
        throw DataError("grouping: records/profiles not aligned");
    GroupedProfiles out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (ConspiracyCategory c :
             derive_mentioned_categories(records[i].category_labels))
            out[std::string(category_display_name(c))].push_back(profiles[i]);
    }
    return out;
}

GroupedProfiles group_loco_by_conspiracy(const std::vector<LocoRecord>& records,
                                         const std::vector<AffectiveProfile>& profiles) {
    if (records.size() != profiles.size())
        throw DataError("grouping: records/profiles not aligned");
    GroupedProfiles out;
    for (std::size_t i = 0; i < records.size(); ++i)
        out[records[i].is_conspiracy ? "conspiracy" : "non-conspiracy"].push_back(
            profiles[i]);
    return out;
}

GroupedProfiles group_loco_by_relatedness(const std::vector<LocoRecord>& records,
                                          const std::vector<AffectiveProfile>& profiles) {
    if (records.size() != profiles.size())
        throw DataError("grouping: records/profiles not aligned");
    GroupedProfiles out;
    for (std::size_t i = 0; i < records.size(); ++i)
        out[std::string(relatedness_name(records[i].relatedness))].push_back(profiles[i]);
    return out;
}

void write_density_csv(const DensitySeries& s, const fs::path& path,
                       std::string_view provenance) {
    auto out = open_out(path);
    write_provenance(out, provenance);
    out << "field,group,bin_index,bin_left,bin_right,count,mass\n";
    for (const auto& [group, masses] : s.masses) {
        const auto& counts = s.counts.at(group);
        for (std::size_t b = 0; b < masses.size(); ++b) {
            out << s.field << ',' << group << ',' << b << ',' << num(s.edges[b]) << ','
                << num(s.edges[b + 1]) << ',' << counts[b] << ',' << num(masses[b])
                << '\n';
        }
    }
}

void write_kde_csv(const KdeSeries& s, const fs::path& path, std::string_view provenance) {
    auto out = open_out(path);
    write_provenance(out, provenance);
    out << "field,group,x,density,bandwidth\n";
    for (const auto& [group, values] : s.values) {
        const double h = s.bandwidth.at(group);
        for (std::size_t i = 0; i < values.size(); ++i)
            out << s.field << ',' << group << ',' << num(s.grid[i]) << ','
                << num(values[i]) << ',' << num(h) << '\n';
    }
}

void write_label_csv(const LabelDistribution& d, const fs::path& path,
                     std::string_view provenance) {
    auto out = open_out(path);
    write_provenance(out, provenance);
    out << "dimension,group,label,proportion\n";
    for (const auto& [group, props] : d.proportions) {
        for (const auto& label : d.labels)
            out << d.dimension << ',' << group << ",\"" << label << "\","
                << num(props.at(label)) << '\n';
    }
}

void write_density_svg(const DensitySeries& s, const fs::path& path,
                       std::string_view title) {
    auto out = open_out(path);
    svg_header(out, title);

    double max_mass = 0;
    for (const auto& [_, masses] : s.masses)
        for (double m : masses) max_mass = std::max(max_mass, m);
    if (max_mass <= 0) max_mass = 1;

    // x tick labels at 0, 0.25, ..., 1
    for (int t = 0; t <= 4; ++t) {
        const double frac = t / 4.0;
        out << "<text x=\"" << SvgFrame::x(frac) << "\" y=\"" << SvgFrame::bottom + 16
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
            << num(frac) << "</text>\n";
    }
    out << "<text x=\"" << SvgFrame::left - 8 << "\" y=\"" << SvgFrame::y(1.0)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
        << num(max_mass) << "</text>\n";

    std::vector<std::string> names;
    std::size_t g = 0;
    for (const auto& [group, masses] : s.masses) {
        names.push_back(group);
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[g % kPalette.size()]
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t b = 0; b < masses.size(); ++b) {
            const double cx = (s.edges[b] + s.edges[b + 1]) / 2.0;
            out << SvgFrame::x(cx) << ',' << SvgFrame::y(masses[b] / max_mass) << ' ';
        }
        out << "\"/>\n";
        ++g;
    }
    svg_legend(out, names);
    out << "</svg>\n";
}

void write_label_svg(const LabelDistribution& d, const fs::path& path,
                     std::string_view title) {
    auto out = open_out(path);
    svg_header(out, title);

    double max_prop = 0;
    for (const auto& [_, props] : d.proportions)
        for (const auto& [__, p] : props) max_prop = std::max(max_prop, p);
    if (max_prop <= 0) max_prop = 1;

    const std::size_t n_labels = d.labels.size();
    const std::size_t n_groups = d.proportions.size();
    const double band = 1.0 / static_cast<double>(n_labels);
    const double bar = band * 0.8 / static_cast<double>(n_groups);

    std::vector<std::string> names;
    std::size_t g = 0;
    for (const auto& [group, props] : d.proportions) {
        names.push_back(group);
        for (std::size_t l = 0; l < n_labels; ++l) {
            const double p = props.at(d.labels[l]);
            const double x0 = SvgFrame::x(band * (static_cast<double>(l) + 0.1) +
                                          bar * static_cast<double>(g));
            const double y1 = SvgFrame::y(p / max_prop);
            out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\""
                << bar * (SvgFrame::right - SvgFrame::left) << "\" height=\""
                << SvgFrame::bottom - y1 << "\" fill=\"" << kPalette[g % kPalette.size()]
                << "\"/>\n";
        }
        ++g;
    }
    for (std::size_t l = 0; l < n_labels; ++l) {
        out << "<text x=\"" << SvgFrame::x(band * (static_cast<double>(l) + 0.5))
            << "\" y=\"" << SvgFrame::bottom + 16
            << "\" text-anchor=\"middle\" font-size=\"9\" font-family=\"sans-serif\">"
            << d.labels[l] << "</text>\n";
    }
    svg_legend(out, names);
    out << "</svg>\n";
}

}  // namespace condid
