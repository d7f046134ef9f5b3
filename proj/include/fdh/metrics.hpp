#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "events.hpp"
#include "judge.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "script.hpp"

namespace fdh {

// Even-sized lists take the mean of the two middle values; empty lists
// have no median.
std::optional<double> median(std::vector<double> values);

// 100 * num / den rounded to one decimal; absent when den is zero.
std::optional<double> rate_percent(long num, long den);

// Per-reply quality inputs, keyed by the user segment the reply answers.
struct QualityRecord {
    std::string session_id;
    int segment_index = 0;
    std::optional<SubjectiveScore> subjective;
    std::optional<double> c_ppl;
    std::optional<std::string> wer_reference;   // the model's text output
    std::optional<std::string> wer_hypothesis;  // ASR of the model's speech
};

QualityRecord quality_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QualityRecord& q);
// One JSON object per line.
std::vector<QualityRecord> load_quality(const std::filesystem::path& path);

struct ReportCounts {
    long non_interrupt_inquiries = 0, interrupt_inquiries = 0, all_inquiries = 0, noise_gaps = 0;
    long SR = 0, MR = 0, SI = 0, FI = 0, SRI = 0, MRI = 0, EI = 0, NI = 0;

    bool operator==(const ReportCounts&) const = default;
};

struct Rates {
    std::optional<double> SRR, SIR, SRIR, EIR, NIR;

    bool operator==(const Rates&) const = default;
};

struct Timings {
    std::optional<double> IRD, FSED, ERT, EIT;  // medians in ms
    std::vector<Milliseconds> IRD_values, FSED_values, ERT_values, EIT_values;

    bool operator==(const Timings&) const = default;
};

struct SubjectiveSummary {
    std::map<std::string, double> dimension_means;
    double overall = 0.0;  // mean of the six dimension means
    int replies = 0;

    bool operator==(const SubjectiveSummary&) const = default;
};

struct TypeBreakdown {
    long interrupts = 0, SI = 0, SRI = 0;
    std::optional<double> SIR, SRIR;

    bool operator==(const TypeBreakdown&) const = default;
};

struct MetricReport {
    std::string model;
    std::string dataset;
    ReportCounts counts;
    Rates rates;
    Timings timings;
    std::optional<double> wer_percent;
    std::optional<double> c_ppl;
    std::optional<SubjectiveSummary> subjective;
    std::map<char, TypeBreakdown> per_type;  // keyed by 'A'..'S'; absent types omitted

    bool operator==(const MetricReport&) const = default;
};

// Per-type SIR and SRIR. An interrupt with two labels counts in both
// types. Denominators are the eligible interrupts (those with a
// SuccessInterrupt or FailedInterrupt event).
std::map<char, TypeBreakdown> breakdown_by_type(const std::vector<SessionEvents>& sessions,
                                                const std::map<std::string, SessionManifest>& manifests);

// Counts, rates and median timings over every session. Quality records
// contribute pooled WER; subjective scores and c-PPL only count for
// segments that received a SuccessReply or SuccessReplyToInterrupt. With
// manifests, the per-type breakdown is filled in as well.
MetricReport aggregate(const std::vector<SessionEvents>& sessions, const std::vector<QualityRecord>& quality = {},
                       const std::map<std::string, SessionManifest>* manifests = nullptr);

nlohmann::json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);
// Accepts a single report object or a list of them.
std::vector<MetricReport> load_reports(const std::filesystem::path& path);

// Column order of the results table.
inline const std::vector<std::string> kReportColumns = {
    "WER", "SRR", "SRIR", "SIR", "EIR", "IRD", "FSED", "ERT", "EIT", "C-PPL", "Score"};

// Formatted cell for a column: rates with one decimal, timings as integer
// ms, "-" when absent.
std::string report_cell(const MetricReport& r, const std::string& column);

std::string render_csv(const std::vector<MetricReport>& reports);
// NIR is shown after EIR when any report covers noise gaps.
std::string render_markdown(const std::vector<MetricReport>& reports);
// Grouped bar chart, one group per interruption type and one bar per report.
// `metric` is "SIR" or "SRIR".
std::string render_type_svg(const std::vector<MetricReport>& reports, const std::string& metric);

// Writes report.json, report.csv and report.md into `dir`.
void write_report_files(const std::filesystem::path& dir, const std::vector<MetricReport>& reports);
// Writes sir_by_type.svg and srir_by_type.svg into `dir`.
void write_plots(const std::filesystem::path& dir, const std::vector<MetricReport>& reports);

} // namespace fdh
