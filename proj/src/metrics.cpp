#include "fdh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fdh/error.hpp"
#include "fdh/wer.hpp"

namespace fdh {

using nlohmann::json;

std::optional<double> median(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::optional<double> rate_percent(long num, long den) {
    if (den <= 0) return std::nullopt;
    return std::round(1000.0 * static_cast<double>(num) / static_cast<double>(den)) / 10.0;
}

QualityRecord quality_from_json(const json& j) {
    try {
        QualityRecord q;
        q.session_id = j.at("session_id").get<std::string>();
        q.segment_index = j.at("segment_index").get<int>();
        if (j.contains("subjective") && !j["subjective"].is_null()) q.subjective = subjective_from_json(j["subjective"]);
        if (j.contains("c_ppl") && !j["c_ppl"].is_null()) q.c_ppl = j["c_ppl"].get<double>();
        if (j.contains("wer") && !j["wer"].is_null()) {
            q.wer_reference = j["wer"].at("ref").get<std::string>();
            q.wer_hypothesis = j["wer"].at("hyp").get<std::string>();
        }
        return q;
    } catch (const json::exception& e) {
        throw ParseError(std::string("quality record: ") + e.what());
    }
}

json to_json(const QualityRecord& q) {
    json j{{"session_id", q.session_id}, {"segment_index", q.segment_index}};
    if (q.subjective) j["subjective"] = to_json(*q.subjective);
    if (q.c_ppl) j["c_ppl"] = *q.c_ppl;
    if (q.wer_reference && q.wer_hypothesis) j["wer"] = {{"ref", *q.wer_reference}, {"hyp", *q.wer_hypothesis}};
    return j;
}

std::vector<QualityRecord> load_quality(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<QualityRecord> out;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(quality_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::map<char, TypeBreakdown> breakdown_by_type(const std::vector<SessionEvents>& sessions,
                                                const std::map<std::string, SessionManifest>& manifests) {
    std::map<char, TypeBreakdown> out;
    for (const auto& s : sessions) {
        const auto it = manifests.find(s.session_id);
        if (it == manifests.end()) throw InvalidArgument("no manifest for session " + s.session_id);
        const auto& segs = it->second.segments;
        for (const auto& e : s.events) {
            if (!e.user_segment_index) continue;
            const auto idx = static_cast<std::size_t>(*e.user_segment_index);
            if (idx >= segs.size())
                throw InvalidArgument("event refers to missing segment in session " + s.session_id);
            for (auto t : segs[idx].interrupt_types) {
                auto& b = out[to_char(t)];
                switch (e.kind) {
                case EventKind::SuccessInterrupt:
                    ++b.interrupts;
                    ++b.SI;
                    break;
                case EventKind::FailedInterrupt: ++b.interrupts; break;
                case EventKind::SuccessReplyToInterrupt: ++b.SRI; break;
                default: break;
                }
            }
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second.interrupts == 0; });
    for (auto& [type, b] : out) {
        b.SIR = rate_percent(b.SI, b.interrupts);
        b.SRIR = rate_percent(b.SRI, b.SI);
    }
    return out;
}

MetricReport aggregate(const std::vector<SessionEvents>& sessions, const std::vector<QualityRecord>& quality,
                       const std::map<std::string, SessionManifest>* manifests) {
    MetricReport r;
    auto& c = r.counts;
    std::set<std::pair<std::string, int>> replied;
    for (const auto& s : sessions) {
        c.non_interrupt_inquiries += s.counts.non_interrupt_inquiries;
        c.interrupt_inquiries += s.counts.interrupt_inquiries;
        c.all_inquiries += s.counts.all_inquiries;
        c.noise_gaps += s.counts.noise_gaps;
        for (const auto& e : s.events) {
            switch (e.kind) {
            case EventKind::SuccessReply:
                ++c.SR;
                r.timings.ERT_values.push_back(*e.timing_ms);
                break;
            case EventKind::MissedReply: ++c.MR; break;
            case EventKind::EarlyInterrupt:
                ++c.EI;
                r.timings.EIT_values.push_back(*e.timing_ms);
                break;
            case EventKind::SuccessInterrupt:
                ++c.SI;
                r.timings.IRD_values.push_back(*e.timing_ms);
                break;
            case EventKind::FailedInterrupt: ++c.FI; break;
            case EventKind::SuccessReplyToInterrupt:
                ++c.SRI;
                r.timings.FSED_values.push_back(*e.timing_ms);
                break;
            case EventKind::MissedReplyToInterrupt: ++c.MRI; break;
            case EventKind::NoiseInterrupt: ++c.NI; break;
            }
            if ((e.kind == EventKind::SuccessReply || e.kind == EventKind::SuccessReplyToInterrupt) &&
                e.user_segment_index)
                replied.emplace(s.session_id, *e.user_segment_index);
        }
    }
    // Sorted so the raw lists do not depend on session order.
    for (auto* v : {&r.timings.IRD_values, &r.timings.FSED_values, &r.timings.ERT_values, &r.timings.EIT_values})
        std::sort(v->begin(), v->end());

    r.rates.SRR = rate_percent(c.SR, c.non_interrupt_inquiries);
    r.rates.SIR = rate_percent(c.SI, c.interrupt_inquiries);
    r.rates.SRIR = rate_percent(c.SRI, c.SI);
    r.rates.EIR = rate_percent(c.EI, c.all_inquiries);
    r.rates.NIR = rate_percent(c.NI, c.noise_gaps);

    auto med = [](const std::vector<Milliseconds>& v) {
        return median(std::vector<double>(v.begin(), v.end()));
    };
    r.timings.IRD = med(r.timings.IRD_values);
    r.timings.FSED = med(r.timings.FSED_values);
    r.timings.ERT = med(r.timings.ERT_values);
    r.timings.EIT = med(r.timings.EIT_values);

    WerAccumulator wer;
    std::vector<double> ppl;
    std::array<double, 6> dim_sum{};
    int scored = 0;
    for (const auto& q : quality) {
        if (q.wer_reference && q.wer_hypothesis) {
            try {
                wer.add(word_error_rate(*q.wer_reference, *q.wer_hypothesis));
            } catch (const UndefinedMetricError&) {
                // replies without any reference words carry no WER
            }
        }
        if (!replied.contains({q.session_id, q.segment_index})) continue;
        if (q.c_ppl) ppl.push_back(*q.c_ppl);
        if (q.subjective) {
            const auto v = q.subjective->values();
            for (std::size_t i = 0; i < v.size(); ++i) dim_sum[i] += v[i];
            ++scored;
        }
    }
    if (!wer.empty()) r.wer_percent = wer.result().wer_percent;
    if (!ppl.empty()) {
        double sum = 0;
        for (double p : ppl) sum += p;
        r.c_ppl = sum / static_cast<double>(ppl.size());
    }
    if (scored > 0) {
        SubjectiveSummary sub;
        sub.replies = scored;
        double total = 0;
        for (std::size_t i = 0; i < dim_sum.size(); ++i) {
            const double m = dim_sum[i] / scored;
            sub.dimension_means[SubjectiveScore::kDimensions[i]] = m;
            total += m;
        }
        sub.overall = total / static_cast<double>(dim_sum.size());
        r.subjective = sub;
    }
    if (manifests) r.per_type = breakdown_by_type(sessions, *manifests);
    return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

} // namespace

json to_json(const MetricReport& r) {
    const auto& c = r.counts;
    json j;
    j["model"] = r.model;
    j["dataset"] = r.dataset;
    j["counts"] = {{"non_interrupt_inquiries", c.non_interrupt_inquiries},
                   {"interrupt_inquiries", c.interrupt_inquiries},
                   {"all_inquiries", c.all_inquiries},
                   {"noise_gaps", c.noise_gaps},
                   {"SR", c.SR}, {"MR", c.MR}, {"SI", c.SI}, {"FI", c.FI},
                   {"SRI", c.SRI}, {"MRI", c.MRI}, {"EI", c.EI}, {"NI", c.NI}};
    j["rates_percent"] = {{"SRR", opt(r.rates.SRR)}, {"SIR", opt(r.rates.SIR)}, {"SRIR", opt(r.rates.SRIR)},
                          {"EIR", opt(r.rates.EIR)}, {"NIR", opt(r.rates.NIR)}};
    const auto& t = r.timings;
    j["timings_ms"] = {{"IRD_median", opt(t.IRD)}, {"FSED_median", opt(t.FSED)},
                       {"ERT_median", opt(t.ERT)}, {"EIT_median", opt(t.EIT)},
                       {"IRD", t.IRD_values}, {"FSED", t.FSED_values},
                       {"ERT", t.ERT_values}, {"EIT", t.EIT_values}};
    j["wer_percent"] = opt(r.wer_percent);
    j["c_ppl"] = opt(r.c_ppl);
    if (r.subjective) {
        j["subjective"] = {{"dimensions", r.subjective->dimension_means},
                           {"overall", r.subjective->overall},
                           {"replies", r.subjective->replies}};
    } else {
        j["subjective"] = nullptr;
    }
    json pt = json::object();
    for (const auto& [type, b] : r.per_type) {
        pt[std::string(1, type)] = {{"interrupts", b.interrupts}, {"SI", b.SI}, {"SRI", b.SRI},
                                    {"SIR", opt(b.SIR)}, {"SRIR", opt(b.SRIR)}};
    }
    j["per_type"] = pt;
    return j;
}

MetricReport report_from_json(const json& j) {
    try {
        MetricReport r;
        r.model = j.value("model", "");
        r.dataset = j.value("dataset", "");
        const auto& c = j.at("counts");
        auto& rc = r.counts;
        rc.non_interrupt_inquiries = c.at("non_interrupt_inquiries").get<long>();
        rc.interrupt_inquiries = c.at("interrupt_inquiries").get<long>();
        rc.all_inquiries = c.at("all_inquiries").get<long>();
        rc.noise_gaps = c.at("noise_gaps").get<long>();
        rc.SR = c.at("SR").get<long>();
        rc.MR = c.value("MR", 0L);
        rc.SI = c.at("SI").get<long>();
        rc.FI = c.value("FI", 0L);
        rc.SRI = c.at("SRI").get<long>();
        rc.MRI = c.value("MRI", 0L);
        rc.EI = c.at("EI").get<long>();
        rc.NI = c.at("NI").get<long>();
        const auto& rt = j.at("rates_percent");
        r.rates = {get_opt(rt, "SRR"), get_opt(rt, "SIR"), get_opt(rt, "SRIR"), get_opt(rt, "EIR"),
                   get_opt(rt, "NIR")};
        const auto& t = j.at("timings_ms");
        r.timings.IRD = get_opt(t, "IRD_median");
        r.timings.FSED = get_opt(t, "FSED_median");
        r.timings.ERT = get_opt(t, "ERT_median");
        r.timings.EIT = get_opt(t, "EIT_median");
        r.timings.IRD_values = t.value("IRD", std::vector<Milliseconds>{});
        r.timings.FSED_values = t.value("FSED", std::vector<Milliseconds>{});
        r.timings.ERT_values = t.value("ERT", std::vector<Milliseconds>{});
        r.timings.EIT_values = t.value("EIT", std::vector<Milliseconds>{});
        r.wer_percent = get_opt(j, "wer_percent");
        r.c_ppl = get_opt(j, "c_ppl");
        if (j.contains("subjective") && !j["subjective"].is_null()) {
            const auto& s = j["subjective"];
            SubjectiveSummary sub;
            sub.dimension_means = s.at("dimensions").get<std::map<std::string, double>>();
            sub.overall = s.at("overall").get<double>();
            sub.replies = s.value("replies", 0);
            r.subjective = sub;
        }
        if (j.contains("per_type")) {
            for (const auto& [k, v] : j["per_type"].items()) {
                if (k.size() != 1 || !interrupt_type_from_char(k[0]))
                    throw ParseError("unknown interruption type '" + k + "' in per_type");
                TypeBreakdown b;
                b.interrupts = v.at("interrupts").get<long>();
                b.SI = v.at("SI").get<long>();
                b.SRI = v.at("SRI").get<long>();
                b.SIR = get_opt(v, "SIR");
                b.SRIR = get_opt(v, "SRIR");
                r.per_type[k[0]] = b;
            }
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

std::vector<MetricReport> load_reports(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    std::vector<MetricReport> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(report_from_json(e));
    } else {
        out.push_back(report_from_json(j));
    }
    return out;
}

namespace {

std::string fixed(const std::optional<double>& v, int decimals) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
    return buf;
}

std::string integer_ms(const std::optional<double>& v) {
    if (!v) return "-";
    return std::to_string(std::llround(*v));
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

bool any_noise(const std::vector<MetricReport>& reports) {
    return std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.counts.noise_gaps > 0; });
}

std::vector<std::string> table_columns(const std::vector<MetricReport>& reports, bool with_nir) {
    auto cols = kReportColumns;
    if (with_nir && any_noise(reports)) {
        cols.insert(std::find(cols.begin(), cols.end(), "EIR") + 1, "NIR");
    }
    return cols;
}

} // namespace

std::string report_cell(const MetricReport& r, const std::string& column) {
    if (column == "WER") return fixed(r.wer_percent, 1);
    if (column == "SRR") return fixed(r.rates.SRR, 1);
    if (column == "SRIR") return fixed(r.rates.SRIR, 1);
    if (column == "SIR") return fixed(r.rates.SIR, 1);
    if (column == "EIR") return fixed(r.rates.EIR, 1);
    if (column == "NIR") return fixed(r.rates.NIR, 1);
    if (column == "IRD") return integer_ms(r.timings.IRD);
    if (column == "FSED") return integer_ms(r.timings.FSED);
    if (column == "ERT") return integer_ms(r.timings.ERT);
    if (column == "EIT") return integer_ms(r.timings.EIT);
    if (column == "C-PPL") return fixed(r.c_ppl, 2);
    if (column == "Score") return r.subjective ? fixed(r.subjective->overall, 2) : "-";
    throw InvalidArgument("unknown report column " + column);
}

std::string render_csv(const std::vector<MetricReport>& reports) {
    std::string out = "model,dataset";
    for (const auto& c : kReportColumns) out += "," + c;
    out += ",NIR\n";
    for (const auto& r : reports) {
        out += csv_field(r.model) + "," + csv_field(r.dataset);
        for (const auto& c : kReportColumns) out += "," + report_cell(r, c);
        out += "," + report_cell(r, "NIR") + "\n";
    }
    return out;
}

std::string render_markdown(const std::vector<MetricReport>& reports) {
    const auto cols = table_columns(reports, true);
    std::string out = "| Model | Dataset |";
    std::string rule = "|---|---|";
    for (const auto& c : cols) {
        out += " " + c + " |";
        rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto& r : reports) {
        out += "| " + r.model + " | " + r.dataset + " |";
        for (const auto& c : cols) out += " " + report_cell(r, c) + " |";
        out += "\n";
    }
    return out;
}

std::string render_type_svg(const std::vector<MetricReport>& reports, const std::string& metric) {
    if (metric != "SIR" && metric != "SRIR") throw InvalidArgument("plot metric must be SIR or SRIR");
    static constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                               "#edc948", "#b07aa1", "#ff9da7"};
    const int n = std::max<int>(1, static_cast<int>(reports.size()));
    const int bar_w = 18, group_gap = 30, left = 60, top = 40, plot_h = 240;
    const int group_w = n * bar_w;
    const int width = left + 5 * (group_w + group_gap) + 160;
    const int height = top + plot_h + 60;
    auto y_of = [&](double v) { return top + plot_h - v / 100.0 * plot_h; };

    std::string s;
    auto add = [&](const std::string& line) { s += line + "\n"; };
    add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
        std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">");
    add("<text x=\"" + std::to_string(left) + "\" y=\"20\" font-size=\"14\">" + metric +
        " by interruption type (%)</text>");
    for (int tick = 0; tick <= 100; tick += 20) {
        const auto y = std::to_string(static_cast<int>(y_of(tick)));
        add("<line x1=\"" + std::to_string(left) + "\" y1=\"" + y + "\" x2=\"" +
            std::to_string(width - 160) + "\" y2=\"" + y + "\" stroke=\"#ddd\"/>");
        add("<text x=\"" + std::to_string(left - 8) + "\" y=\"" + y + "\" text-anchor=\"end\">" +
            std::to_string(tick) + "</text>");
    }
    for (int g = 0; g < 5; ++g) {
        const char type = to_char(kAllInterruptTypes[g]);
        const int gx = left + group_gap / 2 + g * (group_w + group_gap);
        add("<g class=\"type-group\" data-type=\"" + std::string(1, type) + "\">");
        for (int i = 0; i < static_cast<int>(reports.size()); ++i) {
            const auto it = reports[i].per_type.find(type);
            std::optional<double> v;
            if (it != reports[i].per_type.end()) v = metric == "SIR" ? it->second.SIR : it->second.SRIR;
            if (!v) continue;
            const double y = y_of(*v);
            add("  <rect x=\"" + std::to_string(gx + i * bar_w) + "\" y=\"" + fixed(y, 1) + "\" width=\"" +
                std::to_string(bar_w - 2) + "\" height=\"" + fixed(top + plot_h - y, 1) + "\" fill=\"" +
                kPalette[i % 8] + "\"><title>" + reports[i].model + " " + reports[i].dataset + ": " +
                fixed(v, 1) + "</title></rect>");
        }
        add("  <text x=\"" + std::to_string(gx + group_w / 2) + "\" y=\"" + std::to_string(top + plot_h + 18) +
            "\" text-anchor=\"middle\">" + std::string(1, type) + "</text>");
        add("</g>");
    }
    for (int i = 0; i < static_cast<int>(reports.size()); ++i) {
        const int ly = top + 10 + i * 18;
        const int lx = width - 150;
        add("<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly - 10) +
            "\" width=\"12\" height=\"12\" fill=\"" + kPalette[i % 8] + "\"/>");
        add("<text x=\"" + std::to_string(lx + 18) + "\" y=\"" + std::to_string(ly) + "\">" + reports[i].model +
            (reports[i].dataset.empty() ? "" : " " + reports[i].dataset) + "</text>");
    }
    add("</svg>");
    return s;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

} // namespace

void write_report_files(const std::filesystem::path& dir, const std::vector<MetricReport>& reports) {
    std::filesystem::create_directories(dir);
    json all = json::array();
    for (const auto& r : reports) all.push_back(to_json(r));
    write_text(dir / "report.json", all.dump(2) + "\n");
    write_text(dir / "report.csv", render_csv(reports));
    write_text(dir / "report.md", render_markdown(reports));
}

void write_plots(const std::filesystem::path& dir, const std::vector<MetricReport>& reports) {
    std::filesystem::create_directories(dir);
    write_text(dir / "sir_by_type.svg", render_type_svg(reports, "SIR"));
    write_text(dir / "srir_by_type.svg", render_type_svg(reports, "SRIR"));
}

} // namespace fdh
