#include "doctest.h"

#include <random>

#include "fdh/error.hpp"
#include "fdh/metrics.hpp"
#include "support.hpp"
#include "timeline_gen.hpp"

using namespace fdh;

namespace {

InteractionEvent ev(EventKind k, int seg, std::optional<Milliseconds> t = std::nullopt) {
    return {k, seg, std::nullopt, t};
}

SessionEvents session(const std::string& id, std::vector<InteractionEvent> events, SessionCounts counts) {
    return {id, std::move(events), counts};
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("median rules") {
    CHECK(median({1000, 1345, 2000}) == 1345.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK(median({7}) == 7.0);
    CHECK_FALSE(median({}).has_value());
    std::mt19937 rng(8);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(1 + rng() % 30);
        for (auto& x : v) x = static_cast<double>(rng() % 5000) - 1000;
        CHECK(median(v) == test::median_oracle(v));
        std::reverse(v.begin(), v.end());
        CHECK(median(v) == test::median_oracle(v));
    }
}

TEST_CASE("two success replies out of three inquiries") {
    const auto r = aggregate({session("s", {ev(EventKind::SuccessReply, 0, -200), ev(EventKind::SuccessReply, 1, -300),
                                            ev(EventKind::MissedReply, 2)},
                                     {3, 0, 3, 0})});
    CHECK(r.rates.SRR == 66.7);
    CHECK(r.rates.EIR == 0.0);
    CHECK(r.timings.ERT == -250.0);
}

TEST_CASE("no interrupts leaves interrupt metrics absent") {
    const auto r = aggregate({session("s", {ev(EventKind::SuccessReply, 0, 0)}, {1, 0, 1, 0})});
    CHECK_FALSE(r.rates.SIR);
    CHECK_FALSE(r.rates.SRIR);
    CHECK_FALSE(r.timings.IRD);
    CHECK_FALSE(r.rates.NIR);
    CHECK(report_cell(r, "SIR") == "-");
    CHECK(report_cell(r, "IRD") == "-");
}

TEST_CASE("rates, timings and denominators") {
    const std::vector<SessionEvents> s = {
        session("a",
                {ev(EventKind::SuccessReply, 0, -500), ev(EventKind::SuccessInterrupt, 1, 1000),
                 ev(EventKind::SuccessReplyToInterrupt, 1, 400), ev(EventKind::EarlyInterrupt, 2, 2500),
                 {EventKind::NoiseInterrupt, std::nullopt, 0, std::nullopt}},
                {2, 1, 3, 2}),
        session("b",
                {ev(EventKind::SuccessInterrupt, 0, 1345), ev(EventKind::MissedReplyToInterrupt, 0),
                 ev(EventKind::FailedInterrupt, 1), ev(EventKind::SuccessInterrupt, 2, 2000),
                 ev(EventKind::SuccessReplyToInterrupt, 2, 600)},
                {0, 3, 3, 0}),
    };
    const auto r = aggregate(s);
    CHECK(r.counts.SI == 3);
    CHECK(r.rates.SRR == 50.0);
    CHECK(r.rates.SIR == 75.0);
    CHECK(r.rates.SRIR == 66.7);
    CHECK(r.rates.EIR == 16.7);
    CHECK(r.rates.NIR == 50.0);
    CHECK(r.timings.IRD == 1345.0);
    CHECK(r.timings.FSED == 500.0);
    CHECK(r.timings.EIT == 2500.0);
    CHECK(report_cell(r, "FSED") == "500");
    CHECK(report_cell(r, "SRIR") == "66.7");
}

TEST_CASE("aggregation is order independent and additive") {
    std::mt19937_64 rng(12);
    std::vector<SessionEvents> all;
    for (int i = 0; i < 40; ++i) {
        const auto c = test::random_case(rng);
        auto s = detect_events(c.manifest, c.model);
        s.session_id = "s" + std::to_string(i);
        all.push_back(s);
    }
    const auto base = aggregate(all);
    auto shuffled = all;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& s : shuffled) std::shuffle(s.events.begin(), s.events.end(), rng);
    CHECK(aggregate(shuffled) == base);

    const std::vector<SessionEvents> left(all.begin(), all.begin() + 17), right(all.begin() + 17, all.end());
    const auto a = aggregate(left), b = aggregate(right);
    CHECK(a.counts.SR + b.counts.SR == base.counts.SR);
    CHECK(a.counts.SI + b.counts.SI == base.counts.SI);
    CHECK(a.counts.all_inquiries + b.counts.all_inquiries == base.counts.all_inquiries);
    auto merged = a.timings.IRD_values;
    merged.insert(merged.end(), b.timings.IRD_values.begin(), b.timings.IRD_values.end());
    std::sort(merged.begin(), merged.end());
    CHECK(merged == base.timings.IRD_values);
}

TEST_CASE("column schema") {
    CHECK(kReportColumns ==
          std::vector<std::string>{"WER", "SRR", "SRIR", "SIR", "EIR", "IRD", "FSED", "ERT", "EIT", "C-PPL", "Score"});
    MetricReport r;
    r.model = "m";
    const auto md = render_markdown({r});
    CHECK(md.rfind("| Model | Dataset | WER | SRR | SRIR | SIR | EIR | IRD | FSED | ERT | EIT | C-PPL | Score |", 0) == 0);
    r.counts.noise_gaps = 4;
    CHECK(render_markdown({r}).find("| EIR | NIR | IRD |") != std::string::npos);
}

TEST_CASE("per-type breakdown") {
    using T = InterruptType;
    std::map<std::string, SessionManifest> manifests;
    manifests["s"] = test::manifest_of({{0, 1000},
                                        {2000, 3000, true, {T::R}},
                                        {4000, 5000, true, {T::R}},
                                        {6000, 7000, true, {T::A, T::F}},
                                        {8000, 9000, true, {T::F}}},
                                       10000);
    manifests["s"].session_id = "s";
    const std::vector<SessionEvents> s = {session(
        "s",
        {ev(EventKind::SuccessReply, 0, 0), ev(EventKind::SuccessInterrupt, 1, 300), ev(EventKind::MissedReplyToInterrupt, 1),
         ev(EventKind::SuccessInterrupt, 2, 300), ev(EventKind::MissedReplyToInterrupt, 2),
         ev(EventKind::SuccessInterrupt, 3, 300), ev(EventKind::SuccessReplyToInterrupt, 3, 100),
         ev(EventKind::FailedInterrupt, 4)},
        {1, 4, 5, 0})};
    const auto pt = breakdown_by_type(s, manifests);
    CHECK(pt.size() == 3);
    CHECK(pt.at('R').SIR == 100.0);
    CHECK(pt.at('R').SRIR == 0.0);
    CHECK(pt.at('A').SIR == 100.0);
    CHECK(pt.at('A').SRIR == 100.0);
    CHECK(pt.at('F').interrupts == 2);
    CHECK(pt.at('F').SIR == 50.0);
    CHECK(pt.at('F').SRIR == 100.0);
    CHECK_FALSE(pt.contains('D'));
    CHECK_FALSE(pt.contains('S'));
    CHECK(aggregate(s, {}, &manifests).per_type == pt);
}

TEST_CASE("quality inputs") {
    const std::vector<SessionEvents> s = {session(
        "s", {ev(EventKind::SuccessReply, 0, 0), ev(EventKind::MissedReply, 1), ev(EventKind::EarlyInterrupt, 2, 3000)},
        {3, 0, 3, 0})};
    std::vector<QualityRecord> q(3);
    for (int i = 0; i < 3; ++i) {
        q[i].session_id = "s";
        q[i].segment_index = i;
    }
    q[0].subjective = SubjectiveScore{8, 6, 7, 5, 9, 7};
    q[0].c_ppl = 12.0;
    q[2].subjective = SubjectiveScore{1, 1, 1, 1, 1, 1};  // not a successful reply
    q[2].c_ppl = 99.0;
    q[0].wer_reference = "a b c d";
    q[0].wer_hypothesis = "a b c d";
    q[1].wer_reference = "a b";
    q[1].wer_hypothesis = "a x";
    const auto r = aggregate(s, q);
    REQUIRE(r.subjective);
    CHECK(r.subjective->replies == 1);
    CHECK(r.subjective->overall == doctest::Approx(7.0));
    CHECK(r.subjective->dimension_means.at("relevance") == 8.0);
    CHECK(r.c_ppl == 12.0);
    CHECK(*r.wer_percent == doctest::Approx(100.0 / 6.0));
    CHECK(report_cell(r, "Score") == "7.00");
}

TEST_CASE("report json round trip, csv and svg") {
    std::mt19937_64 rng(3);
    std::vector<SessionEvents> all;
    std::map<std::string, SessionManifest> manifests;
    for (int i = 0; i < 10; ++i) {
        auto c = test::random_case(rng);
        c.manifest.session_id = "s" + std::to_string(i);
        all.push_back(detect_events(c.manifest, c.model));
        manifests[c.manifest.session_id] = c.manifest;
    }
    auto r = aggregate(all, {}, &manifests);
    r.model = "mock";
    r.dataset = "E";
    r.wer_percent = 12.5;
    CHECK(report_from_json(to_json(r)) == r);
    CHECK(report_from_json(nlohmann::json::parse(to_json(r).dump())) == r);

    auto r2 = r;
    r2.dataset = "H";
    const auto csv = render_csv({r, r2});
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.rfind("model,dataset,WER,SRR,SRIR,SIR,EIR,IRD,FSED,ERT,EIT,C-PPL,Score", 0) == 0);

    const auto svg = render_type_svg({r, r2}, "SIR");
    std::size_t groups = 0;
    for (auto pos = svg.find("class=\"type-group\""); pos != std::string::npos;
         pos = svg.find("class=\"type-group\"", pos + 1))
        ++groups;
    CHECK(groups == 5);
    CHECK_THROWS_AS(render_type_svg({r}, "EIR"), InvalidArgument);

    test::TempDir dir;
    write_report_files(dir.path(), {r, r2});
    write_plots(dir.path(), {r, r2});
    CHECK(load_reports(dir / "report.json") == std::vector<MetricReport>{r, r2});
    CHECK(std::filesystem::exists(dir / "sir_by_type.svg"));
    CHECK(std::filesystem::exists(dir / "srir_by_type.svg"));
    CHECK(std::filesystem::exists(dir / "report.md"));
}

}
