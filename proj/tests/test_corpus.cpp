#include "doctest.h"

#include <cmath>

#include "fdh/corpus.hpp"
#include "fdh/error.hpp"
#include "support.hpp"

using namespace fdh;

namespace {

std::vector<Waveform> utterances_for(const ConversationScript& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len(300, 2500);
    std::vector<Waveform> out;
    const auto n = user_utterances(s).size();
    for (std::size_t i = 0; i < n; ++i) out.push_back(test::tone_ms(len(rng), 200.0 + 50.0 * static_cast<double>(i)));
    return out;
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("gaps fall in the difficulty range and tile the session") {
    const auto script = test::sample_script();
    for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
        const auto audio = utterances_for(script, 3);
        const auto s = assemble_session(audio, script, d, 11);
        const auto r = gap_range(d);
        CHECK(check_manifest(s.manifest).empty());
        REQUIRE(s.manifest.gaps.size() == audio.size() - 1);
        for (std::size_t g = 0; g < s.manifest.gaps.size(); ++g) {
            const auto& gap = s.manifest.gaps[g];
            CHECK(gap.end_ms - gap.start_ms >= r.min_ms);
            CHECK(gap.end_ms - gap.start_ms <= r.max_ms);
            CHECK(gap.start_sample == s.manifest.segments[g].end_sample);
            CHECK(gap.end_sample == s.manifest.segments[g + 1].start_sample);
            CHECK_FALSE(gap.has_noise);
        }
    }
}

TEST_CASE("difficulty ranges") {
    CHECK(gap_range(Difficulty::Easy).min_ms == 6000);
    CHECK(gap_range(Difficulty::Easy).max_ms == 10000);
    CHECK(gap_range(Difficulty::Medium).min_ms == 4000);
    CHECK(gap_range(Difficulty::Medium).max_ms == 6000);
    CHECK(gap_range(Difficulty::Hard).min_ms == 2000);
    CHECK(gap_range(Difficulty::Hard).max_ms == 4000);
}

TEST_CASE("segment boundaries are sample exact") {
    const auto script = test::sample_script();
    const auto audio = utterances_for(script, 5);
    const auto s = assemble_session(audio, script, Difficulty::Hard, 2);
    for (std::size_t i = 0; i < audio.size(); ++i) {
        const auto& seg = s.manifest.segments[i];
        REQUIRE(seg.end_sample - seg.start_sample == static_cast<std::int64_t>(audio[i].size()));
        CHECK(std::equal(audio[i].samples.begin(), audio[i].samples.end(),
                         s.waveform.samples.begin() + seg.start_sample));
        CHECK(seg.start_ms == samples_to_ms(seg.start_sample));
    }
    CHECK(s.manifest.duration_samples == static_cast<std::int64_t>(s.waveform.size()));
    CHECK(s.manifest.segments[1].is_interrupt);
    CHECK(s.manifest.segments[3].interrupt_types.size() == 2);
}

TEST_CASE("same seed gives identical sessions, another seed differs") {
    const auto script = test::sample_script();
    const auto audio = utterances_for(script, 9);
    const auto a = assemble_session(audio, script, Difficulty::Easy, 42);
    const auto b = assemble_session(audio, script, Difficulty::Easy, 42);
    const auto c = assemble_session(audio, script, Difficulty::Easy, 43);
    CHECK(a.waveform == b.waveform);
    CHECK(a.manifest == b.manifest);
    CHECK(a.manifest.gaps != c.manifest.gaps);
}

TEST_CASE("assembly preconditions") {
    const auto script = test::sample_script();
    auto audio = utterances_for(script, 1);
    audio.pop_back();
    CHECK_THROWS_AS(assemble_session(audio, script, Difficulty::Easy, 1), InvalidArgument);
    audio = utterances_for(script, 1);
    audio[0].sample_rate = 16000;
    CHECK_THROWS_AS(assemble_session(audio, script, Difficulty::Easy, 1), AudioFormatError);
}

TEST_CASE("manifest json round trip and file io") {
    test::TempDir dir;
    const auto script = test::sample_script();
    auto s = assemble_session(utterances_for(script, 4), script, Difficulty::Medium, 8, "sess");
    save_manifest(dir / "m.json", s.manifest);
    CHECK(load_manifest(dir / "m.json") == s.manifest);
    CHECK(manifest_from_json(to_json(s.manifest)) == s.manifest);
}

TEST_CASE("noise mixing hits the requested snr") {
    const auto script = test::sample_script();
    const auto s = assemble_session(utterances_for(script, 6), script, Difficulty::Hard, 3);
    std::mt19937 rng(1);
    std::normal_distribution<float> g(0.0f, 0.1f);
    Waveform noise{kSampleRate, std::vector<float>(24000 * 3)};
    for (auto& x : noise.samples) x = g(rng);
    for (auto mode : {NoiseMode::Bg, NoiseMode::Gap}) {
        for (int snr : {0, 10, 20}) {
            const auto mix = mix_noise(s.waveform, s.manifest, mode, snr, noise, 77);
            CHECK(realized_snr_db(s.waveform, mix.waveform, mix.manifest, mode) == doctest::Approx(snr).epsilon(0.02));
            CHECK(mix.manifest.snr_db == snr);
            CHECK(mix.manifest.noise_mode == mode);
            CHECK(check_manifest(mix.manifest).empty());
        }
    }
}

TEST_CASE("gap mode leaves speech untouched") {
    const auto script = test::sample_script();
    const auto s = assemble_session(utterances_for(script, 6), script, Difficulty::Hard, 3);
    Waveform noise = test::tone_ms(500, 1234.0, 0.2);
    const auto mix = mix_noise(s.waveform, s.manifest, NoiseMode::Gap, 10, noise, 5);
    for (const auto& seg : s.manifest.segments)
        for (auto k = seg.start_sample; k < seg.end_sample; ++k) REQUIRE(mix.waveform.samples[k] == s.waveform.samples[k]);
    for (const auto& g : mix.manifest.gaps) CHECK(g.has_noise);
}

TEST_CASE("silent inputs make snr undefined") {
    const auto script = test::sample_script();
    auto s = assemble_session(utterances_for(script, 6), script, Difficulty::Hard, 3);
    const Waveform silent_noise = test::silence_ms(100);
    CHECK_THROWS_AS(mix_noise(s.waveform, s.manifest, NoiseMode::Bg, 10, silent_noise, 1), UndefinedMetricError);
    std::fill(s.waveform.samples.begin(), s.waveform.samples.end(), 0.0f);
    CHECK_THROWS_AS(mix_noise(s.waveform, s.manifest, NoiseMode::Bg, 10, test::tone_ms(100), 1), UndefinedMetricError);
    CHECK_THROWS_AS(mix_noise(s.waveform, s.manifest, NoiseMode::Bg, 10, Waveform{}, 1), InvalidArgument);
}

TEST_CASE("short noise clips are tiled to the requested length") {
    const auto clip = make_tone(2400, 500.0, 0.5);
    const auto drawn = draw_noise(clip, 24000, 3);
    CHECK(drawn.size() == 24000);
    CHECK(draw_noise(clip, 24000, 3) == drawn);
    CHECK(mean_abs(drawn) > 0.2);
}

}
