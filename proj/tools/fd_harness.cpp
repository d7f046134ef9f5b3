#include <csignal>
#include <fstream>
#include <iostream>
#include <stop_token>

#include "CLI11.hpp"

#include "fdh/client.hpp"
#include "fdh/corpus.hpp"
#include "fdh/events.hpp"
#include "fdh/metrics.hpp"
#include "fdh/mock.hpp"
#include "fdh/pipeline.hpp"
#include "fdh/scriptgen.hpp"
#include "fdh/vad.hpp"

namespace fs = std::filesystem;
using namespace fdh;

namespace {

std::stop_source g_stop;

extern "C" void on_signal(int) { g_stop.request_stop(); }

std::map<std::string, SessionManifest> load_manifest_dir(const fs::path& dir) {
    std::map<std::string, SessionManifest> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (!name.ends_with(".manifest.json")) continue;
        auto m = load_manifest(e.path());
        out[m.session_id] = std::move(m);
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-duplex spoken dialogue benchmarking harness"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Request conversation scripts from an LLM service");
    fs::path topics, gen_out;
    int count = 1;
    std::string gen_replay, gen_base_url, gen_model = GenerateOptions{}.model;
    int retry_budget = GenerateOptions{}.retry_budget;
    gen->add_option("--topics", topics, "Topics file, one per line")->required()->check(CLI::ExistingFile);
    gen->add_option("--count", count, "Number of conversations")->check(CLI::NonNegativeNumber);
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--replay", gen_replay, "Replay file of recorded responses");
    gen->add_option("--base-url", gen_base_url, "OpenAI-compatible API base URL (key from OPENAI_API_KEY)");
    gen->add_option("--model", gen_model, "Model name");
    gen->add_option("--retries", retry_budget, "Extra attempts per invalid conversation");

    // build-corpus
    auto* build = app.add_subcommand("build-corpus", "Assemble session audio and manifests");
    fs::path scripts_dir, audio_dir, corpus_out, noise_file;
    std::string difficulty = "easy", noise_mode = "none";
    int snr = 10;
    std::uint64_t seed = 1;
    bool placeholder = false;
    build->add_option("--scripts", scripts_dir, "Directory of script JSON files")->required();
    build->add_option("--audio", audio_dir, "Per-utterance audio: DIR/<conversation_id>/<k>.wav");
    build->add_option("--out", corpus_out, "Output directory")->required();
    build->add_option("--difficulty", difficulty, "easy, medium or hard");
    build->add_option("--noise-mode", noise_mode, "none, bg or gap");
    build->add_option("--snr", snr, "SNR in dB");
    build->add_option("--noise", noise_file, "Noise WAV");
    build->add_option("--seed", seed, "RNG seed");
    build->add_flag("--placeholder-audio", placeholder, "Use tone bursts for missing utterance audio");

    // run
    auto* run = app.add_subcommand("run", "Stream one session to a model server");
    fs::path session_wav, session_manifest, trace_out;
    std::string endpoint, clock = "real";
    Milliseconds chunk_ms = 80, drain_ms = 60000;
    run->add_option("--session", session_wav, "Session WAV")->required()->check(CLI::ExistingFile);
    run->add_option("--manifest", session_manifest, "Session manifest")->required()->check(CLI::ExistingFile);
    run->add_option("--endpoint", endpoint, "HOST:PORT or mock:BEHAVIOR.json")->required();
    run->add_option("--chunk-ms", chunk_ms, "Chunk duration (80, 107, 200)")->check(CLI::PositiveNumber);
    run->add_option("--clock", clock, "real or virtual");
    run->add_option("--drain-ms", drain_ms, "How long to wait for output after the input ends");
    run->add_option("--out", trace_out, "Trace directory")->required();

    // mock-serve
    auto* serve = app.add_subcommand("mock-serve", "Serve a scripted mock model over TCP");
    fs::path behavior_file;
    int port = 9000;
    std::string host = "127.0.0.1";
    serve->add_option("--behavior", behavior_file, "Behavior script JSON");
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--host", host, "Bind address");

    // segment
    auto* seg = app.add_subcommand("segment", "Extract speech segments from audio");
    fs::path seg_in, seg_out;
    std::string vad_spec = "builtin";
    VadOptions vad_opts;
    seg->add_option("--in", seg_in, "Input WAV")->required()->check(CLI::ExistingFile);
    seg->add_option("--vad", vad_spec, "builtin, file:PATH or service:URL");
    seg->add_option("--threshold", vad_opts.threshold, "Speech threshold");
    seg->add_option("--min-speech-ms", vad_opts.min_speech_ms);
    seg->add_option("--min-silence-ms", vad_opts.min_silence_ms);
    seg->add_option("--out", seg_out, "Output JSON (stdout when omitted)");

    // events
    auto* evc = app.add_subcommand("events", "Classify interaction events for one session");
    fs::path ev_manifest, ev_timeline, ev_out;
    DetectorConfig det;
    evc->add_option("--manifest", ev_manifest)->required()->check(CLI::ExistingFile);
    evc->add_option("--timeline", ev_timeline, "Model speech segments JSON")->required()->check(CLI::ExistingFile);
    evc->add_option("--out", ev_out, "Events directory")->required();
    evc->add_option("--t-early-ms", det.t_early_ms);
    evc->add_option("--t-si-max-ms", det.t_si_max_ms);

    // analyze
    auto* an = app.add_subcommand("analyze", "Aggregate events into a metric report");
    fs::path an_events, an_manifests, an_scores, an_out;
    std::string model_name = "model", dataset = "";
    an->add_option("--events", an_events, "Events directory")->required()->check(CLI::ExistingDirectory);
    an->add_option("--manifests", an_manifests, "Manifest directory")->required()->check(CLI::ExistingDirectory);
    an->add_option("--scores", an_scores, "Quality records JSONL")->check(CLI::ExistingFile);
    an->add_option("--out", an_out, "report.json, report.csv or report.md")->required();
    an->add_option("--model", model_name);
    an->add_option("--dataset", dataset);

    // plot
    auto* plot = app.add_subcommand("plot", "Per-type SIR/SRIR bar charts");
    fs::path plot_report, plot_out;
    plot->add_option("--report", plot_report, "Report JSON")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "Output directory")->required();

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "Run every stage from a config document");
    fs::path config_path;
    pipe->add_option("--config", config_path, "Pipeline config")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            std::unique_ptr<ChatClient> upstream, client;
            if (!gen_base_url.empty()) upstream = std::make_unique<OpenAiChatClient>(gen_base_url);
            if (!gen_replay.empty()) {
                client = std::make_unique<ReplayChatClient>(gen_replay, upstream.get());
            } else if (upstream) {
                client = std::move(upstream);
            } else {
                std::cerr << "generate: need --replay or --base-url\n";
                return 2;
            }
            std::ifstream in(topics);
            std::vector<std::string> topic_list;
            for (std::string line; std::getline(in, line);)
                if (!line.empty() && line[0] != '#') topic_list.push_back(line);
            GenerateOptions opts;
            opts.model = gen_model;
            opts.retry_budget = retry_budget;
            const auto scripts = generate_scripts(topic_list, count, *client, opts);
            fs::create_directories(gen_out);
            for (const auto& s : scripts)
                write_file(gen_out / (s.conversation_id + ".json"), to_json(s).dump(2) + "\n");
            std::cout << format_corpus_stats(corpus_stats(scripts));
        } else if (*build) {
            const auto d = parse_difficulty(difficulty);
            const auto m = parse_noise_mode(noise_mode);
            std::optional<Waveform> noise;
            if (m != NoiseMode::None) {
                if (noise_file.empty()) throw InvalidArgument("--noise is required with --noise-mode " + noise_mode);
                noise = read_wav(noise_file);
            }
            fs::create_directories(corpus_out);
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(scripts_dir))
                if (e.path().extension() == ".json") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            int n = 0;
            for (const auto& f : files) {
                ValidationResult issues;
                const auto script = load_script(f.string(), &issues);
                auto v = validate_script(script);
                if (!issues.ok() || !v.ok()) {
                    const auto& first = issues.ok() ? v.violations.front() : issues.violations.front();
                    throw InvalidArgument(f.filename().string() + ": " + first.field + ": " + first.rule);
                }
                const auto utts = user_utterances(script);
                std::vector<Waveform> audio;
                for (std::size_t k = 0; k < utts.size(); ++k) {
                    const auto p = audio_dir / script.conversation_id / (std::to_string(k) + ".wav");
                    if (fs::exists(p)) {
                        audio.push_back(read_wav(p));
                    } else if (placeholder) {
                        audio.push_back(placeholder_utterance(utts[k].text, seed + k));
                    } else {
                        throw InvalidArgument("missing utterance audio " + p.string());
                    }
                }
                const auto id = script.conversation_id + "-" +
                                dataset_name(d, m, m == NoiseMode::None ? std::nullopt : std::optional<int>(snr));
                auto built = assemble_session(audio, script, d, seed + static_cast<std::uint64_t>(n), id);
                if (m != NoiseMode::None) {
                    auto mixed = mix_noise(built.waveform, built.manifest, m, snr, *noise,
                                           seed + 1000003ULL * static_cast<std::uint64_t>(n + 1));
                    mixed.manifest.noise_source = noise_file.filename().string();
                    built = {std::move(mixed.waveform), std::move(mixed.manifest)};
                }
                write_wav(corpus_out / (id + ".wav"), built.waveform);
                save_manifest(corpus_out / (id + ".manifest.json"), built.manifest);
                ++n;
            }
            std::cout << "built " << n << " sessions in " << corpus_out.string() << "\n";
        } else if (*run) {
            StreamOptions opts;
            opts.chunk_ms = chunk_ms;
            opts.clock_mode = parse_clock_mode(clock);
            opts.drain_timeout_ms = drain_ms;
            const auto trace = run_session(read_wav(session_wav), load_manifest(session_manifest), endpoint, opts);
            save_trace(trace_out, trace);
            if (!trace.complete) {
                std::cerr << "run: " << trace.session_id << ": " << trace.failure.value_or("incomplete") << "\n";
                return 1;
            }
            std::cout << "trace written to " << trace_out.string() << "\n";
        } else if (*serve) {
            const BehaviorScript behavior = behavior_file.empty() ? BehaviorScript{} : load_behavior(behavior_file);
            if (behavior.early_reply_lead_ms > 0)
                std::cerr << "mock-serve: early_reply_lead_ms needs lookahead and is only honoured on the virtual clock\n";
            MockServer server(behavior, static_cast<std::uint16_t>(port), host);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << host << ":" << server.port() << std::endl;
            server.run(g_stop.get_token());
        } else if (*seg) {
            auto vad = make_vad(vad_spec);
            const auto t = extract_timeline(read_wav(seg_in), *vad, vad_opts);
            if (seg_out.empty()) {
                std::cout << segments_to_json(t.segments).dump(2) << "\n";
            } else {
                save_segments(seg_out, t.segments);
            }
        } else if (*evc) {
            const SegmentTimeline model{Channel::Model, load_segments(ev_timeline)};
            const auto s = detect_events(load_manifest(ev_manifest), model, det);
            save_session_events(ev_out, s);
            for (const auto& e : s.events) std::cout << to_json(e).dump() << "\n";
        } else if (*an) {
            const auto manifests = load_manifest_dir(an_manifests);
            const auto sessions = load_all_session_events(an_events);
            std::vector<QualityRecord> quality;
            if (!an_scores.empty()) quality = load_quality(an_scores);
            auto report = aggregate(sessions, quality, &manifests);
            report.model = model_name;
            report.dataset = dataset;
            const auto ext = an_out.extension().string();
            if (ext == ".csv") {
                write_file(an_out, render_csv({report}));
            } else if (ext == ".md") {
                write_file(an_out, render_markdown({report}));
            } else {
                write_file(an_out, to_json(report).dump(2) + "\n");
            }
            std::cout << render_markdown({report});
        } else if (*plot) {
            write_plots(plot_out, load_reports(plot_report));
            std::cout << "wrote sir_by_type.svg and srir_by_type.svg to " << plot_out.string() << "\n";
        } else if (*pipe) {
            const auto config = load_pipeline_config(config_path);
            const auto result = run_pipeline(config, [](const std::string& msg) { std::cerr << msg << "\n"; });
            for (const auto& [stage, t] : result.stages)
                std::cout << stage << ": " << t.ran << " ran, " << t.skipped << " skipped\n";
            for (const auto& p : result.reports) std::cout << p.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
