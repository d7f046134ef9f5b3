#include "fdh/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fdh/client.hpp"
#include "fdh/corpus.hpp"
#include "fdh/hash.hpp"
#include "fdh/judge.hpp"
#include "fdh/metrics.hpp"
#include "fdh/scriptgen.hpp"
#include "fdh/trace.hpp"

namespace fdh {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, std::string session, const std::string& detail)
    : Error("stage " + stage + " failed" + (session.empty() ? "" : " for session " + session) + ": " + detail),
      stage_(std::move(stage)),
      session_(std::move(session)) {}

int PipelineResult::total_ran() const {
    int n = 0;
    for (const auto& [name, t] : stages) n += t.ran;
    return n;
}

std::string dataset_name(Difficulty d, NoiseMode m, std::optional<int> snr_db) {
    std::string name(1, static_cast<char>(std::toupper(to_string(d)[0])));
    if (m != NoiseMode::None) name += "-" + to_string(m) + (snr_db ? std::to_string(*snr_db) : "");
    return name;
}

Waveform placeholder_utterance(const std::string& text, std::uint64_t seed) {
    std::istringstream in(text);
    std::size_t words = 0;
    for (std::string w; in >> w;) ++words;
    const std::size_t n = static_cast<std::size_t>(ms_to_samples(static_cast<Milliseconds>(std::max<std::size_t>(words, 1) * 300)));
    const double freq = 180.0 + static_cast<double>(seed % 7) * 20.0;
    return {kSampleRate, make_tone(n, freq, 0.3)};
}

// ---------------------------------------------------------------- config

namespace {

using boost::property_tree::ptree;

std::string unquote(std::string v) {
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t");
    if (b == std::string::npos) return {};
    v = v.substr(b, e - b + 1);
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
        v = v.substr(1, v.size() - 2);
    return v;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string s = unquote(v);
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = unquote(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class Section {
public:
    Section(const ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> str(const char* key) const {
        if (!tree_) return std::nullopt;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        return unquote(it->second.data());
    }
    template <class T>
    T get(const char* key, T fallback) const {
        const auto s = str(key);
        if (!s) return fallback;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (*s == "true" || *s == "1" || *s == "yes") return true;
                if (*s == "false" || *s == "0" || *s == "no") return false;
                throw std::invalid_argument(*s);
            } else if constexpr (std::is_floating_point_v<T>) {
                return static_cast<T>(std::stod(*s));
            } else {
                std::size_t used = 0;
                const auto v = std::stoll(*s, &used);
                if (used != s->size()) throw std::invalid_argument(*s);
                return static_cast<T>(v);
            }
        } catch (const std::exception&) {
            throw ParseError("config [" + name_ + "] " + key + ": invalid value '" + *s + "'");
        }
    }

private:
    const ptree* tree_;
    std::string name_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

PipelineConfig parse_pipeline_config(const std::string& text, const fs::path& base_dir) {
    ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    auto section = [&](const std::string& name) {
        const auto it = tree.find(name);
        return Section(it == tree.not_found() ? nullptr : &it->second, name);
    };

    PipelineConfig c;
    const auto pipe = section("pipeline");
    c.work_dir = resolve(base_dir, pipe.str("work_dir").value_or("fd-work"));
    c.workers = pipe.get<int>("workers", 4);
    if (c.workers < 1) throw ParseError("config [pipeline] workers must be at least 1");

    const auto gen = section("generate");
    c.generate = gen.get<bool>("enabled", false);
    if (c.generate) {
        const auto topics = gen.str("topics");
        if (!topics) throw ParseError("config [generate] needs topics");
        c.topics_file = resolve(base_dir, *topics);
        c.generate_count = gen.get<int>("count", 0);
        if (auto r = gen.str("replay")) c.generate_replay = resolve(base_dir, *r);
        c.generate_base_url = gen.str("base_url");
        c.generate_model = gen.str("model").value_or(c.generate_model);
        if (!c.generate_replay && !c.generate_base_url)
            throw ParseError("config [generate] needs replay or base_url");
    }

    const auto corpus = section("corpus");
    if (auto s = corpus.str("scripts_dir")) {
        c.scripts_dir = resolve(base_dir, *s);
    } else if (!c.generate) {
        throw ParseError("config [corpus] needs scripts_dir");
    }
    c.audio_dir = resolve(base_dir, corpus.str("audio_dir").value_or("audio"));
    c.placeholder_audio = corpus.get<bool>("placeholder_audio", false);
    if (auto v = corpus.str("difficulties")) {
        c.difficulties.clear();
        for (const auto& d : split_list(*v)) c.difficulties.push_back(parse_difficulty(d));
    }
    if (auto v = corpus.str("noise_modes")) {
        c.noise_modes.clear();
        for (const auto& m : split_list(*v)) c.noise_modes.push_back(parse_noise_mode(m));
    }
    if (auto v = corpus.str("snr_db")) {
        c.snr_db.clear();
        for (const auto& s : split_list(*v)) {
            try {
                c.snr_db.push_back(std::stoi(s));
            } catch (const std::exception&) {
                throw ParseError("config [corpus] snr_db: invalid value '" + s + "'");
            }
        }
    }
    if (auto v = corpus.str("noise")) c.noise_file = resolve(base_dir, *v);
    c.seed = corpus.get<std::uint64_t>("seed", 1);
    const bool noisy = std::any_of(c.noise_modes.begin(), c.noise_modes.end(),
                                   [](NoiseMode m) { return m != NoiseMode::None; });
    if (noisy && !c.noise_file) throw ParseError("config [corpus] noise modes other than none need a noise file");
    if (c.difficulties.empty() || c.noise_modes.empty()) throw ParseError("config [corpus] lists must not be empty");

    for (const auto& [name, sub] : tree) {
        if (!name.starts_with("endpoint.")) continue;
        const Section s(&sub, name);
        EndpointConfig e;
        e.name = name.substr(9);
        const auto url = s.str("url");
        if (!url) throw ParseError("config [" + name + "] needs url");
        e.url = url->starts_with("mock:") ? "mock:" + resolve(base_dir, url->substr(5)).string() : *url;
        e.chunk_ms = s.get<Milliseconds>("chunk_ms", 80);
        e.clock = s.str("clock").value_or(url->starts_with("mock:") ? "virtual" : "real");
        parse_clock_mode(e.clock);
        if (e.chunk_ms <= 0) throw ParseError("config [" + name + "] chunk_ms must be positive");
        c.endpoints.push_back(e);
    }
    if (c.endpoints.empty()) throw ParseError("config needs at least one [endpoint.NAME] section");

    const auto seg = section("segment");
    c.vad = seg.str("vad").value_or("builtin");
    if (c.vad.starts_with("file:")) c.vad = "file:" + resolve(base_dir, c.vad.substr(5)).string();
    c.vad_options.threshold = seg.get<double>("threshold", 0.5);
    c.vad_options.min_speech_ms = seg.get<Milliseconds>("min_speech_ms", 250);
    c.vad_options.min_silence_ms = seg.get<Milliseconds>("min_silence_ms", 300);

    const auto ev = section("events");
    c.detector.t_early_ms = ev.get<Milliseconds>("t_early_ms", 1000);
    c.detector.t_si_max_ms = ev.get<Milliseconds>("t_si_max_ms", 15000);
    c.detector.alignment_slack_ms = ev.get<Milliseconds>("alignment_slack_ms", 60000);
    const auto den = ev.str("ni_denominator").value_or("all_gaps");
    if (den == "all_gaps") {
        c.detector.ni_denominator = NoiseDenominator::AllGaps;
    } else if (den == "gaps_with_model_speech") {
        c.detector.ni_denominator = NoiseDenominator::GapsWithModelSpeech;
    } else {
        throw ParseError("config [events] ni_denominator must be all_gaps or gaps_with_model_speech");
    }
    validate_config(c.detector);

    if (auto s = section("analyze").str("scores")) c.scores_file = resolve(base_dir, *s);

    const auto judge = section("judge");
    if (auto r = judge.str("replay")) c.judge_replay = resolve(base_dir, *r);
    c.judge_base_url = judge.str("base_url");
    c.judge_model = judge.str("model").value_or(c.judge_model);
    c.judge_temperature = judge.get<double>("temperature", 0.2);
    c.judge_in_flight = judge.get<int>("max_in_flight", 4);
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str(), fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------- helpers

namespace {

std::string file_hash(const fs::path& p) {
    return fs::exists(p) ? sha256_file(p) : "missing";
}

class Stamps {
public:
    explicit Stamps(fs::path root) : root_(std::move(root)) {}

    bool fresh(const std::string& stage, const std::string& key, const std::string& hash,
               const std::vector<fs::path>& outputs) const {
        std::ifstream in(path(stage, key));
        std::string recorded;
        if (!(in >> recorded) || recorded != hash) return false;
        return std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
    }

    void record(const std::string& stage, const std::string& key, const std::string& hash) const {
        fs::create_directories(root_ / stage);
        std::ofstream(path(stage, key), std::ios::trunc) << hash << '\n';
    }

private:
    fs::path path(const std::string& stage, const std::string& key) const {
        return root_ / stage / (key + ".sha256");
    }
    fs::path root_;
};

// Runs fn(i) on up to `workers` threads. After the first exception no new
// items start; the exception is rethrown once running items finish.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto t = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), std::max<std::size_t>(n, 1));
        for (std::size_t k = 0; k < t; ++k) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& salt) {
    const auto h = sha256_hex(std::to_string(base) + ":" + salt);
    return std::stoull(h.substr(0, 16), nullptr, 16);
}

struct Dataset {
    std::string name;
    Difficulty difficulty;
    NoiseMode noise;
    std::optional<int> snr;
};

std::vector<Dataset> datasets_of(const PipelineConfig& c) {
    std::vector<Dataset> out;
    for (auto d : c.difficulties) {
        for (auto m : c.noise_modes) {
            if (m == NoiseMode::None) {
                out.push_back({dataset_name(d, m, std::nullopt), d, m, std::nullopt});
                continue;
            }
            for (int snr : c.snr_db) out.push_back({dataset_name(d, m, snr), d, m, snr});
        }
    }
    return out;
}

std::vector<std::string> read_topics(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open topics file " + path.string());
    std::vector<std::string> topics;
    for (std::string line; std::getline(in, line);) {
        line = unquote(line);
        if (!line.empty() && line[0] != '#') topics.push_back(line);
    }
    return topics;
}

std::vector<ConversationScript> load_scripts(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("scripts directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<ConversationScript> scripts;
    for (const auto& f : files) {
        ValidationResult parse_issues;
        auto s = load_script(f.string(), &parse_issues);
        auto v = validate_script(s);
        v.violations.insert(v.violations.end(), parse_issues.violations.begin(), parse_issues.violations.end());
        if (!v.ok()) throw Error(f.filename().string() + ": " + v.violations.front().field + ": " + v.violations.front().rule);
        scripts.push_back(std::move(s));
    }
    return scripts;
}

struct Session {
    std::string id;
    const ConversationScript* script;
    const Dataset* dataset;
};

std::unique_ptr<ChatClient> make_chat_client(const std::optional<fs::path>& replay,
                                             const std::optional<std::string>& base_url,
                                             std::unique_ptr<ChatClient>& upstream_holder) {
    if (base_url) upstream_holder = std::make_unique<OpenAiChatClient>(*base_url);
    if (replay) return std::make_unique<ReplayChatClient>(*replay, upstream_holder.get());
    return std::move(upstream_holder);
}

} // namespace

// ---------------------------------------------------------------- stages

PipelineResult run_pipeline(const PipelineConfig& c, const PipelineLog& log_fn) {
    auto log = [&](const std::string& msg) {
        if (log_fn) log_fn(msg);
    };
    PipelineResult result;
    std::mutex tally_mu;
    auto tally = [&](const std::string& stage, bool ran) {
        std::lock_guard lock(tally_mu);
        auto& t = result.stages[stage];
        (ran ? t.ran : t.skipped) += 1;
    };
    const Stamps stamps(c.work_dir / ".stamps");
    fs::create_directories(c.work_dir);

    // generate
    fs::path scripts_dir = c.scripts_dir;
    if (c.generate) {
        scripts_dir = c.work_dir / "scripts";
        try {
            const auto topics = read_topics(c.topics_file);
            const json in{{"topics", topics},
                          {"count", c.generate_count},
                          {"model", c.generate_model},
                          {"replay", c.generate_replay ? file_hash(*c.generate_replay) : ""},
                          {"base_url", c.generate_base_url.value_or("")}};
            const auto hash = sha256_hex(in.dump());
            if (stamps.fresh("generate", "scripts", hash, {scripts_dir})) {
                tally("generate", false);
            } else {
                std::unique_ptr<ChatClient> upstream;
                auto client = make_chat_client(c.generate_replay, c.generate_base_url, upstream);
                GenerateOptions opts;
                opts.model = c.generate_model;
                opts.max_in_flight = c.workers;
                const auto scripts = generate_scripts(topics, c.generate_count, *client, opts);
                fs::create_directories(scripts_dir);
                for (const auto& s : scripts)
                    std::ofstream(scripts_dir / (s.conversation_id + ".json"), std::ios::trunc)
                        << to_json(s).dump(2) << '\n';
                stamps.record("generate", "scripts", hash);
                tally("generate", true);
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError("generate", "", e.what());
        }
    }

    std::vector<ConversationScript> scripts;
    try {
        scripts = load_scripts(scripts_dir);
    } catch (const Error& e) {
        throw StageError("build-corpus", "", e.what());
    }
    const auto datasets = datasets_of(c);
    std::vector<Session> sessions;
    for (const auto& d : datasets)
        for (const auto& s : scripts) sessions.push_back({s.conversation_id + "-" + d.name, &s, &d});

    // build-corpus
    std::optional<Waveform> noise;
    std::string noise_hash;
    if (c.noise_file) {
        noise_hash = file_hash(*c.noise_file);
        if (std::any_of(datasets.begin(), datasets.end(), [](const Dataset& d) { return d.noise != NoiseMode::None; })) {
            try {
                noise = read_wav(*c.noise_file);
            } catch (const Error& e) {
                throw StageError("build-corpus", "", e.what());
            }
        }
    }
    auto corpus_dir = [&](const Session& s) { return c.work_dir / "corpus" / s.dataset->name; };
    parallel_for(sessions.size(), c.workers, [&](std::size_t i) {
        const auto& s = sessions[i];
        try {
            const auto utts = user_utterances(*s.script);
            json audio_hashes = json::array();
            std::vector<fs::path> audio_paths;
            for (std::size_t k = 0; k < utts.size(); ++k) {
                audio_paths.push_back(c.audio_dir / s.script->conversation_id / (std::to_string(k) + ".wav"));
                const bool have = fs::exists(audio_paths.back());
                if (!have && !c.placeholder_audio)
                    throw Error("missing utterance audio " + audio_paths.back().string());
                audio_hashes.push_back(have ? file_hash(audio_paths.back()) : "placeholder");
            }
            const json in{{"script", to_json(*s.script)},
                          {"audio", audio_hashes},
                          {"difficulty", to_string(s.dataset->difficulty)},
                          {"noise_mode", to_string(s.dataset->noise)},
                          {"snr", s.dataset->snr ? *s.dataset->snr : -999},
                          {"noise", s.dataset->noise == NoiseMode::None ? "" : noise_hash},
                          {"seed", c.seed}};
            const auto hash = sha256_hex(in.dump());
            const auto wav_path = corpus_dir(s) / (s.id + ".wav");
            const auto man_path = corpus_dir(s) / (s.id + ".manifest.json");
            if (stamps.fresh("build-corpus", s.id, hash, {wav_path, man_path})) {
                tally("build-corpus", false);
                return;
            }
            std::vector<Waveform> audio;
            for (std::size_t k = 0; k < utts.size(); ++k) {
                audio.push_back(fs::exists(audio_paths[k])
                                    ? read_wav(audio_paths[k])
                                    : placeholder_utterance(utts[k].text, derive_seed(c.seed, s.id + "/" + std::to_string(k))));
            }
            auto built = assemble_session(audio, *s.script, s.dataset->difficulty, derive_seed(c.seed, s.id), s.id);
            if (s.dataset->noise != NoiseMode::None) {
                auto mixed = mix_noise(built.waveform, built.manifest, s.dataset->noise, *s.dataset->snr, *noise,
                                       derive_seed(c.seed, s.id + "/noise"));
                mixed.manifest.noise_source = c.noise_file->filename().string();
                built = {std::move(mixed.waveform), std::move(mixed.manifest)};
            }
            fs::create_directories(corpus_dir(s));
            write_wav(wav_path, built.waveform);
            save_manifest(man_path, built.manifest);
            stamps.record("build-corpus", s.id, hash);
            tally("build-corpus", true);
        } catch (const Error& e) {
            throw StageError("build-corpus", s.id, e.what());
        }
    });
    log("build-corpus: " + std::to_string(result.stages["build-corpus"].ran) + " built, " +
        std::to_string(result.stages["build-corpus"].skipped) + " up to date");

    const bool judging = c.judge_replay || c.judge_base_url;
    std::unique_ptr<ChatClient> judge_upstream;
    std::unique_ptr<ChatClient> judge_client;
    if (judging) judge_client = make_chat_client(c.judge_replay, c.judge_base_url, judge_upstream);

    const json vad_settings{{"vad", c.vad},
                            {"threshold", c.vad_options.threshold},
                            {"min_speech_ms", c.vad_options.min_speech_ms},
                            {"min_silence_ms", c.vad_options.min_silence_ms}};
    const json detector_settings{{"t_early_ms", c.detector.t_early_ms},
                                 {"t_si_max_ms", c.detector.t_si_max_ms},
                                 {"alignment_slack_ms", c.detector.alignment_slack_ms},
                                 {"ni", c.detector.ni_denominator == NoiseDenominator::AllGaps ? "all" : "model"}};

    std::vector<MetricReport> reports;
    for (const auto& ep : c.endpoints) {
        const auto run_root = c.work_dir / "runs" / ep.name;
        const std::string behavior_hash = ep.url.starts_with("mock:") ? file_hash(ep.url.substr(5)) : "";

        parallel_for(sessions.size(), c.workers, [&](std::size_t i) {
            const auto& s = sessions[i];
            const auto dir = run_root / s.dataset->name;
            const auto wav_path = corpus_dir(s) / (s.id + ".wav");
            const auto man_path = corpus_dir(s) / (s.id + ".manifest.json");
            const auto trace_dir = dir / "traces";
            const auto out_wav = trace_dir / (s.id + ".out.wav");
            const auto trace_file = trace_dir / (s.id + ".trace.jsonl");

            // run
            {
                const json in{{"audio", file_hash(wav_path)}, {"manifest", file_hash(man_path)},
                              {"url", ep.url}, {"behavior", behavior_hash},
                              {"chunk_ms", ep.chunk_ms}, {"clock", ep.clock}};
                const auto hash = sha256_hex(in.dump());
                const auto key = ep.name + "." + s.id;
                if (stamps.fresh("run", key, hash, {trace_file, out_wav})) {
                    tally("run", false);
                } else {
                    DuplexTrace trace;
                    try {
                        StreamOptions opts;
                        opts.chunk_ms = ep.chunk_ms;
                        opts.clock_mode = parse_clock_mode(ep.clock);
                        trace = run_session(read_wav(wav_path), load_manifest(man_path), ep.url, opts);
                        save_trace(trace_dir, trace);
                    } catch (const Error& e) {
                        throw StageError("run", s.id, e.what());
                    }
                    if (!trace.complete) throw StageError("run", s.id, trace.failure.value_or("incomplete trace"));
                    stamps.record("run", key, hash);
                    tally("run", true);
                }
            }

            // segment
            const auto timeline_path = dir / "timelines" / (s.id + ".model.json");
            {
                std::string vad_spec = c.vad;
                if (vad_spec.starts_with("file:") && fs::is_directory(vad_spec.substr(5)))
                    vad_spec = "file:" + (fs::path(vad_spec.substr(5)) / (s.id + ".json")).string();
                json in{{"out", file_hash(out_wav)}, {"settings", vad_settings}};
                if (vad_spec.starts_with("file:")) in["file"] = file_hash(vad_spec.substr(5));
                const auto hash = sha256_hex(in.dump());
                const auto key = ep.name + "." + s.id;
                if (stamps.fresh("segment", key, hash, {timeline_path})) {
                    tally("segment", false);
                } else {
                    try {
                        auto vad = make_vad(vad_spec);
                        const auto t = extract_timeline(read_wav(out_wav), *vad, c.vad_options, Channel::Model);
                        fs::create_directories(timeline_path.parent_path());
                        save_segments(timeline_path, t.segments);
                    } catch (const Error& e) {
                        throw StageError("segment", s.id, e.what());
                    }
                    stamps.record("segment", key, hash);
                    tally("segment", true);
                }
            }

            // events
            const auto events_dir = dir / "events";
            {
                const json in{{"manifest", file_hash(man_path)}, {"timeline", file_hash(timeline_path)},
                              {"detector", detector_settings}};
                const auto hash = sha256_hex(in.dump());
                const auto key = ep.name + "." + s.id;
                if (stamps.fresh("events", key, hash,
                                 {events_dir / (s.id + ".events.jsonl"), events_dir / (s.id + ".counts.json")})) {
                    tally("events", false);
                } else {
                    try {
                        const SegmentTimeline model{Channel::Model, load_segments(timeline_path)};
                        save_session_events(events_dir, detect_events(load_manifest(man_path), model, c.detector));
                    } catch (const Error& e) {
                        throw StageError("events", s.id, e.what());
                    }
                    stamps.record("events", key, hash);
                    tally("events", true);
                }
            }

            // quality
            if (!judging) return;
            const auto quality_path = dir / "quality" / (s.id + ".jsonl");
            const json in{{"trace", file_hash(trace_file)},
                          {"events", file_hash(events_dir / (s.id + ".events.jsonl"))},
                          {"manifest", file_hash(man_path)},
                          {"model", c.judge_model},
                          {"temperature", c.judge_temperature},
                          {"replay", c.judge_replay ? file_hash(*c.judge_replay) : ""}};
            const auto hash = sha256_hex(in.dump());
            const auto key = ep.name + "." + s.id;
            if (stamps.fresh("quality", key, hash, {quality_path})) {
                tally("quality", false);
                return;
            }
            try {
                const auto manifest = load_manifest(man_path);
                const auto trace = load_trace(trace_dir, s.id);
                const auto events = load_session_events(events_dir, s.id);
                std::vector<ReplyToScore> items;
                std::vector<int> segment_of;
                for (const auto& e : events.events) {
                    if (e.kind != EventKind::SuccessReply && e.kind != EventKind::SuccessReplyToInterrupt) continue;
                    const auto idx = static_cast<std::size_t>(*e.user_segment_index);
                    const Milliseconds lo = manifest.segments[idx].start_ms;
                    const Milliseconds hi = idx + 1 < manifest.segments.size()
                                                ? manifest.segments[idx + 1].start_ms
                                                : std::numeric_limits<Milliseconds>::max();
                    std::string reply;
                    for (const auto& te : trace.events) {
                        if (te.kind == TraceEventKind::TextReceived && te.text && te.t_ms >= lo && te.t_ms < hi)
                            reply += (reply.empty() ? "" : " ") + *te.text;
                    }
                    if (reply.empty()) continue;
                    std::string context;
                    for (std::size_t k = 0; k <= idx; ++k) context += "User: " + manifest.segments[k].text + "\n";
                    items.push_back({context, reply});
                    segment_of.push_back(static_cast<int>(idx));
                }
                JudgeOptions jo;
                jo.model = c.judge_model;
                jo.temperature = c.judge_temperature;
                const auto batch = score_replies(items, *judge_client, jo, c.judge_in_flight);
                for (const auto& reason : batch.failure_reasons) log("quality: " + s.id + ": " + reason);
                fs::create_directories(quality_path.parent_path());
                std::ofstream out(quality_path, std::ios::trunc);
                for (std::size_t k = 0; k < items.size(); ++k) {
                    if (!batch.scores[k]) continue;
                    QualityRecord q;
                    q.session_id = s.id;
                    q.segment_index = segment_of[k];
                    q.subjective = batch.scores[k];
                    out << to_json(q).dump() << '\n';
                }
            } catch (const Error& e) {
                throw StageError("quality", s.id, e.what());
            }
            stamps.record("quality", key, hash);
            tally("quality", true);
        });

        // analyze
        for (const auto& d : datasets) {
            const auto dir = run_root / d.name;
            const auto report_dir = c.work_dir / "reports" / ep.name / d.name;
            const auto report_path = report_dir / "report.json";
            try {
                json in = json::array();
                std::vector<fs::path> quality_files;
                for (const auto& s : sessions) {
                    if (s.dataset != &d) continue;
                    in.push_back({file_hash(dir / "events" / (s.id + ".events.jsonl")),
                                  file_hash(dir / "events" / (s.id + ".counts.json")),
                                  file_hash(corpus_dir(s) / (s.id + ".manifest.json"))});
                    const auto q = dir / "quality" / (s.id + ".jsonl");
                    if (fs::exists(q)) {
                        quality_files.push_back(q);
                        in.push_back(file_hash(q));
                    }
                }
                std::optional<fs::path> scores;
                if (c.scores_file) {
                    std::string p = c.scores_file->string();
                    if (const auto pos = p.find("{endpoint}"); pos != std::string::npos) p.replace(pos, 10, ep.name);
                    scores = p;
                    in.push_back(file_hash(*scores));
                }
                in.push_back({ep.name, d.name});
                const auto hash = sha256_hex(in.dump());
                if (stamps.fresh("analyze", ep.name + "." + d.name, hash, {report_path})) {
                    tally("analyze", false);
                    reports.push_back(load_reports(report_path).front());
                    continue;
                }
                std::vector<SessionEvents> evs;
                std::map<std::string, SessionManifest> manifests;
                std::vector<QualityRecord> quality;
                for (const auto& s : sessions) {
                    if (s.dataset != &d) continue;
                    evs.push_back(load_session_events(dir / "events", s.id));
                    manifests[s.id] = load_manifest(corpus_dir(s) / (s.id + ".manifest.json"));
                }
                for (const auto& q : quality_files) {
                    auto more = load_quality(q);
                    quality.insert(quality.end(), more.begin(), more.end());
                }
                if (scores) {
                    for (auto& q : load_quality(*scores))
                        if (manifests.contains(q.session_id)) quality.push_back(std::move(q));
                }
                auto report = aggregate(evs, quality, &manifests);
                report.model = ep.name;
                report.dataset = d.name;
                fs::create_directories(report_dir);
                std::ofstream(report_path, std::ios::trunc) << to_json(report).dump(2) << '\n';
                stamps.record("analyze", ep.name + "." + d.name, hash);
                tally("analyze", true);
                reports.push_back(std::move(report));
            } catch (const Error& e) {
                throw StageError("analyze", "", ep.name + "/" + d.name + ": " + e.what());
            }
        }
        log("run " + ep.name + ": " + std::to_string(result.stages["run"].ran) + " streamed, " +
            std::to_string(result.stages["run"].skipped) + " up to date");
    }

    // report
    const auto report_dir = c.work_dir / "reports";
    json in = json::array();
    for (const auto& r : reports) in.push_back(to_json(r));
    const auto hash = sha256_hex(in.dump());
    if (stamps.fresh("report", "all", hash, {report_dir / "report.md", report_dir / "sir_by_type.svg"})) {
        tally("report", false);
    } else {
        try {
            write_report_files(report_dir, reports);
            write_plots(report_dir, reports);
        } catch (const Error& e) {
            throw StageError("report", "", e.what());
        }
        stamps.record("report", "all", hash);
        tally("report", true);
    }
    result.reports = {report_dir / "report.json", report_dir / "report.csv", report_dir / "report.md"};
    return result;
}

} // namespace fdh
