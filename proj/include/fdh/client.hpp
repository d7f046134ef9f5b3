#pragma once

#include <string>

#include "audio.hpp"
#include "manifest.hpp"
#include "mock.hpp"
#include "net.hpp"
#include "trace.hpp"

namespace fdh {

// Chunk sizes used by the three evaluated systems.
inline constexpr Milliseconds kChunkMsMoshi = 80;
inline constexpr Milliseconds kChunkMsFreezeOmni = 107;
inline constexpr Milliseconds kChunkMsVita = 200;

struct StreamOptions {
    Milliseconds chunk_ms = kChunkMsMoshi;
    ClockMode clock_mode = ClockMode::RealTime;
    Milliseconds connect_timeout_ms = 3000;
    // How long to keep listening for server output after EndIn.
    Milliseconds drain_timeout_ms = 60000;
};

// Streams `waveform` in paced chunks over TCP and records everything the
// server sends. Connection or protocol failures do not throw: the trace is
// returned with complete=false and `failure` naming the point of failure.
DuplexTrace run_session(const Waveform& waveform, const SessionManifest& manifest,
                        const Endpoint& endpoint, const StreamOptions& options);

// Virtual-clock replay against an in-process mock server that shares the
// simulated clock. Frames still pass through the wire codec.
DuplexTrace run_session_virtual(const Waveform& waveform, const SessionManifest& manifest,
                                const BehaviorScript& behavior, const StreamOptions& options);

// Dispatches on the endpoint spelling: "mock:BEHAVIOR.json" (virtual clock
// only) or "HOST:PORT" (real-time only).
DuplexTrace run_session(const Waveform& waveform, const SessionManifest& manifest,
                        const std::string& endpoint, const StreamOptions& options);

} // namespace fdh
