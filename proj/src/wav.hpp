// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>

#include "common.hpp"

namespace rirkit {

// Mono RIFF/WAVE. Read accepts PCM16 and IEEE float32; write emits float32.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace rirkit
