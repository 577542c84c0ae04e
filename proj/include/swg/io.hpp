#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swg/dsp.hpp"
#include "swg/envelope.hpp"
#include "swg/metrics.hpp"
#include "swg/sampler.hpp"

namespace swg::io {

enum class WavFormat { pcm16, float32 };

WavFormat parse_wav_format(const std::string& s);

/// Mono RIFF/WAVE, PCM16 or IEEE float32. Throws std::runtime_error with a
/// one-line reason on malformed or unsupported input.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const AudioClip& clip, const std::filesystem::path& path, WavFormat format = WavFormat::float32);

/// Sorted list of *.wav files directly inside `dir`.
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir);
std::vector<AudioClip> read_wav_dir(const std::filesystem::path& dir);

/// JSON lines: {"path": "...", "class": "..."} per line. Relative paths are
/// resolved against the manifest's directory by resolve_entry().
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
std::filesystem::path resolve_entry(const std::filesystem::path& manifest_path, const ManifestEntry& e);

/// "F32M", u32 rows, u32 cols, row-major f32 little-endian.
EmbeddingMatrix read_embedding(const std::filesystem::path& path);
void write_embedding(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// "ENV1", u32 length, u32 sample_rate, length x f32 little-endian.
EnvelopeTable read_envelope(const std::filesystem::path& path, DrumClass cls);
void write_envelope(const EnvelopeTable& env, const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint format.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
std::uint32_t get_u32(const std::string& in, std::size_t& pos);
std::uint64_t get_u64(const std::string& in, std::size_t& pos);
float get_f32(const std::string& in, std::size_t& pos);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace swg::io
