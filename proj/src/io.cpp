#include "swg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace swg::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

WavFormat parse_wav_format(const std::string& s) {
    if (s == "pcm16") return WavFormat::pcm16;
    if (s == "float32" || s == "f32") return WavFormat::float32;
    throw std::invalid_argument("unknown wav format '" + s + "' (expected pcm16|float32)");
}

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }
void put_f32(std::string& out, float v) { out.append(reinterpret_cast<const char*>(&v), 4); }

namespace {
void need(const std::string& in, std::size_t pos, std::size_t n) {
    if (pos + n > in.size()) throw std::runtime_error("unexpected end of data at byte " + std::to_string(pos));
}
void put_u16(std::string& out, std::uint16_t v) { out.append(reinterpret_cast<const char*>(&v), 2); }
std::uint16_t get_u16(const std::string& in, std::size_t& pos) {
    need(in, pos, 2);
    std::uint16_t v;
    std::memcpy(&v, in.data() + pos, 2);
    pos += 2;
    return v;
}
}  // namespace

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    need(in, pos, 4);
    std::uint32_t v;
    std::memcpy(&v, in.data() + pos, 4);
    pos += 4;
    return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
    need(in, pos, 8);
    std::uint64_t v;
    std::memcpy(&v, in.data() + pos, 8);
    pos += 8;
    return v;
}

float get_f32(const std::string& in, std::size_t& pos) {
    need(in, pos, 4);
    float v;
    std::memcpy(&v, in.data() + pos, 4);
    pos += 4;
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// WAV

namespace {
constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;
}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const std::string where = path.string() + ": ";
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
        throw std::runtime_error(where + "not a RIFF/WAVE file");

    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        pos += 4;
        const std::uint32_t size = get_u32(bytes, pos);
        if (id == "fmt ") {
            if (size < 16 || pos + size > bytes.size()) throw std::runtime_error(where + "truncated fmt chunk");
            std::size_t p = pos;
            format = get_u16(bytes, p);
            channels = get_u16(bytes, p);
            rate = get_u32(bytes, p);
            p += 6;  // byte rate + block align
            bits = get_u16(bytes, p);
            if (format == kFormatExtensible && size >= 26) {
                p += 2 + 2 + 4;  // cbSize, valid bits, channel mask
                format = get_u16(bytes, p);
            }
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw std::runtime_error(where + "missing fmt chunk before data chunk");
            if (pos + size > bytes.size()) throw std::runtime_error(where + "truncated data chunk");
            if (channels != 1)
                throw std::runtime_error(where + "unsupported channel count " + std::to_string(channels) +
                                         " (mono only)");
            if (rate == 0) throw std::runtime_error(where + "zero sample rate");
            AudioClip clip;
            clip.sample_rate = static_cast<int>(rate);
            if (format == kFormatPcm && bits == 16) {
                const std::size_t n = size / 2;
                clip.samples.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    std::int16_t s;
                    std::memcpy(&s, bytes.data() + pos + 2 * i, 2);
                    clip.samples[i] = static_cast<double>(s) / 32767.0;
                }
            } else if (format == kFormatFloat && bits == 32) {
                const std::size_t n = size / 4;
                clip.samples.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    float s;
                    std::memcpy(&s, bytes.data() + pos + 4 * i, 4);
                    clip.samples[i] = static_cast<double>(s);
                }
            } else {
                throw std::runtime_error(where + "unsupported sample format (format " + std::to_string(format) +
                                         ", " + std::to_string(bits) + " bits)");
            }
            if (clip.samples.empty()) throw std::runtime_error(where + "empty data chunk");
            return clip;
        }
        pos += size + (size & 1u);
    }
    throw std::runtime_error(where + (have_fmt ? "missing data chunk" : "missing fmt chunk"));
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path, WavFormat format) {
    clip.validate();
    const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
    const std::uint16_t block = bits / 8;
    const auto data_size = static_cast<std::uint32_t>(clip.size() * block);
    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVE";
    out += "fmt ";
    put_u32(out, 16);
    put_u16(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * block);
    put_u16(out, block);
    put_u16(out, bits);
    out += "data";
    put_u32(out, data_size);
    for (double s : clip.samples) {
        if (format == WavFormat::pcm16) {
            const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
            out.append(reinterpret_cast<const char*>(&q), 2);
        } else {
            put_f32(out, static_cast<float>(s));
        }
    }
    write_file(path, out);
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".wav") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<AudioClip> read_wav_dir(const std::filesystem::path& dir) {
    std::vector<AudioClip> clips;
    for (const auto& p : list_wavs(dir)) clips.push_back(read_wav(p));
    if (clips.empty()) throw std::runtime_error("no .wav files in " + dir.string());
    return clips;
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest " + path.string());
    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            m.add({j.at("path").get<std::string>(), parse_drum_class(j.at("class").get<std::string>())});
        } catch (const std::exception& ex) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::string out;
    for (const auto& e : m.entries()) {
        nlohmann::json j;
        j["path"] = e.path;
        j["class"] = to_string(e.drum_class);
        out += j.dump() + "\n";
    }
    write_file(path, out);
}

std::filesystem::path resolve_entry(const std::filesystem::path& manifest_path, const ManifestEntry& e) {
    std::filesystem::path p(e.path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

// ---------------------------------------------------------------------------
// Embedding / envelope files

EmbeddingMatrix read_embedding(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 12 || bytes.compare(0, 4, "F32M") != 0)
        throw std::runtime_error(path.string() + ": missing F32M magic");
    std::size_t pos = 4;
    const std::uint32_t rows = get_u32(bytes, pos);
    const std::uint32_t cols = get_u32(bytes, pos);
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    if (bytes.size() != 12 + 4 * n)
        throw std::runtime_error(path.string() + ": expected " + std::to_string(n) + " values");
    EmbeddingMatrix m(rows, cols);
    for (std::size_t i = 0; i < n; ++i) m.data[i] = get_f32(bytes, pos);
    return m;
}

void write_embedding(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::string out = "F32M";
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) put_f32(out, static_cast<float>(v));
    write_file(path, out);
}

EnvelopeTable read_envelope(const std::filesystem::path& path, DrumClass cls) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 12 || bytes.compare(0, 4, "ENV1") != 0)
        throw std::runtime_error(path.string() + ": missing ENV1 magic");
    std::size_t pos = 4;
    const std::uint32_t len = get_u32(bytes, pos);
    const std::uint32_t rate = get_u32(bytes, pos);
    if (bytes.size() != 12 + 4 * static_cast<std::size_t>(len))
        throw std::runtime_error(path.string() + ": expected " + std::to_string(len) + " values");
    EnvelopeTable env;
    env.drum_class = cls;
    env.sample_rate = static_cast<int>(rate);
    env.values.resize(len);
    for (auto& v : env.values) v = get_f32(bytes, pos);
    return env;
}

void write_envelope(const EnvelopeTable& env, const std::filesystem::path& path) {
    std::string out = "ENV1";
    put_u32(out, static_cast<std::uint32_t>(env.size()));
    put_u32(out, static_cast<std::uint32_t>(env.sample_rate));
    for (double v : env.values) put_f32(out, static_cast<float>(v));
    write_file(path, out);
}

}  // namespace swg::io
