#include "ptk/data/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "ptk/common/binary_io.hpp"
#include "ptk/common/error.hpp"

namespace ptk::data {

void validate_pipeline_clip(const AudioClip& clip) {
  if (!(clip.sample_rate > 0.0)) throw ValueError("audio " + clip.id + ": sample rate must be positive");
  const double d = clip.duration();
  if (d < kMinClipSeconds || d > kMaxClipSeconds) {
    throw ValueError("audio " + clip.id + ": duration " + std::to_string(d) + " s outside [0.1, 60] s");
  }
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::ostringstream out(std::ios::binary);
  io::write_magic(out, "RIFF");
  io::write_pod(out, static_cast<std::uint32_t>(36 + data_bytes));
  io::write_magic(out, "WAVE");
  io::write_magic(out, "fmt ");
  io::write_pod(out, std::uint32_t{16});
  io::write_pod(out, std::uint16_t{1});  // PCM
  io::write_pod(out, std::uint16_t{1});  // mono
  io::write_pod(out, rate);
  io::write_pod(out, static_cast<std::uint32_t>(rate * 2));
  io::write_pod(out, std::uint16_t{2});
  io::write_pod(out, std::uint16_t{16});
  io::write_magic(out, "data");
  io::write_pod(out, data_bytes);
  for (double s : clip.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    io::write_pod(out, static_cast<std::int16_t>(std::lround(c * 32767.0)));
  }
  io::write_file(path, out.str());
}

AudioClip read_wav(const std::filesystem::path& path) {
  const std::vector<char> bytes = io::read_file(path);
  auto u32 = [&](std::size_t at) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + at, 4);
    return v;
  };
  auto u16 = [&](std::size_t at) {
    std::uint16_t v;
    std::memcpy(&v, bytes.data() + at, 2);
    return v;
  };
  if (bytes.size() < 12 || std::string_view(bytes.data(), 4) != "RIFF" ||
      std::string_view(bytes.data() + 8, 4) != "WAVE") {
    throw FormatError("not a RIFF/WAVE file: " + path.string());
  }
  AudioClip clip;
  clip.id = path.stem().string();
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view tag(bytes.data() + pos, 4);
    const std::uint32_t size = u32(pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError("truncated chunk in " + path.string());
    if (tag == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk in " + path.string());
      const std::uint16_t format = u16(body);
      const std::uint16_t channels = u16(body + 2);
      const std::uint16_t bits = u16(body + 14);
      if (format != 1 || bits != 16) throw FormatError("only 16-bit PCM WAV is supported: " + path.string());
      if (channels != 1) throw FormatError("mono audio required: " + path.string());
      clip.sample_rate = u32(body + 4);
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk in " + path.string());
      const std::size_t n = size / 2;
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t s;
        std::memcpy(&s, bytes.data() + body + 2 * i, 2);
        clip.samples[i] = static_cast<double>(s) / 32767.0;
      }
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError("no data chunk in " + path.string());
}

}  // namespace ptk::data
