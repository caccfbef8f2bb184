// Copyright 2026 The sedkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sedkit/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sedkit/binio.hpp"

namespace sedkit {

namespace {

constexpr double kLogFloor = 1e-10;
constexpr float kStdFloor = 1e-8f;

struct WavReader {
  std::ifstream in;
  int64_t offset = 0;

  explicit WavReader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw ParseError(msg("wav: cannot open '", path, "'"));
  }

  void read_bytes(char* dst, int64_t n, const char* what) {
    in.read(dst, n);
    if (!in)
      throw ParseError(msg("wav: truncated while reading ", what, " at offset ", offset));
    offset += n;
  }

  uint32_t u32(const char* what) {
    unsigned char b[4];
    read_bytes(reinterpret_cast<char*>(b), 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }

  uint16_t u16(const char* what) {
    unsigned char b[2];
    read_bytes(reinterpret_cast<char*>(b), 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }

  void skip(int64_t n) {
    in.seekg(n, std::ios::cur);
    if (!in) throw ParseError(msg("wav: truncated chunk at offset ", offset));
    offset += n;
  }
};

}  // namespace

AudioClip read_wav(const std::string& path) {
  WavReader r(path);
  char tag[4];
  r.read_bytes(tag, 4, "RIFF tag");
  if (std::memcmp(tag, "RIFF", 4) != 0)
    throw ParseError(msg("wav: not a RIFF file (offset 0)"));
  r.u32("RIFF size");
  r.read_bytes(tag, 4, "WAVE tag");
  if (std::memcmp(tag, "WAVE", 4) != 0)
    throw ParseError(msg("wav: not a WAVE file (offset 8)"));

  int channels = 0, sample_rate = 0, bits = 0, format = 0;
  bool have_fmt = false;
  AudioClip clip;
  while (true) {
    if (!r.in.read(tag, 4)) break;  // normal EOF between chunks
    r.offset += 4;
    const uint32_t size = r.u32("chunk size");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const int64_t start = r.offset;
      format = r.u16("format type");
      channels = r.u16("channel count");
      sample_rate = static_cast<int>(r.u32("sample rate"));
      r.u32("data rate");
      r.u16("block align");
      bits = r.u16("bits per sample");
      if (r.offset - start < size) r.skip(size - (r.offset - start));
      have_fmt = true;
      if (format != 1)
        throw ParseError(msg("wav: unsupported codec ", format,
                             " (only PCM) at offset ", start));
      if (bits != 16)
        throw ParseError(msg("wav: unsupported bit depth ", bits,
                             " (only 16) at offset ", start));
      if (channels != 1 && channels != 2)
        throw ParseError(msg("wav: unsupported channel count ", channels,
                             " at offset ", start));
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt)
        throw ParseError(msg("wav: data chunk before fmt at offset ", r.offset - 8));
      const int64_t n_frames = size / (2 * channels);
      clip.samples.resize(n_frames);
      std::vector<char> raw(size);
      r.read_bytes(raw.data(), size, "sample data");
      for (int64_t i = 0; i < n_frames; ++i) {
        int32_t acc = 0;
        for (int ch = 0; ch < channels; ++ch) {
          const unsigned char* p =
              reinterpret_cast<const unsigned char*>(raw.data()) + (i * channels + ch) * 2;
          acc += static_cast<int16_t>(p[0] | (p[1] << 8));
        }
        clip.samples[i] = static_cast<float>(acc) / channels / 32768.0f;
      }
      clip.sample_rate = sample_rate;
      return clip;
    } else {
      r.skip(size + (size % 2));  // chunks are word-aligned
    }
  }
  throw ParseError(msg("wav: no data chunk found (offset ", r.offset, ")"));
}

void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(msg("wav: cannot write '", path, "'"));
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  binio::write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  binio::write_u32(out, 16);
  binio::write_u32(out, 1 | (1u << 16));  // PCM, mono
  binio::write_u32(out, static_cast<uint32_t>(clip.sample_rate));
  binio::write_u32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  binio::write_u32(out, 2 | (16u << 16));  // block align 2, 16 bits
  out.write("data", 4);
  binio::write_u32(out, data_bytes);
  for (float s : clip.samples) {
    float scaled = std::min(1.0f, std::max(-1.0f, s)) * 32768.0f;
    if (scaled > 32767.0f) scaled = 32767.0f;
    const auto v = static_cast<int16_t>(std::lrintf(scaled));
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 2);
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(int sample_rate, int n_bins, int n_mels) {
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_bins;
  fb.sample_rate = sample_rate;
  fb.weights.assign(static_cast<size_t>(n_mels) * n_bins, 0.0f);
  fb.breakpoints_hz.resize(n_mels + 2);

  const double mel_max = hz_to_mel(sample_rate / 2.0);
  for (int i = 0; i < n_mels + 2; ++i)
    fb.breakpoints_hz[i] = mel_to_hz(mel_max * i / (n_mels + 1));

  // DFT length is 2*(n_bins-1) for even windows; bin spacing follows from
  // the one-sided bin count directly.
  const double bin_hz = (sample_rate / 2.0) / (n_bins - 1);
  for (int m = 0; m < n_mels; ++m) {
    const double f0 = fb.breakpoints_hz[m];
    const double f1 = fb.breakpoints_hz[m + 1];
    const double f2 = fb.breakpoints_hz[m + 2];
    int covered = 0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > f0 && f < f1)
        w = (f - f0) / (f1 - f0);
      else if (f >= f1 && f < f2)
        w = (f2 - f) / (f2 - f1);
      if (w > 0.0) {
        fb.weights[static_cast<size_t>(m) * n_bins + k] = static_cast<float>(w);
        ++covered;
      }
    }
    if (covered == 0)
      throw ConfigError(msg("mel filterbank: filter ", m, " covers no FFT bin (",
                            n_bins, " bins for ", n_mels, " mels at ", sample_rate,
                            " Hz); increase the window length or lower n_mels"));
  }
  return fb;
}

int stft_window_length(int sample_rate) {
  return static_cast<int>(std::lround(0.022 * sample_rate));
}

std::vector<double> power_spectrum(const std::vector<double>& frame) {
  const int n = static_cast<int>(frame.size());
  const int n_bins = n / 2 + 1;
  std::vector<double> in(frame);
  std::vector<double> out(n_bins * 2);
  fftw_plan plan = fftw_plan_dft_r2c_1d(
      n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> power(n_bins);
  for (int k = 0; k < n_bins; ++k)
    power[k] = out[2 * k] * out[2 * k] + out[2 * k + 1] * out[2 * k + 1];
  return power;
}

FeatureMatrix stft_logmel(const AudioClip& clip, const MelFilterbank& fb) {
  if (clip.sample_rate != fb.sample_rate)
    throw ConfigError(msg("stft: clip sample rate ", clip.sample_rate,
                          " vs filterbank ", fb.sample_rate));
  const int n = stft_window_length(clip.sample_rate);
  const int hop = n / 2;
  const int64_t len = static_cast<int64_t>(clip.samples.size());
  if (len < n)
    throw ParseError(msg("stft: clip of ", len, " samples is shorter than one ",
                         n, "-sample window"));
  const int n_bins = n / 2 + 1;
  if (fb.n_bins != n_bins)
    throw ConfigError(msg("stft: filterbank has ", fb.n_bins, " bins, window wants ",
                          n_bins));
  const int n_frames = static_cast<int>((len - n) / hop + 1);

  std::vector<double> window(n);
  for (int i = 0; i < n; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * i / (n - 1));

  FeatureMatrix out(n_frames, fb.n_mels, static_cast<double>(hop) / clip.sample_rate);

  std::vector<double> in(n);
  std::vector<double> spec(n_bins * 2);
  fftw_plan plan = fftw_plan_dft_r2c_1d(
      n, in.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
  std::vector<double> power(n_bins);
  for (int t = 0; t < n_frames; ++t) {
    const float* src = clip.samples.data() + static_cast<int64_t>(t) * hop;
    for (int i = 0; i < n; ++i) in[i] = src[i] * window[i];
    fftw_execute(plan);
    for (int k = 0; k < n_bins; ++k)
      power[k] = spec[2 * k] * spec[2 * k] + spec[2 * k + 1] * spec[2 * k + 1];
    for (int m = 0; m < fb.n_mels; ++m) {
      const float* w = fb.weights.data() + static_cast<size_t>(m) * n_bins;
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) acc += w[k] * power[k];
      out.at(t, m) = static_cast<float>(std::log(acc + kLogFloor));
    }
  }
  fftw_destroy_plan(plan);
  return out;
}

Standardizer fit_standardizer(const std::vector<const FeatureMatrix*>& training) {
  if (training.empty()) throw UsageError("standardizer: no training features");
  const int bands = training[0]->bands;
  std::vector<double> sum(bands, 0.0), sumsq(bands, 0.0);
  int64_t n = 0;
  for (const FeatureMatrix* m : training) {
    if (m->bands != bands)
      throw ShapeError(msg("standardizer: band count ", m->bands, " vs ", bands));
    for (int t = 0; t < m->frames; ++t)
      for (int b = 0; b < bands; ++b) {
        const double v = m->at(t, b);
        sum[b] += v;
        sumsq[b] += v * v;
      }
    n += m->frames;
  }
  if (n == 0) throw UsageError("standardizer: zero training frames");
  Standardizer s;
  s.mean.resize(bands);
  s.stddev.resize(bands);
  for (int b = 0; b < bands; ++b) {
    const double mu = sum[b] / n;
    const double var = std::max(0.0, sumsq[b] / n - mu * mu);
    s.mean[b] = static_cast<float>(mu);
    s.stddev[b] = std::max(kStdFloor, static_cast<float>(std::sqrt(var)));
  }
  return s;
}

void apply_standardizer(const Standardizer& s, FeatureMatrix& m) {
  if (static_cast<int>(s.mean.size()) != m.bands)
    throw ShapeError(msg("standardizer: fitted for ", s.mean.size(), " bands, got ",
                         m.bands));
  for (int t = 0; t < m.frames; ++t)
    for (int b = 0; b < m.bands; ++b)
      m.at(t, b) = (m.at(t, b) - s.mean[b]) / s.stddev[b];
}

void invert_standardizer(const Standardizer& s, FeatureMatrix& m) {
  for (int t = 0; t < m.frames; ++t)
    for (int b = 0; b < m.bands; ++b)
      m.at(t, b) = m.at(t, b) * s.stddev[b] + s.mean[b];
}

std::vector<Segment> segment_sequences(const FeatureMatrix& features,
                                       const EventRoll& roll, int seq_frames) {
  if (features.frames != roll.frames)
    throw ShapeError(msg("segment: features have ", features.frames,
                         " frames, roll has ", roll.frames));
  const int total = features.frames;
  const int full = total / seq_frames;
  const int tail = total % seq_frames;
  std::vector<Segment> out;
  out.reserve(full + (tail ? 1 : 0));
  for (int s = 0; s < full + (tail ? 1 : 0); ++s) {
    Segment seg;
    seg.features = FeatureMatrix(seq_frames, features.bands, features.frame_hop_seconds);
    seg.roll = EventRoll(seq_frames, roll.classes, roll.frame_hop_seconds);
    seg.mask.assign(seq_frames, 0);
    const int base = s * seq_frames;
    const int valid = std::min(seq_frames, total - base);
    for (int t = 0; t < valid; ++t) {
      seg.mask[t] = 1;
      for (int b = 0; b < features.bands; ++b)
        seg.features.at(t, b) = features.at(base + t, b);
      for (int c = 0; c < roll.classes; ++c) seg.roll.at(t, c) = roll.at(base + t, c);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

namespace {
constexpr char kFeatureMagic[4] = {'S', 'E', 'D', 'F'};
constexpr uint32_t kFeatureVersion = 1;
}  // namespace

void write_feature_cache(const std::string& path, const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(msg("feature cache: cannot write '", path, "'"));
  binio::write_magic(out, kFeatureMagic);
  binio::write_u32(out, kFeatureVersion);
  binio::write_u32(out, static_cast<uint32_t>(m.frames));
  binio::write_u32(out, static_cast<uint32_t>(m.bands));
  binio::write_f32_array(out, m.values.data(), m.values.size());
  if (!out) throw ParseError(msg("feature cache: write failed for '", path, "'"));
}

FeatureMatrix read_feature_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(msg("feature cache: cannot open '", path, "'"));
  binio::expect_magic(in, kFeatureMagic, "feature cache");
  const uint32_t version = binio::read_u32(in, "feature cache version");
  if (version != kFeatureVersion)
    throw ParseError(msg("feature cache: unsupported version ", version));
  const uint32_t t = binio::read_u32(in, "feature cache frames");
  const uint32_t f = binio::read_u32(in, "feature cache bands");
  FeatureMatrix m(static_cast<int>(t), static_cast<int>(f), 0.0);
  binio::read_f32_array(in, m.values.data(), m.values.size(), "feature cache data");
  return m;
}

}  // namespace sedkit
