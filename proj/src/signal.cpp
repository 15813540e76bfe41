#include "sen/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sen/errors.hpp"

namespace sen {

Tensor amplitude_augment(const Tensor& series) {
  if (series.shape.size() != 2 || series.shape[0] != 3) {
    throw DimensionError("amplitude_augment: expected 3 x n series, got " + shape_str(series.shape));
  }
  const int n = series.shape[1];
  Tensor out = Tensor::zeros({4, n});
  std::copy(series.values.begin(), series.values.end(), out.values.begin());
  for (int t = 0; t < n; ++t) {
    const double x = series[t], y = series[n + t], z = series[2 * n + t];
    out[3 * n + t] = std::sqrt(x * x + y * y + z * z);
  }
  return out;
}

std::vector<Tensor> split_intervals(const Tensor& series, int k) {
  if (series.shape.size() != 2) {
    throw DimensionError("split_intervals: expected a matrix, got " + shape_str(series.shape));
  }
  const int rows = series.shape[0];
  const int n = series.shape[1];
  if (k < 1 || n % k != 0) {
    throw DataError("split_intervals: k=" + std::to_string(k) + " does not divide n=" +
                    std::to_string(n));
  }
  const int w = n / k;
  std::vector<Tensor> blocks;
  blocks.reserve((size_t)k);
  for (int b = 0; b < k; ++b) {
    Tensor block = Tensor::zeros({rows, w});
    for (int r = 0; r < rows; ++r) {
      const auto src = series.values.begin() + (size_t)r * n + (size_t)b * w;
      std::copy(src, src + w, block.values.begin() + (size_t)r * w);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

std::pair<std::vector<double>, std::vector<double>> interval_fft(const std::vector<double>& series,
                                                                 double sample_rate) {
  const int w = (int)series.size();
  if (w < 2) throw DataError("interval_fft: need at least 2 readings, got " + std::to_string(w));
  const int f = w / 2 + 1;
  std::vector<double> mags((size_t)f), freqs((size_t)f);
  for (int i = 0; i < f; ++i) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < w; ++t) {
      const double ang = -2.0 * M_PI * (double)i * (double)t / (double)w;
      re += series[(size_t)t] * std::cos(ang);
      im += series[(size_t)t] * std::sin(ang);
    }
    mags[(size_t)i] = std::sqrt(re * re + im * im);
    freqs[(size_t)i] = (double)i * sample_rate / (double)w;
  }
  return {std::move(mags), std::move(freqs)};
}

InputTensor tensorize(const RawSample& sample, const SignalConfig& cfg) {
  const int k = cfg.intervals;
  const int n = sample.n;
  for (const Tensor& s : sample.sensors) {
    if (s.shape.size() != 2 || s.shape[0] != 3 || s.shape[1] != n) {
      throw DimensionError("tensorize: sensor series must be 3 x " + std::to_string(n) + ", got " +
                           shape_str(s.shape));
    }
  }
  if (k < 1 || n % k != 0) {
    throw DataError("tensorize: k=" + std::to_string(k) + " does not divide n=" + std::to_string(n));
  }
  const int w = n / k;
  const int f = w / 2 + 1;
  const int axes = 4;

  InputTensor out;
  out.k = k;
  out.f = f;
  out.data = Tensor::zeros({k, 2, 2 * axes, f});

  for (int si = 0; si < 2; ++si) {
    const Tensor augmented = amplitude_augment(sample.sensors[(size_t)si]);
    const std::vector<Tensor> blocks = split_intervals(augmented, k);
    for (int b = 0; b < k; ++b) {
      for (int a = 0; a < axes; ++a) {
        std::vector<double> axis(blocks[(size_t)b].values.begin() + (size_t)a * w,
                                 blocks[(size_t)b].values.begin() + (size_t)(a + 1) * w);
        auto [mags, freqs] = interval_fft(axis, cfg.sample_rate);
        if (cfg.sort_by_magnitude) {
          std::vector<int> order((size_t)f);
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
            if (mags[(size_t)lhs] != mags[(size_t)rhs]) return mags[(size_t)lhs] > mags[(size_t)rhs];
            return lhs < rhs;
          });
          std::vector<double> m2((size_t)f), f2((size_t)f);
          for (int i = 0; i < f; ++i) {
            m2[(size_t)i] = mags[(size_t)order[(size_t)i]];
            f2[(size_t)i] = freqs[(size_t)order[(size_t)i]];
          }
          mags = std::move(m2);
          freqs = std::move(f2);
        }
        const size_t base = (((size_t)b * 2 + si) * 2 * axes + 2 * (size_t)a) * f;
        std::copy(mags.begin(), mags.end(), out.data.values.begin() + base);
        std::copy(freqs.begin(), freqs.end(), out.data.values.begin() + base + (size_t)f);
      }
    }
  }
  return out;
}

}  // namespace sen
