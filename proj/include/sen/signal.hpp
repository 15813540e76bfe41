#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sen/tensor.hpp"

namespace sen {

// One preprocessed 6-second window from both motion sensors. Each sensor
// series is a 3 x n row-major matrix (axes x, y, z at the working rate).
struct RawSample {
  std::array<Tensor, 2> sensors;  // [0] accelerometer, [1] gyroscope
  int n = 0;
  int label = -1;
  std::string user;
  std::string device;
};

// Frequency-domain input: k intervals x 2 sensors x 2(d+1) rows x f bins.
// Row 2a holds magnitudes of axis a (x, y, z, amplitude) and row 2a+1 the
// matching frequencies in Hz.
struct InputTensor {
  Tensor data;  // shape {k, 2, 2*(d+1), f}
  int k = 0;
  int f = 0;
};

struct SignalConfig {
  int intervals = 6;       // k
  double sample_rate = 25; // Hz
  // Bin-ordered frequency rows by default; when set, each axis's
  // magnitude/frequency pair is reordered by descending magnitude.
  bool sort_by_magnitude = false;
};

// Appends the amplitude sqrt(x^2+y^2+z^2) as a 4th row.
Tensor amplitude_augment(const Tensor& series);

// Splits a (d+1) x n series into k contiguous equal-width blocks.
// Throws DataError when k does not divide n.
std::vector<Tensor> split_intervals(const Tensor& series, int k);

// Real-input DFT of one interval: f = floor(w/2)+1 unnormalized magnitudes
// plus their bin-center frequencies i*rate/w.
std::pair<std::vector<double>, std::vector<double>> interval_fft(const std::vector<double>& series,
                                                                 double sample_rate);

// Full pipeline for one sample; shape {k, 2, 8, floor(w/2)+1} with
// w = n / k.
InputTensor tensorize(const RawSample& sample, const SignalConfig& cfg);

}  // namespace sen
