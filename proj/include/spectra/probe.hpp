#pragma once
#include <cstdint>
#include <vector>

#include "spectra/dataset.hpp"
#include "spectra/matrix.hpp"

namespace spectra {

struct ProbeResult {
    std::size_t layer = 0;
    Split split = Split::train;
    double accuracy = 0.0;
};

// Affine linear probe on frozen features (dim x n, one sample per column).
// Adam with lr 1e-3, weight decay 1e-3, 50 epochs, batch 4096; feature
// dimension subsampled to min(10000, dim) with a seed-fixed index set;
// 80/20 train/eval split, seed-fixed. Returns held-out accuracy.
double train_probe_accuracy(const Matrix& features, const std::vector<std::size_t>& labels,
                            std::uint64_t seed);

} // namespace spectra
