#pragma once
#include <cstdint>
#include <filesystem>
#include <vector>

#include "spectra/matrix.hpp"

namespace spectra {

enum class Split { train, test, ood };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// Labeled samples, one per column of `features`.
struct Dataset {
    Matrix features;  // dim x n
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    Split split = Split::train;

    std::size_t size() const { return labels.size(); }
    void validate() const;
};

// Gaussian clusters around unit-norm random centers with isotropic noise of
// scale `spread`. train/test share centers (noise streams differ); the ood
// split draws its centers from a disjoint seed stream.
Dataset generate_blobs(std::size_t class_count, std::size_t dim, std::size_t per_class,
                       double spread, std::uint64_t seed, Split split = Split::train);

// CSV rows `label,f0,f1,...`; a header line is detected by a non-numeric
// first token and skipped.
Dataset load_dataset_csv(const std::filesystem::path& path, Split split = Split::train);
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

// CIFAR-10 binary batch: 3073-byte records (label byte + 3072 RGB bytes),
// pixels scaled to [0,1]. Rejects files whose size is not a multiple of 3073.
Dataset load_cifar10(const std::filesystem::path& path, Split split = Split::train);

} // namespace spectra
