#pragma once

#include "cbid/data_model.hpp"
#include "cbid/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <random>

namespace cbid::synthetic {

struct SpiralOptions {
    std::size_t per_class = 500;
    /// Angular extent of each arm in full turns.
    double turns = 0.5;
    /// Standard deviation of the isotropic Gaussian jitter (the arms reach radius 1).
    double noise = 0.02;
};

/// Two interleaved Fermat-spiral arms (r proportional to sqrt(theta)); class 2 is
/// class 1 rotated by pi.
Dataset spiral(const SpiralOptions& options, std::uint64_t seed);

struct BlobOptions {
    int classes = 4;
    std::size_t per_class = 100;
    std::size_t dim = 16;
    double sigma = 1.0;
    /// Distance between every pair of class centers, in units of sigma.
    double separation = 6.0;
};

/// Isotropic Gaussian blobs centred on scaled orthogonal axes.
Dataset blobs(const BlobOptions& options, std::uint64_t seed);

/// A small random image-mode problem with random duals and a random hash function,
/// for gradient and objective checks.
struct RandomInstance {
    Dataset dataset;
    TripletSet triplets;
    DualState duals;
    HashFunction function;
    int r = 1;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_dim = 16,
                               std::size_t max_triplets = 50);

}  // namespace cbid::synthetic
