#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msnn/motif.hpp"

namespace msnn {

// Versioned binary container: "MSNN" magic, format version, a JSON config
// snapshot, named float32 tensors with shape headers, the motif mask as an
// edge list, the base RNG seed, and the reward-rule sign orientation. All
// integers and floats are little-endian; save/load round-trips byte-exactly.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::string config_json;
    std::vector<std::pair<std::string, Eigen::MatrixXf>> tensors; // insertion order preserved
    MotifMask mask; // n == 0 means no mask stored
    std::uint64_t rng_seed = 0;
    std::int8_t sign_orientation = 1;

    void add_tensor(const std::string& name, const Eigen::MatrixXf& m);
    const Eigen::MatrixXf* find_tensor(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace msnn
