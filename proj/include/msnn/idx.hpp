#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace msnn {

// One grayscale digit image with pixels scaled into [0, 1].
struct ImageSample {
    Eigen::MatrixXf pixels; // rows x cols
    int label = 0;          // 0..9
};

// IDX containers use big-endian headers: magic 0x00000803 for ubyte images
// (dims: count, rows, cols) and 0x00000801 for ubyte labels (dims: count).
std::vector<ImageSample> load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Writers for fixtures and round-trip checks; pixel values are clamped to
// [0, 1] and quantized back to bytes.
void write_idx_images(const std::string& path, const std::vector<ImageSample>& images);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

} // namespace msnn
