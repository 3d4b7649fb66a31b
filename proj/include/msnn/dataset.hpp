#pragma once

#include <string>
#include <vector>

#include "msnn/idx.hpp"
#include "msnn/wav.hpp"

namespace msnn {

enum class Modality { visual, auditory, multi };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

struct ManifestEntry {
    std::string path;
    int label = 0;
    Modality modality = Modality::visual;
};

struct DatasetManifest {
    std::string split; // "train" or "test"
    Modality modality = Modality::visual;
    std::vector<ManifestEntry> entries;
};

// Pairs an IDX image file with its label file; throws on count mismatch.
std::vector<ImageSample> load_image_dataset(const std::string& images_path,
                                            const std::string& labels_path);

// Builds a manifest from a directory of `<label>_<id>.wav` files. Entries are
// sorted by path so the manifest is reproducible across filesystems.
DatasetManifest scan_wav_dir(const std::string& dir, const std::string& split);

// Loads every entry of an auditory manifest.
std::vector<AudioSample> load_audio_dataset(const DatasetManifest& manifest);

// CSV with one `path,label,modality` row per sample.
void write_manifest_csv(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest_csv(const std::string& path, const std::string& split);

} // namespace msnn
