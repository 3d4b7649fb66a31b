#include "msnn/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "msnn/errors.hpp"

namespace fs = std::filesystem;

namespace msnn {

std::string to_string(Modality m) {
    switch (m) {
        case Modality::visual: return "visual";
        case Modality::auditory: return "auditory";
        case Modality::multi: return "multi";
    }
    return "visual";
}

Modality modality_from_string(const std::string& s) {
    if (s == "visual") return Modality::visual;
    if (s == "auditory") return Modality::auditory;
    if (s == "multi") return Modality::multi;
    throw ConfigError("unknown modality: " + s);
}

std::vector<ImageSample> load_image_dataset(const std::string& images_path,
                                            const std::string& labels_path) {
    std::vector<ImageSample> images = load_idx_images(images_path);
    const std::vector<int> labels = load_idx_labels(labels_path);
    if (images.size() != labels.size())
        throw DataError("image/label count mismatch: " + std::to_string(images.size()) +
                        " vs " + std::to_string(labels.size()));
    for (std::size_t i = 0; i < images.size(); ++i) images[i].label = labels[i];
    return images;
}

DatasetManifest scan_wav_dir(const std::string& dir, const std::string& split) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    DatasetManifest m;
    m.split = split;
    m.modality = Modality::auditory;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".wav") continue;
        const std::string stem = p.stem().string();
        const auto underscore = stem.find('_');
        if (underscore == std::string::npos || underscore == 0) continue;
        const std::string label_str = stem.substr(0, underscore);
        if (label_str.size() != 1 || label_str[0] < '0' || label_str[0] > '9') continue;
        m.entries.push_back({p.string(), label_str[0] - '0', Modality::auditory});
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    return m;
}

std::vector<AudioSample> load_audio_dataset(const DatasetManifest& manifest) {
    std::vector<AudioSample> out;
    out.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) {
        AudioSample s = load_wav(e.path);
        s.label = e.label;
        out.push_back(std::move(s));
    }
    return out;
}

void write_manifest_csv(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path);
    for (const ManifestEntry& e : manifest.entries)
        out << e.path << ',' << e.label << ',' << to_string(e.modality) << '\n';
}

DatasetManifest read_manifest_csv(const std::string& path, const std::string& split) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path);
    DatasetManifest m;
    m.split = split;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("manifest line " + std::to_string(line_no) + ": expected path,label,modality");
        const std::string p = line.substr(0, c1);
        const std::string label_str = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string mod_str = line.substr(c2 + 1);
        int label;
        try {
            label = std::stoi(label_str);
        } catch (const std::exception&) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": bad label");
        }
        if (label < 0 || label > 9)
            throw RangeError("manifest line " + std::to_string(line_no) + ": label out of 0..9");
        if (!seen.insert(p).second)
            throw ParseError("manifest line " + std::to_string(line_no) + ": duplicate path " + p);
        m.entries.push_back({p, label, modality_from_string(mod_str)});
    }
    if (!m.entries.empty()) m.modality = m.entries.front().modality;
    return m;
}

} // namespace msnn
