#ifndef SSSDET_LABELS_HPP
#define SSSDET_LABELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sssdet/boxes.hpp"
#include "sssdet/common.hpp"

namespace sssdet {

// One annotated object. All fields are normalized to [0, 1] relative to the
// image: (cx, cy) box center, (w, h) box size.
struct GroundTruthBox {
    int class_id = 0;
    float cx = 0.0f;
    float cy = 0.0f;
    float w = 0.0f;
    float h = 0.0f;

    Box box() const { return box_from_center(cx, cy, w, h); }
    bool operator==(const GroundTruthBox&) const = default;
};

// Label file: one object per line, "class_id cx cy w h", space-separated
// normalized floats. Blank lines are skipped. origin names the source in
// error messages.
std::vector<GroundTruthBox> parse_labels(const std::string& text, const std::string& origin);
std::vector<GroundTruthBox> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<GroundTruthBox>& boxes);

// sibling label file: extension replaced with .txt
std::string label_path_for(const std::string& image_path);

// newline-separated paths; blank lines skipped
std::vector<std::string> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<std::string>& paths);

// one class name per line, index = class id
std::vector<std::string> load_names(const std::string& path);

// Seeded shuffle, then the first floor(n * train_ratio) entries become the
// train manifest and the rest the test manifest.
void split_manifest(const std::vector<std::string>& paths, double train_ratio, uint64_t seed,
                    std::vector<std::string>& train, std::vector<std::string>& test);

} // namespace sssdet

#endif
