#include "sssdet/labels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sssdet {

std::vector<GroundTruthBox> parse_labels(const std::string& text, const std::string& origin)
{
    std::vector<GroundTruthBox> boxes;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        GroundTruthBox b;
        std::string extra;
        if (!(fields >> b.class_id >> b.cx >> b.cy >> b.w >> b.h) || (fields >> extra)) {
            throw DataError(strcat_msg(origin, ":", line_no,
                                       ": expected 'class_id cx cy w h', got '", line, "'"));
        }
        if (b.class_id < 0) {
            throw DataError(strcat_msg(origin, ":", line_no, ": negative class id ", b.class_id));
        }
        if (b.cx < 0.0f || b.cx > 1.0f || b.cy < 0.0f || b.cy > 1.0f || b.w <= 0.0f ||
            b.w > 1.0f || b.h <= 0.0f || b.h > 1.0f || !std::isfinite(b.cx) ||
            !std::isfinite(b.cy) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
            throw DataError(strcat_msg(origin, ":", line_no, ": box (", b.cx, ", ", b.cy, ", ",
                                       b.w, ", ", b.h,
                                       ") is not normalized (centers in [0,1], sizes in (0,1])"));
        }
        boxes.push_back(b);
    }
    return boxes;
}

std::vector<GroundTruthBox> load_labels(const std::string& path)
{
    std::ifstream ifs(path, std::ios::binary);
    if (!ifs) {
        throw IoError("cannot open label file: " + path);
    }
    std::ostringstream buf;
    buf << ifs.rdbuf();
    return parse_labels(buf.str(), path);
}

void save_labels(const std::string& path, const std::vector<GroundTruthBox>& boxes)
{
    std::ofstream ofs(path, std::ios::trunc);
    if (!ofs) {
        throw IoError("cannot open label file for writing: " + path);
    }
    char line[128];
    for (const GroundTruthBox& b : boxes) {
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", b.class_id, b.cx, b.cy,
                      b.w, b.h);
        ofs << line;
    }
    if (!ofs) {
        throw IoError("write failed: " + path);
    }
}

std::string label_path_for(const std::string& image_path)
{
    size_t dot = image_path.find_last_of('.');
    size_t slash = image_path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return image_path + ".txt";
    }
    return image_path.substr(0, dot) + ".txt";
}

std::vector<std::string> load_manifest(const std::string& path)
{
    std::ifstream ifs(path);
    if (!ifs) {
        throw IoError("cannot open manifest: " + path);
    }
    std::vector<std::string> paths;
    std::string line;
    while (std::getline(ifs, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            paths.push_back(line);
        }
    }
    return paths;
}

void save_manifest(const std::string& path, const std::vector<std::string>& paths)
{
    std::ofstream ofs(path, std::ios::trunc);
    if (!ofs) {
        throw IoError("cannot open manifest for writing: " + path);
    }
    for (const std::string& p : paths) {
        ofs << p << "\n";
    }
    if (!ofs) {
        throw IoError("write failed: " + path);
    }
}

std::vector<std::string> load_names(const std::string& path)
{
    std::ifstream ifs(path);
    if (!ifs) {
        throw IoError("cannot open names file: " + path);
    }
    std::vector<std::string> names;
    std::string line;
    while (std::getline(ifs, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            names.push_back(line);
        }
    }
    return names;
}

void split_manifest(const std::vector<std::string>& paths, double train_ratio, uint64_t seed,
                    std::vector<std::string>& train, std::vector<std::string>& test)
{
    if (paths.empty()) {
        throw DataError("cannot split an empty manifest");
    }
    if (train_ratio <= 0.0 || train_ratio >= 1.0) {
        throw DataError(strcat_msg("split ratio must lie in (0, 1), got ", train_ratio));
    }
    std::vector<std::string> shuffled = paths;
    Rng rng(seed);
    rng.shuffle(shuffled);

    size_t n_train = static_cast<size_t>(std::floor(static_cast<double>(shuffled.size()) * train_ratio));
    train.assign(shuffled.begin(), shuffled.begin() + static_cast<ptrdiff_t>(n_train));
    test.assign(shuffled.begin() + static_cast<ptrdiff_t>(n_train), shuffled.end());
}

} // namespace sssdet
