#include "sssdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sssdet {

namespace {

namespace fs = std::filesystem;

// ascending ids of .txt files in a directory
std::vector<std::string> txt_ids(const std::string& dir)
{
    if (!fs::is_directory(dir)) {
        throw IoError("not a directory: " + dir);
    }
    std::vector<std::string> ids;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") {
            ids.push_back(e.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<EvalDetection> parse_detections(const std::string& path, const std::string& id)
{
    std::ifstream ifs(path);
    if (!ifs) {
        throw IoError("cannot open detection file: " + path);
    }
    std::vector<EvalDetection> dets;
    std::string line;
    int line_no = 0;
    while (std::getline(ifs, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        EvalDetection d;
        float cx = 0.0f, cy = 0.0f, w = 0.0f, h = 0.0f;
        std::string extra;
        if (!(fields >> d.class_id >> d.score >> cx >> cy >> w >> h) || (fields >> extra)) {
            throw DataError(strcat_msg(path, ":", line_no,
                                       ": expected 'class_id score cx cy w h', got '", line,
                                       "'"));
        }
        if (d.class_id < 0 || !std::isfinite(d.score) || !std::isfinite(cx) ||
            !std::isfinite(cy) || w <= 0.0f || h <= 0.0f) {
            throw DataError(strcat_msg(path, ":", line_no, ": bad detection values"));
        }
        d.image_id = id;
        d.box = box_from_center(cx, cy, w, h);
        d.index = line_no;
        dets.push_back(d);
    }
    return dets;
}

// score descending, then image id, then file order
bool match_order(const EvalDetection& a, const EvalDetection& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.image_id != b.image_id) {
        return a.image_id < b.image_id;
    }
    return a.index < b.index;
}

} // namespace

EvalDataset load_eval_dataset(const std::string& gt_dir, const std::string& det_dir)
{
    EvalDataset data;
    for (const std::string& id : txt_ids(gt_dir)) {
        data.truths[id] = load_labels((fs::path(gt_dir) / (id + ".txt")).string());
    }
    if (data.truths.empty()) {
        throw DataError("no ground-truth .txt files in " + gt_dir);
    }
    for (const std::string& id : txt_ids(det_dir)) {
        if (data.truths.find(id) == data.truths.end()) {
            throw DataError(strcat_msg("image id '", id,
                                       "' present in detections but absent from ground truth"));
        }
        std::vector<EvalDetection> dets =
            parse_detections((fs::path(det_dir) / (id + ".txt")).string(), id);
        data.detections.insert(data.detections.end(), dets.begin(), dets.end());
    }
    return data;
}

std::vector<uint8_t> match_detections(std::vector<EvalDetection> dets,
                                      const std::map<std::string, std::vector<GroundTruthBox>>& truths,
                                      int class_id, float iou_threshold)
{
    std::sort(dets.begin(), dets.end(), match_order);

    // per image: which class-matching truths are already claimed
    std::map<std::string, std::vector<uint8_t>> claimed;
    for (const auto& [id, boxes] : truths) {
        claimed[id].assign(boxes.size(), 0);
    }

    std::vector<uint8_t> tp;
    tp.reserve(dets.size());
    for (const EvalDetection& d : dets) {
        auto it = truths.find(d.image_id);
        if (it == truths.end()) {
            throw DataError(strcat_msg("image id '", d.image_id,
                                       "' present in detections but absent from ground truth"));
        }
        const std::vector<GroundTruthBox>& boxes = it->second;
        std::vector<uint8_t>& used = claimed[d.image_id];

        int best = -1;
        float best_iou = 0.0f;
        for (size_t g = 0; g < boxes.size(); ++g) {
            if (boxes[g].class_id != class_id || used[g]) {
                continue;
            }
            float overlap = iou(d.box, boxes[g].box());
            if (overlap > best_iou) {
                best_iou = overlap;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
            used[static_cast<size_t>(best)] = 1;
            tp.push_back(1);
        } else {
            tp.push_back(0);
        }
    }
    return tp;
}

double average_precision(const std::vector<uint8_t>& tp, int truth_count,
                         std::vector<std::pair<float, float>>* pr)
{
    if (pr) {
        pr->clear();
    }
    if (truth_count <= 0) {
        return 0.0;
    }
    std::vector<double> precision(tp.size());
    std::vector<double> recall(tp.size());
    int hits = 0;
    for (size_t k = 0; k < tp.size(); ++k) {
        hits += tp[k];
        precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(hits) / truth_count;
        if (pr) {
            pr->emplace_back(static_cast<float>(recall[k]), static_cast<float>(precision[k]));
        }
    }

    double sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
        const double r = level / 10.0;
        double best = 0.0;
        for (size_t k = 0; k < tp.size(); ++k) {
            if (recall[k] >= r - 1e-12) {
                best = std::max(best, precision[k]);
            }
        }
        sum += best;
    }
    return sum / 11.0;
}

double average_precision_all_point(const std::vector<uint8_t>& tp, int truth_count)
{
    if (truth_count <= 0 || tp.empty()) {
        return 0.0;
    }
    std::vector<double> precision(tp.size());
    std::vector<double> recall(tp.size());
    int hits = 0;
    for (size_t k = 0; k < tp.size(); ++k) {
        hits += tp[k];
        precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(hits) / truth_count;
    }
    // precision envelope, right to left
    for (size_t k = tp.size() - 1; k-- > 0;) {
        precision[k] = std::max(precision[k], precision[k + 1]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t k = 0; k < tp.size(); ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

EvalReport evaluate(const EvalDataset& data, float iou_threshold, bool all_point_ap)
{
    if (iou_threshold <= 0.0f || iou_threshold > 1.0f) {
        throw ConfigError(strcat_msg("IoU threshold must lie in (0, 1], got ", iou_threshold));
    }
    EvalReport report;
    report.iou_threshold = iou_threshold;
    report.all_point_ap = all_point_ap;

    std::set<int> class_ids;
    for (const auto& [id, boxes] : data.truths) {
        for (const GroundTruthBox& b : boxes) {
            class_ids.insert(b.class_id);
        }
    }
    for (const EvalDetection& d : data.detections) {
        class_ids.insert(d.class_id);
    }

    double ap_sum = 0.0;
    int ap_classes = 0;
    for (int class_id : class_ids) {
        ClassEval cls;
        cls.class_id = class_id;
        for (const auto& [id, boxes] : data.truths) {
            for (const GroundTruthBox& b : boxes) {
                cls.truth_count += b.class_id == class_id ? 1 : 0;
            }
        }
        std::vector<EvalDetection> dets;
        for (const EvalDetection& d : data.detections) {
            if (d.class_id == class_id) {
                dets.push_back(d);
            }
        }
        cls.detection_count = static_cast<int>(dets.size());
        cls.tp = match_detections(std::move(dets), data.truths, class_id, iou_threshold);
        cls.ap = all_point_ap ? average_precision_all_point(cls.tp, cls.truth_count)
                              : average_precision(cls.tp, cls.truth_count, &cls.pr);
        if (all_point_ap) {
            average_precision(cls.tp, cls.truth_count, &cls.pr); // curve only
        }
        if (cls.truth_count > 0) {
            ap_sum += cls.ap;
            ++ap_classes;
        }
        report.classes.push_back(std::move(cls));
    }
    report.map = ap_classes > 0 ? ap_sum / ap_classes : 0.0;
    return report;
}

std::string report_table(const EvalReport& report, const std::vector<std::string>& class_names)
{
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "iou threshold %.2f (%s AP)\n",
                  static_cast<double>(report.iou_threshold),
                  report.all_point_ap ? "all-point" : "11-point");
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %10s\n", "class", "truths", "dets", "ap");
    os << buf;
    for (const ClassEval& cls : report.classes) {
        std::string name = cls.class_id < static_cast<int>(class_names.size())
                               ? class_names[static_cast<size_t>(cls.class_id)]
                               : strcat_msg("class_", cls.class_id);
        std::snprintf(buf, sizeof(buf), "%-16s %8d %8d %10.6f\n", name.c_str(), cls.truth_count,
                      cls.detection_count, cls.ap);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "mAP %.6f\n", report.map);
    os << buf;
    return os.str();
}

std::string pr_curve_csv(const ClassEval& cls)
{
    std::ostringstream os;
    os << "recall,precision\n";
    char buf[64];
    for (const auto& [recall, precision] : cls.pr) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", static_cast<double>(recall),
                      static_cast<double>(precision));
        os << buf;
    }
    return os.str();
}

} // namespace sssdet
