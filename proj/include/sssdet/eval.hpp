#ifndef SSSDET_EVAL_HPP
#define SSSDET_EVAL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sssdet/boxes.hpp"
#include "sssdet/labels.hpp"

namespace sssdet {

// one scored detection; box is normalized corner form
struct EvalDetection {
    std::string image_id;
    int class_id = 0;
    float score = 0.0f;
    Box box;
    int index = 0; // line order within its file, breaks score ties
};

// Ground truth and detections keyed by image id (label file stem).
struct EvalDataset {
    std::map<std::string, std::vector<GroundTruthBox>> truths;
    std::vector<EvalDetection> detections;
};

// Reads per-image .txt files: gt_dir in the label format, det_dir with
// lines "class_id score cx cy w h". A detection file whose id has no
// ground-truth file is an error; a missing detection file just means no
// detections for that image.
EvalDataset load_eval_dataset(const std::string& gt_dir, const std::string& det_dir);

struct ClassEval {
    int class_id = 0;
    int truth_count = 0;
    int detection_count = 0;
    std::vector<uint8_t> tp; // in match order (score desc, image id, index)
    std::vector<std::pair<float, float>> pr; // cumulative (recall, precision)
    double ap = 0.0;
};

struct EvalReport {
    float iou_threshold = 0.5f;
    bool all_point_ap = false;
    std::vector<ClassEval> classes; // ascending class id
    double map = 0.0; // mean over classes with at least one truth
};

// Greedy dataset-wide matching per class: detections in score order claim
// the highest-IoU unmatched truth of their image; a claim counts as a true
// positive when the IoU reaches iou_threshold.
std::vector<uint8_t> match_detections(std::vector<EvalDetection> dets,
                                      const std::map<std::string, std::vector<GroundTruthBox>>& truths,
                                      int class_id, float iou_threshold);

// 11-point interpolated AP: mean over recall levels {0.0, 0.1, ..., 1.0}
// of the maximum precision at recall >= level. pr, when given, receives
// the cumulative curve.
double average_precision(const std::vector<uint8_t>& tp, int truth_count,
                         std::vector<std::pair<float, float>>* pr = nullptr);

// exact area under the interpolated precision envelope
double average_precision_all_point(const std::vector<uint8_t>& tp, int truth_count);

EvalReport evaluate(const EvalDataset& data, float iou_threshold, bool all_point_ap = false);

std::string report_table(const EvalReport& report, const std::vector<std::string>& class_names);

// "recall,precision" rows for one class
std::string pr_curve_csv(const ClassEval& cls);

} // namespace sssdet

#endif
