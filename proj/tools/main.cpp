// sssdet command line: inspect, bench, detect, train, eval, tile, split.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sssdet/common.hpp"
#include "sssdet/detect.hpp"
#include "sssdet/eval.hpp"
#include "sssdet/image.hpp"
#include "sssdet/labels.hpp"
#include "sssdet/netdef.hpp"
#include "sssdet/network.hpp"
#include "sssdet/tile.hpp"
#include "sssdet/train.hpp"
#include "sssdet/weights.hpp"

namespace {

using namespace sssdet;

std::string fmt1(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream ofs(path, std::ios::binary);
    if (!ofs) {
        throw IoError("cannot open for writing: " + path);
    }
    ofs << text;
    if (!ofs.flush()) {
        throw IoError("write failed: " + path);
    }
}

struct BenchOpts {
    std::string cfg;
    std::string weights;
    bool random = false;
    int iterations = 10;
    int warmup = 1;
    uint64_t seed = 0;
    std::string dump_output;
};

void run_bench(const BenchOpts& o)
{
    const NetworkDef def = load_config(o.cfg);
    const ComplexityReport rep = account(def);
    const NetParams params =
        o.weights.empty() ? init_weights(def, o.seed) : load_weights(def, o.weights);

    Rng rng(o.seed ^ 0x9E3779B97F4A7C15ULL);
    const Tensor input = random_tensor(1, def.input_c, def.input_h, def.input_w, rng);

    for (int i = 0; i < o.warmup; ++i) {
        forward_infer(def, params, input);
    }

    using clock = std::chrono::steady_clock;
    std::vector<double> ms;
    ms.reserve(static_cast<size_t>(o.iterations));
    for (int i = 0; i < o.iterations; ++i) {
        const auto t0 = clock::now();
        const Tensor out = forward_infer(def, params, input);
        const auto t1 = clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        std::printf("sample %d/%d: %.2f ms\n", i + 1, o.iterations, ms.back());
        if (i + 1 == o.iterations && !o.dump_output.empty()) {
            save_tensor(out, o.dump_output);
        }
    }

    std::vector<double> sorted = ms;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double mean = 0.0;
    for (double v : ms) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    std::printf("mean %.2f ms, median %.2f ms\n", mean, median);
    std::printf("fps %.4f\n", 1000.0 / mean);
    std::printf("bflops %.2f\n", rep.bflops());
}

struct DetectOpts {
    std::string cfg;
    std::string weights;
    std::string image;
    std::string names;
    std::string records;
    float conf = 0.25f;
    float nms_iou = 0.6f;
};

void run_detect(const DetectOpts& o)
{
    const NetworkDef def = load_config(o.cfg);
    const NetParams params = load_weights(def, o.weights);
    const std::vector<std::string> names =
        o.names.empty() ? std::vector<std::string>{} : load_names(o.names);

    const std::vector<Detection> dets = detect_image(o.image, def, params, o.conf, o.nms_iou);
    std::ostringstream lines;
    for (const Detection& d : dets) {
        lines << detection_line(d, names) << "\n";
    }
    std::cout << lines.str();
    if (!o.records.empty()) {
        write_file(o.records, lines.str());
    }
}

struct TrainOpts {
    std::string cfg;
    std::string manifest;
    std::string out;
    std::string log_path;
    uint64_t seed = 0;
    TrainConfig tc;
};

void run_train(const TrainOpts& o)
{
    const NetworkDef def = load_config(o.cfg);
    const std::vector<std::string> paths = load_manifest(o.manifest);

    std::vector<TrainLogEntry> log;
    train(def, paths, o.tc, o.seed, log, o.out);
    if (!o.log_path.empty()) {
        write_file(o.log_path, loss_log_csv(log));
    }

    std::cout << "trained " << log.size() << " iterations on " << paths.size() << " images\n";
    if (!log.empty()) {
        const TrainLogEntry& last = log.back();
        std::cout << "final lr " << fmt1("%g", last.lr) << ", running loss "
                  << fmt1("%.6f", last.running_loss) << "\n";
    }
    std::cout << "weights -> " << o.out << "\n";
}

struct EvalOpts {
    std::string gt_dir;
    std::string det_dir;
    std::string names;
    std::string pr_dir;
    std::vector<float> ious;
    bool all_point = false;
};

void run_eval(const EvalOpts& o)
{
    const EvalDataset data = load_eval_dataset(o.gt_dir, o.det_dir);
    const std::vector<std::string> names =
        o.names.empty() ? std::vector<std::string>{} : load_names(o.names);
    std::vector<float> ious = o.ious;
    if (ious.empty()) {
        ious.push_back(0.5f);
    }

    bool first = true;
    for (float threshold : ious) {
        const EvalReport report = evaluate(data, threshold, o.all_point);
        if (!first) {
            std::cout << "\n";
        }
        first = false;
        std::cout << report_table(report, names);

        if (o.pr_dir.empty()) {
            continue;
        }
        std::filesystem::create_directories(o.pr_dir);
        for (const ClassEval& cls : report.classes) {
            const std::string name = cls.class_id < static_cast<int>(names.size())
                                         ? names[static_cast<size_t>(cls.class_id)]
                                         : strcat_msg("class_", cls.class_id);
            const std::string file =
                strcat_msg(name, "_iou", fmt1("%.2f", threshold), ".csv");
            write_file((std::filesystem::path(o.pr_dir) / file).string(), pr_curve_csv(cls));
        }
    }
}

struct TileOpts {
    std::string image;
    std::string labels;
    std::string out_dir;
    TileSpec spec;
};

void run_tile(const TileOpts& o)
{
    const std::string labels = o.labels.empty() ? label_path_for(o.image) : o.labels;
    const std::vector<TileOutput> outputs = tile_image_file(o.image, labels, o.out_dir, o.spec);
    for (const TileOutput& out : outputs) {
        std::cout << out.image_path << " " << out.box_count << " boxes\n";
    }
    std::cout << outputs.size() << " tiles -> " << o.out_dir << "\n";
}

struct SplitOpts {
    std::string manifest;
    std::string train_out;
    std::string test_out;
    double ratio = 0.9;
    uint64_t seed = 0;
};

void run_split(const SplitOpts& o)
{
    const std::vector<std::string> paths = load_manifest(o.manifest);
    std::vector<std::string> train_set;
    std::vector<std::string> test_set;
    split_manifest(paths, o.ratio, o.seed, train_set, test_set);
    save_manifest(o.train_out, train_set);
    save_manifest(o.test_out, test_set);
    std::cout << paths.size() << " entries -> train " << train_set.size() << ", test "
              << test_set.size() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Single-stage aerial vehicle detector: profile, train, run"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: machine cores)")
        ->envname("SSSDET_THREADS")
        ->check(CLI::PositiveNumber);

    std::string inspect_cfg;
    bool inspect_csv = false;
    CLI::App* cmd_inspect =
        app.add_subcommand("inspect", "Print the per-layer complexity table for a config");
    cmd_inspect->add_option("--cfg", inspect_cfg, "network config file")->required();
    cmd_inspect->add_flag("--csv", inspect_csv, "machine-readable CSV output");

    BenchOpts bench;
    CLI::App* cmd_bench = app.add_subcommand("bench", "Time forward passes on synthetic input");
    cmd_bench->add_option("--cfg", bench.cfg, "network config file")->required();
    CLI::Option* bench_weights =
        cmd_bench->add_option("--weights", bench.weights, "weights file");
    cmd_bench->add_flag("--random", bench.random, "random-init weights (default)")
        ->excludes(bench_weights);
    cmd_bench->add_option("--iterations", bench.iterations, "timed passes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd_bench->add_option("--warmup", bench.warmup, "untimed passes first")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd_bench->add_option("--seed", bench.seed, "seed for input and random weights")
        ->capture_default_str();
    cmd_bench->add_option("--dump-output", bench.dump_output,
                          "write the last output tensor to this file");

    DetectOpts det;
    CLI::App* cmd_detect = app.add_subcommand("detect", "Run detection on one image");
    cmd_detect->add_option("--cfg", det.cfg, "network config file")->required();
    cmd_detect->add_option("--weights", det.weights, "weights file")->required();
    cmd_detect->add_option("--image", det.image, "PPM (P6) or raw tensor file")->required();
    cmd_detect->add_option("--conf", det.conf, "confidence threshold")->capture_default_str();
    cmd_detect->add_option("--nms", det.nms_iou, "NMS IoU threshold")->capture_default_str();
    cmd_detect->add_option("--names", det.names, "class names file, one per line");
    cmd_detect->add_option("--records", det.records, "also write detections to this file");

    TrainOpts tr;
    CLI::App* cmd_train = app.add_subcommand("train", "Train from scratch on a manifest");
    cmd_train->add_option("--cfg", tr.cfg, "network config file")->required();
    cmd_train->add_option("--manifest", tr.manifest, "newline-separated image paths")
        ->required();
    cmd_train->add_option("--out", tr.out, "weights output path")->required();
    cmd_train->add_option("--log", tr.log_path, "write per-iteration loss CSV here");
    cmd_train->add_option("--max-iter", tr.tc.max_iterations, "SGD iterations")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd_train->add_option("--seed", tr.seed, "init and shuffle seed")->capture_default_str();
    cmd_train->add_option("--lr", tr.tc.learning_rate, "initial learning rate")
        ->capture_default_str();
    cmd_train->add_option("--momentum", tr.tc.momentum, "SGD momentum")->capture_default_str();
    cmd_train->add_option("--decay", tr.tc.weight_decay, "weight decay")->capture_default_str();
    cmd_train->add_option("--minibatch", tr.tc.minibatch, "images per iteration")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd_train->add_option("--lr-drop-iter", tr.tc.lr_drop_iteration,
                          "iteration where the rate drops")
        ->capture_default_str();
    cmd_train->add_option("--lr-drop-factor", tr.tc.lr_drop_factor, "rate multiplier at drop")
        ->capture_default_str();
    cmd_train->add_option("--checkpoint-interval", tr.tc.checkpoint_interval,
                          "overwrite --out every N iterations (0: only at the end)")
        ->capture_default_str();

    EvalOpts ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "Score detections against ground truth");
    cmd_eval->add_option("--gt", ev.gt_dir, "ground-truth label directory")->required();
    cmd_eval->add_option("--det", ev.det_dir, "detection file directory")->required();
    cmd_eval->add_option("--iou", ev.ious, "IoU thresholds (default 0.5)");
    cmd_eval->add_option("--names", ev.names, "class names file, one per line");
    cmd_eval->add_flag("--all-point", ev.all_point, "all-point AP instead of 11-point");
    cmd_eval->add_option("--pr-dir", ev.pr_dir, "write per-class PR curves here");

    TileOpts ti;
    CLI::App* cmd_tile = app.add_subcommand("tile", "Cut an image into a labeled grid");
    cmd_tile->add_option("--image", ti.image, "source image")->required();
    cmd_tile->add_option("--labels", ti.labels, "label file (default: image path with .txt)");
    cmd_tile->add_option("--out-dir", ti.out_dir, "output directory")->required();
    cmd_tile->add_option("--rows", ti.spec.rows, "grid rows")->capture_default_str();
    cmd_tile->add_option("--cols", ti.spec.cols, "grid columns")->capture_default_str();
    cmd_tile->add_option("--overlap", ti.spec.overlap, "overlap pixels on interior edges")
        ->capture_default_str();
    cmd_tile->add_option("--min-frac", ti.spec.retained_fraction,
                         "keep a clipped box above this area fraction")
        ->capture_default_str();

    SplitOpts sp;
    CLI::App* cmd_split = app.add_subcommand("split", "Split a manifest into train and test");
    cmd_split->add_option("--manifest", sp.manifest, "newline-separated image paths")
        ->required();
    cmd_split->add_option("--train-out", sp.train_out, "train manifest path")->required();
    cmd_split->add_option("--test-out", sp.test_out, "test manifest path")->required();
    cmd_split->add_option("--ratio", sp.ratio, "train fraction")->capture_default_str();
    cmd_split->add_option("--seed", sp.seed, "shuffle seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (threads > 0) {
        set_thread_count(threads);
    }

    try {
        if (*cmd_inspect) {
            const NetworkDef def = load_config(inspect_cfg);
            std::cout << (inspect_csv ? summarize_csv(def) : summarize(def));
        } else if (*cmd_bench) {
            run_bench(bench);
        } else if (*cmd_detect) {
            run_detect(det);
        } else if (*cmd_train) {
            run_train(tr);
        } else if (*cmd_eval) {
            run_eval(ev);
        } else if (*cmd_tile) {
            run_tile(ti);
        } else if (*cmd_split) {
            run_split(sp);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
