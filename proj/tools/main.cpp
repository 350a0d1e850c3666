// platescan: license-plate detector built on HOG features, an integral
// histogram, a multiscale sliding-window scan and a linear SVM.
//
// Subcommands: train, detect, eval, sweep, synth. Every configuration key can
// come from a flat key=value config file (--config) and be overridden by the
// same-named command-line flag. Machine-readable CSV goes to files or stdout;
// human-readable summaries go to stderr.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
// violation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "platescan/dataset.hpp"
#include "platescan/detector.hpp"
#include "platescan/errors.hpp"
#include "platescan/eval.hpp"
#include "platescan/image_io.hpp"
#include "platescan/pipeline.hpp"
#include "platescan/rng.hpp"
#include "platescan/svm.hpp"
#include "platescan/synthetic.hpp"

namespace fs = std::filesystem;
using namespace platescan;

namespace {

struct CommonOptions {
    int core_w = 90;
    int core_h = 30;
    int pad_x = 9;
    int pad_y = 3;
    int cell = 4;
    int block = 2;
    int block_stride = 1;
    int bins = 9;
    std::string norm = "l1";
    double eps = 1e-3;
    int stride = 9;
    int scales = 11;
    double scale_step = 1.1;
    double nms_overlap = 0.3;
    int threads = 0;
    double fppi_target = 1.0;
    double match_threshold = 0.5;
    std::string c_grid = "0.01,0.1,1,10,100";
    int cv_folds = 5;
    int neg_per_image = 20;
    int bootstrap_budget = 1000;
    int svm_epochs = 1000;
    double svm_tolerance = 1e-3;
    std::uint64_t seed = 7;
};

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw DataError(std::string(what) + ": unparsable value '" + item + "'");
        }
    }
    if (out.empty()) throw DataError(std::string(what) + ": empty list");
    return out;
}

void add_common_options(CLI::App* cmd, CommonOptions& o) {
    cmd->set_config("--config", "", "flat key=value configuration file");
    cmd->add_option("--core-w", o.core_w, "plate core width inside the window");
    cmd->add_option("--core-h", o.core_h, "plate core height inside the window");
    cmd->add_option("--pad-x", o.pad_x, "background pixels per horizontal side");
    cmd->add_option("--pad-y", o.pad_y, "background pixels per vertical side");
    cmd->add_option("--cell", o.cell, "cell size in pixels");
    cmd->add_option("--block", o.block, "block size in cells");
    cmd->add_option("--block-stride", o.block_stride, "block stride in cells");
    cmd->add_option("--bins", o.bins, "orientation bins");
    cmd->add_option("--norm", o.norm, "block norm: l1 or l2")
        ->check(CLI::IsMember({"l1", "l2"}));
    cmd->add_option("--eps", o.eps, "block norm stabilizer");
    cmd->add_option("--stride", o.stride, "window stride in pixels");
    cmd->add_option("--scales", o.scales, "pyramid levels");
    cmd->add_option("--scale-step", o.scale_step, "pyramid step between levels");
    cmd->add_option("--nms-overlap", o.nms_overlap, "NMS suppression overlap");
    cmd->add_option("--threads", o.threads, "scan worker threads (0 = auto)");
    cmd->add_option("--fppi-target", o.fppi_target, "FPPI target for threshold calibration");
    cmd->add_option("--match-threshold", o.match_threshold, "matching degree threshold t");
    cmd->add_option("--c-grid", o.c_grid, "comma-separated SVM C candidates");
    cmd->add_option("--cv-folds", o.cv_folds, "folds for C cross-validation");
    cmd->add_option("--neg-per-image", o.neg_per_image, "negative samples per image");
    cmd->add_option("--bootstrap-budget", o.bootstrap_budget, "hard negatives to add");
    cmd->add_option("--svm-epochs", o.svm_epochs, "solver epoch cap");
    cmd->add_option("--svm-tolerance", o.svm_tolerance, "solver stopping tolerance");
    cmd->add_option("--seed", o.seed, "master random seed");
}

PipelineConfig pipeline_config(const CommonOptions& o) {
    PipelineConfig cfg;
    cfg.hog.cell_size = o.cell;
    cfg.hog.block_size = o.block;
    cfg.hog.block_stride = o.block_stride;
    cfg.hog.num_bins = o.bins;
    cfg.hog.norm = o.norm == "l2" ? BlockNorm::L2 : BlockNorm::L1;
    cfg.hog.epsilon = o.eps;
    cfg.scan.window_w = o.core_w + 2 * o.pad_x;
    cfg.scan.window_h = o.core_h + 2 * o.pad_y;
    cfg.scan.stride = o.stride;
    cfg.scan.pad_x = o.pad_x;
    cfg.scan.pad_y = o.pad_y;
    cfg.scan.pyramid.step = o.scale_step;
    cfg.scan.pyramid.num_levels = o.scales;
    cfg.scan.nms_overlap = o.nms_overlap;
    cfg.scan.threads = o.threads;
    cfg.svm.max_epochs = o.svm_epochs;
    cfg.svm.tolerance = o.svm_tolerance;
    cfg.c_grid = parse_double_list(o.c_grid, "--c-grid");
    cfg.cv_folds = o.cv_folds;
    cfg.negatives_per_image = o.neg_per_image;
    cfg.bootstrap_budget = o.bootstrap_budget;
    cfg.fppi_target = o.fppi_target;
    cfg.match_threshold = o.match_threshold;
    cfg.seed = o.seed;
    return cfg;
}

// a manifest argument may be a .tsv file or a directory of images + sidecars
DatasetManifest open_manifest(const std::string& path, bool validate = true) {
    if (fs::is_directory(path)) return manifest_from_sidecars(path, validate);
    return load_manifest(path, validate);
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw DataError("cannot open output file: " + path);
    return file;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const CommonOptions& o, const std::string& manifest_path,
              const std::string& model_path, const std::string& pre_model_path) {
    const PipelineConfig cfg = pipeline_config(o);
    const DatasetManifest manifest = open_manifest(manifest_path);

    const int dim = descriptor_length(cfg.scan.window_w, cfg.scan.window_h, cfg.hog);
    const TrainedDetector trained = train_detector(manifest.entries, cfg, file_image_loader());

    save_model(trained.model, model_path);
    if (!pre_model_path.empty()) save_model(trained.pre_bootstrap, pre_model_path);

    const TrainSummary& s = trained.summary;
    for (const std::string& w : s.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << "trained on " << manifest.entries.size() << " images: " << s.positives
              << " positives, " << s.negatives << " negatives (+" << s.hard_negatives
              << " bootstrapped)\n"
              << "descriptor length " << dim << ", C = " << s.chosen_c << ", threshold "
              << s.threshold << " (pre-bootstrap " << s.pre_bootstrap_threshold << ")\n"
              << "solver: " << s.trace.epochs << " epochs, "
              << (s.trace.converged ? "converged" : "epoch cap reached") << "\n"
              << "model written to " << model_path << "\n";
    return 0;
}

// ---- detect -----------------------------------------------------------------

int cmd_detect(const CommonOptions& o, const std::string& model_path,
               std::vector<std::string> images, const std::string& manifest_path,
               const std::string& out_path, const std::string& dump_path) {
    const PipelineConfig cfg = pipeline_config(o);
    const LinearModel model = load_model(model_path);

    const int dim = descriptor_length(cfg.scan.window_w, cfg.scan.window_h, cfg.hog);
    if (model.weights.size() != static_cast<std::size_t>(dim))
        throw DataError("model dimension " + std::to_string(model.weights.size()) +
                        " does not match the configured descriptor length " +
                        std::to_string(dim) + "; check --cell/--block/--pad flags");

    if (!manifest_path.empty()) {
        const DatasetManifest manifest = open_manifest(manifest_path, false);
        for (const AnnotatedImage& e : manifest.entries) images.push_back(e.image_path);
    }

    std::ofstream dump;
    if (!dump_path.empty()) {
        dump.open(dump_path);
        if (!dump) throw DataError("cannot open descriptor dump file: " + dump_path);
    }

    std::vector<NamedDetections> rows;
    std::size_t failures = 0;
    for (const std::string& path : images) {
        GrayImage img;
        try {
            img = load_gray(path);
        } catch (const DataError& e) {
            std::cerr << "error: " << e.what() << " (skipped)\n";
            ++failures;
            continue;
        }

        ScanResult sr = scan(img, model, cfg.hog, cfg.scan);
        for (const std::string& w : sr.warnings) std::cerr << "warning: " << path << ": " << w
                                                           << "\n";
        std::vector<Detection> dets =
            non_max_suppression(std::move(sr.detections), cfg.scan.nms_overlap);
        NamedDetections named;
        named.image_id = path;
        for (Detection& d : dets) {
            try {
                d.box = strip_padding(d.box, cfg.scan);
                named.detections.push_back(d);
            } catch (const DataError& e) {
                std::cerr << "warning: " << path << ": " << e.what() << "\n";
            }
        }
        rows.push_back(std::move(named));

        if (dump.is_open()) {
            scan_windows(img, model, cfg.hog, cfg.scan, model.threshold,
                         [&](int level, double, const BoundingBox& box, double s,
                             std::span<const double> descriptor) {
                             dump << path << ',' << level << ',' << box.x << ',' << box.y << ','
                                  << s;
                             for (double v : descriptor) dump << ',' << v;
                             dump << '\n';
                         });
        }
    }

    std::ofstream file;
    write_detections_csv(open_out(out_path, file), rows);
    if (!images.empty() && failures == images.size()) {
        std::cerr << "error: all " << failures << " input images failed to load\n";
        return 2;
    }
    return 0;
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const CommonOptions& o, const std::string& detections_path,
             const std::string& manifest_path, const std::string& t_grid_arg,
             const std::string& out_path, const std::string& curve_prefix, bool one_to_one) {
    const DatasetManifest manifest = open_manifest(manifest_path, false);

    std::ifstream det_file(detections_path);
    if (!det_file) throw DataError("cannot open detections csv: " + detections_path);
    const std::vector<NamedDetections> named = read_detections_csv(det_file);

    // align by image id; every detection id must exist in the manifest
    std::vector<std::vector<Detection>> dets(manifest.entries.size());
    std::vector<std::string> unmatched;
    for (const NamedDetections& row : named) {
        bool found = false;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
            if (manifest.entries[i].image_path == row.image_id) {
                dets[i] = row.detections;
                found = true;
                break;
            }
        }
        if (!found) unmatched.push_back(row.image_id);
    }
    if (!unmatched.empty()) {
        std::string list;
        for (const std::string& id : unmatched) list += "\n  " + id;
        throw DataError("detection ids missing from the manifest:" + list);
    }

    const std::vector<std::vector<BoundingBox>> gt = ground_truth_of(manifest.entries);
    const std::vector<std::vector<BoundingBox>> boxes = boxes_of(dets);

    const EvalResult r = evaluate(boxes, gt, o.match_threshold, one_to_one);
    std::ofstream file;
    std::ostream& out = open_out(out_path, file);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "recall,precision,fppi,images,ground_truth,detections\n"
                                    "%.9g,%.9g,%.9g,%d,%d,%d\n",
                  r.recall, r.precision, r.fppi, r.images, r.gt_total, r.det_total);
    out << buf;

    if (!curve_prefix.empty()) {
        {
            std::ofstream f(curve_prefix + "_det_curve.csv");
            if (!f) throw DataError("cannot write " + curve_prefix + "_det_curve.csv");
            write_curve_csv(f, det_curve(dets, gt, o.match_threshold), "fppi", "detection_rate");
        }
        const std::vector<double> t_grid = parse_double_list(t_grid_arg, "--t-grid");
        const auto [precision, recall] = matching_degree_sweep(boxes, gt, t_grid);
        {
            std::ofstream f(curve_prefix + "_precision_vs_t.csv");
            if (!f) throw DataError("cannot write " + curve_prefix + "_precision_vs_t.csv");
            write_curve_csv(f, precision, "t", "precision");
        }
        {
            std::ofstream f(curve_prefix + "_recall_vs_t.csv");
            if (!f) throw DataError("cannot write " + curve_prefix + "_recall_vs_t.csv");
            write_curve_csv(f, recall, "t", "recall");
        }
    }

    std::cerr << "recall " << r.recall << ", precision " << r.precision << ", FPPI " << r.fppi
              << " over " << r.images << " images at t = " << o.match_threshold << "\n";
    return 0;
}

// ---- sweep ------------------------------------------------------------------

struct GridPoint {
    std::string label;
    CommonOptions options;
};

std::vector<GridPoint> expand_grid(const CommonOptions& base, const std::string& axis,
                                   const std::string& grid) {
    std::vector<GridPoint> points;
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        GridPoint p;
        p.options = base;
        p.label = axis + "=" + item;
        if (axis == "cell_block") {
            const std::size_t sep = item.find(':');
            if (sep == std::string::npos)
                throw DataError("cell_block grid entries look like CELL:BLOCK, got '" + item +
                                "'");
            p.options.cell = std::stoi(item.substr(0, sep));
            p.options.block = std::stoi(item.substr(sep + 1));
        } else if (axis == "padding") {
            const std::size_t sep = item.find(':');
            if (sep == std::string::npos)
                throw DataError("padding grid entries look like PADX:PADY, got '" + item + "'");
            p.options.pad_x = std::stoi(item.substr(0, sep));
            p.options.pad_y = std::stoi(item.substr(sep + 1));
        } else if (axis == "scales") {
            p.options.scales = std::stoi(item);
        } else if (axis == "stride") {
            p.options.stride = std::stoi(item);
        } else {
            throw DataError("unknown sweep axis '" + axis +
                            "' (expected cell_block, padding, scales or stride)");
        }
        points.push_back(std::move(p));
    }
    if (points.empty()) throw DataError("sweep grid is empty");
    return points;
}

int cmd_sweep(const CommonOptions& o, const std::string& manifest_path, const std::string& axis,
              const std::string& grid, int folds, const std::string& out_path) {
    const DatasetManifest manifest = open_manifest(manifest_path);
    const std::vector<GridPoint> points = expand_grid(o, axis, grid);

    std::ofstream file;
    std::ostream& out = open_out(out_path, file);
    out << "axis,value,recall,precision,fppi,folds,status\n";
    for (const GridPoint& p : points) {
        ProtocolResult row;
        try {
            const PipelineConfig cfg = pipeline_config(p.options);
            row = run_protocol(p.label, manifest.entries, cfg, folds, file_image_loader());
        } catch (const std::exception& e) {
            row.label = p.label;
            row.ok = false;
            row.error = e.what();
        }
        const std::string value = p.label.substr(p.label.find('=') + 1);
        if (row.ok) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g", row.recall, row.precision,
                          row.fppi);
            out << axis << ',' << value << ',' << buf << ',' << folds << ",ok\n";
        } else {
            std::string msg = row.error;
            for (char& c : msg)
                if (c == ',' || c == '\n') c = ';';
            out << axis << ',' << value << ",,,," << folds << ",failed: " << msg << "\n";
        }
        std::cerr << "sweep " << row.label << (row.ok ? " done" : " failed") << "\n";
    }
    return 0;
}

// ---- synth ------------------------------------------------------------------

int cmd_synth(const SceneSpec& spec, int count, std::uint64_t seed,
              const std::string& out_dir) {
    if (count < 0) throw DataError("synth: count must be >= 0");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw DataError("cannot create output directory: " + out_dir);

    DatasetManifest manifest;
    for (int i = 0; i < count; ++i) {
        const SyntheticScene scene = generate_scene(spec, mix_seed(seed, i));
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04d.png", i);
        const std::string path = (fs::path(out_dir) / name).string();
        save_png(scene.image, path);
        AnnotatedImage entry;
        entry.image_path = path;
        entry.plates = scene.plates;
        entry.width = scene.image.width;
        entry.height = scene.image.height;
        manifest.entries.push_back(std::move(entry));
    }
    const std::string manifest_path = (fs::path(out_dir) / "manifest.tsv").string();
    save_manifest(manifest, manifest_path);
    std::cerr << "wrote " << count << " scenes and " << manifest_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"license-plate detection: HOG features, integral histograms, multiscale "
                 "sliding windows, linear SVM"};
    app.require_subcommand(1);

    CommonOptions opts;

    // train
    auto* train = app.add_subcommand("train", "train a detector from an annotated manifest");
    std::string train_manifest, train_model = "model.txt", train_pre_model;
    add_common_options(train, opts);
    train->add_option("--manifest", train_manifest, "training manifest (.tsv or sidecar dir)")
        ->required();
    train->add_option("--out,--model", train_model, "output model file");
    train->add_option("--emit-pre-bootstrap", train_pre_model,
                      "also write the calibrated pre-bootstrap model here");

    // detect
    auto* detect = app.add_subcommand("detect", "scan images and emit a detection csv");
    std::string det_model, det_manifest, det_out, det_dump;
    std::vector<std::string> det_images;
    add_common_options(detect, opts);
    detect->add_option("--model", det_model, "model file")->required();
    detect->add_option("images", det_images, "image files to scan");
    detect->add_option("--manifest", det_manifest, "scan every image of this manifest");
    detect->add_option("--out", det_out, "detection csv (default stdout)");
    detect->add_option("--dump-descriptors", det_dump,
                       "debug: dump per-window descriptors above threshold as csv");

    // eval
    auto* eval = app.add_subcommand("eval", "score a detection csv against ground truth");
    std::string eval_dets, eval_manifest, eval_out, eval_prefix;
    std::string eval_t_grid = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,"
                              "0.75,0.8,0.85,0.9,0.95,1";
    bool eval_one_to_one = false;
    add_common_options(eval, opts);
    eval->add_option("--detections", eval_dets, "detection csv (ours or third-party)")
        ->required();
    eval->add_option("--manifest", eval_manifest, "ground-truth manifest")->required();
    eval->add_option("--out", eval_out, "metrics csv (default stdout)");
    eval->add_option("--curves", eval_prefix,
                     "prefix for det-curve and matching-degree csv files");
    eval->add_option("--t-grid", eval_t_grid, "matching-degree thresholds for the sweep");
    eval->add_flag("--one-to-one", eval_one_to_one, "strict exclusive matching");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "k-fold calibration sweep over one parameter axis");
    std::string sweep_manifest, sweep_axis, sweep_grid, sweep_out;
    int sweep_folds = 5;
    add_common_options(sweep, opts);
    sweep->add_option("--manifest", sweep_manifest, "training manifest")->required();
    sweep->add_option("--axis", sweep_axis, "cell_block | padding | scales | stride")->required();
    sweep->add_option("--grid", sweep_grid, "comma-separated grid values")->required();
    sweep->add_option("--folds", sweep_folds, "cross-validation folds");
    sweep->add_option("--out", sweep_out, "sweep report csv (default stdout)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic annotated scenes");
    SceneSpec scene_spec;
    int synth_count = 10;
    std::uint64_t synth_seed = 7;
    std::string synth_dir = "synth";
    synth->add_option("--count", synth_count, "number of scenes");
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--out-dir", synth_dir, "output directory");
    synth->add_option("--scene-width", scene_spec.width, "scene width");
    synth->add_option("--scene-height", scene_spec.height, "scene height");
    synth->add_option("--min-plates", scene_spec.min_plates, "plates per scene, lower bound");
    synth->add_option("--max-plates", scene_spec.max_plates, "plates per scene, upper bound");
    synth->add_option("--min-plate-width", scene_spec.min_plate_width, "narrowest plate");
    synth->add_option("--max-plate-width", scene_spec.max_plate_width, "widest plate");
    synth->add_option("--stripes", scene_spec.stripe_distractors, "stripe distractors per scene");
    synth->add_option("--blobs", scene_spec.blob_distractors, "blob distractors per scene");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return cmd_train(opts, train_manifest, train_model, train_pre_model);
        if (detect->parsed())
            return cmd_detect(opts, det_model, det_images, det_manifest, det_out, det_dump);
        if (eval->parsed())
            return cmd_eval(opts, eval_dets, eval_manifest, eval_t_grid, eval_out, eval_prefix,
                            eval_one_to_one);
        if (sweep->parsed())
            return cmd_sweep(opts, sweep_manifest, sweep_axis, sweep_grid, sweep_folds,
                             sweep_out);
        if (synth->parsed()) return cmd_synth(scene_spec, synth_count, synth_seed, synth_dir);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
