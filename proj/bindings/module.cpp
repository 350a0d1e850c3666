#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "platescan/dataset.hpp"
#include "platescan/detector.hpp"
#include "platescan/errors.hpp"
#include "platescan/eval.hpp"
#include "platescan/hog.hpp"
#include "platescan/image.hpp"
#include "platescan/svm.hpp"
#include "platescan/synthetic.hpp"

namespace py = pybind11;
using namespace platescan;

namespace {

GrayImage gray_from_array(const py::array& arr) {
    const py::array_t<float, py::array::c_style | py::array::forcecast> a(arr);
    if (a.ndim() != 2) throw DataError("expected a 2-D grayscale array");
    GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

py::array_t<float> gray_to_array(const GrayImage& img) {
    py::array_t<float> out({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

RgbImage rgb_from_array(const py::array& arr) {
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a(arr);
    if (a.ndim() != 3 || a.shape(2) != 3) throw DataError("expected an HxWx3 uint8 array");
    RgbImage img;
    img.height = static_cast<int>(a.shape(0));
    img.width = static_cast<int>(a.shape(1));
    img.data.assign(a.data(), a.data() + a.size());
    return img;
}

std::vector<double> vec_from_array(const py::array& arr) {
    const py::array_t<double, py::array::c_style | py::array::forcecast> a(arr);
    if (a.ndim() != 1) throw DataError("expected a 1-D descriptor array");
    return {a.data(), a.data() + a.size()};
}

FeatureMatrix matrix_from_array(const py::array& arr) {
    const py::array_t<double, py::array::c_style | py::array::forcecast> a(arr);
    if (a.ndim() != 2) throw DataError("expected a 2-D (rows x dim) array");
    FeatureMatrix m(static_cast<std::size_t>(a.shape(1)));
    for (py::ssize_t r = 0; r < a.shape(0); ++r)
        m.push_back(std::span<const double>(a.data() + r * a.shape(1),
                                            static_cast<std::size_t>(a.shape(1))));
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "HOG + sliding-window license plate detection core";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);

    py::enum_<BlockNorm>(m, "BlockNorm")
        .value("L1", BlockNorm::L1)
        .value("L2", BlockNorm::L2);

    py::class_<HogConfig>(m, "HogConfig")
        .def(py::init<>())
        .def_readwrite("cell_size", &HogConfig::cell_size)
        .def_readwrite("block_size", &HogConfig::block_size)
        .def_readwrite("block_stride", &HogConfig::block_stride)
        .def_readwrite("num_bins", &HogConfig::num_bins)
        .def_readwrite("norm", &HogConfig::norm)
        .def_readwrite("epsilon", &HogConfig::epsilon);

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init<>())
        .def(py::init([](int x, int y, int w, int h) { return BoundingBox{x, y, w, h}; }),
             py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
        .def_readwrite("x", &BoundingBox::x)
        .def_readwrite("y", &BoundingBox::y)
        .def_readwrite("w", &BoundingBox::w)
        .def_readwrite("h", &BoundingBox::h)
        .def("area", &BoundingBox::area)
        .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
        .def("__repr__", [](const BoundingBox& b) {
            return "BoundingBox(x=" + std::to_string(b.x) + ", y=" + std::to_string(b.y) +
                   ", w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")";
        });

    py::class_<Detection>(m, "Detection")
        .def(py::init<>())
        .def_readwrite("box", &Detection::box)
        .def_readwrite("score", &Detection::score)
        .def_readwrite("level_index", &Detection::level_index)
        .def("__repr__", [](const Detection& d) {
            return "Detection(score=" + std::to_string(d.score) + ", level=" +
                   std::to_string(d.level_index) + ")";
        });

    py::class_<PyramidConfig>(m, "PyramidConfig")
        .def(py::init<>())
        .def_readwrite("step", &PyramidConfig::step)
        .def_readwrite("num_levels", &PyramidConfig::num_levels);

    py::class_<ScanConfig>(m, "ScanConfig")
        .def(py::init<>())
        .def_readwrite("window_w", &ScanConfig::window_w)
        .def_readwrite("window_h", &ScanConfig::window_h)
        .def_readwrite("stride", &ScanConfig::stride)
        .def_readwrite("pad_x", &ScanConfig::pad_x)
        .def_readwrite("pad_y", &ScanConfig::pad_y)
        .def_readwrite("pyramid", &ScanConfig::pyramid)
        .def_readwrite("nms_overlap", &ScanConfig::nms_overlap)
        .def_readwrite("threads", &ScanConfig::threads);

    py::class_<SvmTrainConfig>(m, "SvmTrainConfig")
        .def(py::init<>())
        .def_readwrite("c", &SvmTrainConfig::c)
        .def_readwrite("max_epochs", &SvmTrainConfig::max_epochs)
        .def_readwrite("tolerance", &SvmTrainConfig::tolerance)
        .def_readwrite("seed", &SvmTrainConfig::seed);

    py::class_<LinearModel>(m, "LinearModel")
        .def(py::init<>())
        .def_property(
            "weights",
            [](const LinearModel& m_) {
                py::array_t<double> out(static_cast<py::ssize_t>(m_.weights.size()));
                std::copy(m_.weights.begin(), m_.weights.end(), out.mutable_data());
                return out;
            },
            [](LinearModel& m_, const py::array& arr) { m_.weights = vec_from_array(arr); })
        .def_readwrite("bias", &LinearModel::bias)
        .def_readwrite("threshold", &LinearModel::threshold)
        .def_readwrite("hog", &LinearModel::hog)
        .def_readwrite("window_w", &LinearModel::window_w)
        .def_readwrite("window_h", &LinearModel::window_h);

    py::class_<ImageTally>(m, "ImageTally")
        .def_readonly("gt_total", &ImageTally::gt_total)
        .def_readonly("gt_matched", &ImageTally::gt_matched)
        .def_readonly("det_total", &ImageTally::det_total)
        .def_readonly("det_matched", &ImageTally::det_matched)
        .def_readonly("false_positives", &ImageTally::false_positives);

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("recall", &EvalResult::recall)
        .def_readonly("precision", &EvalResult::precision)
        .def_readonly("fppi", &EvalResult::fppi)
        .def_readonly("images", &EvalResult::images)
        .def_readonly("gt_total", &EvalResult::gt_total)
        .def_readonly("det_total", &EvalResult::det_total)
        .def_readonly("per_image", &EvalResult::per_image);

    py::class_<SceneSpec>(m, "SceneSpec")
        .def(py::init<>())
        .def_readwrite("width", &SceneSpec::width)
        .def_readwrite("height", &SceneSpec::height)
        .def_readwrite("min_plates", &SceneSpec::min_plates)
        .def_readwrite("max_plates", &SceneSpec::max_plates)
        .def_readwrite("min_plate_width", &SceneSpec::min_plate_width)
        .def_readwrite("max_plate_width", &SceneSpec::max_plate_width)
        .def_readwrite("aspect_mean", &SceneSpec::aspect_mean)
        .def_readwrite("aspect_std", &SceneSpec::aspect_std)
        .def_readwrite("stripe_distractors", &SceneSpec::stripe_distractors)
        .def_readwrite("blob_distractors", &SceneSpec::blob_distractors)
        .def_readwrite("margin", &SceneSpec::margin);

    m.def("to_grayscale",
          [](const py::array& rgb) { return gray_to_array(to_grayscale(rgb_from_array(rgb))); },
          py::arg("rgb"), "BT.601 luma conversion of an HxWx3 uint8 array");

    m.def("resize",
          [](const py::array& img, int w, int h) {
              return gray_to_array(resize(gray_from_array(img), w, h));
          },
          py::arg("img"), py::arg("width"), py::arg("height"));

    m.def("descriptor_length", &descriptor_length, py::arg("window_w"), py::arg("window_h"),
          py::arg("config"));

    m.def("hog_descriptor",
          [](const py::array& img, const HogConfig& cfg) {
              const HogDescriptor d = compute_window_descriptor(gray_from_array(img), cfg);
              py::array_t<double> out(static_cast<py::ssize_t>(d.values.size()));
              std::copy(d.values.begin(), d.values.end(), out.mutable_data());
              return out;
          },
          py::arg("img"), py::arg("config"),
          "HOG descriptor of a whole image treated as one window");

    m.def("train_svm",
          [](const py::array& pos, const py::array& neg, const SvmTrainConfig& cfg) {
              return train_svm(matrix_from_array(pos), matrix_from_array(neg), cfg);
          },
          py::arg("positives"), py::arg("negatives"), py::arg("config") = SvmTrainConfig{});

    m.def("score",
          [](const LinearModel& model, const py::array& x) {
              const std::vector<double> v = vec_from_array(x);
              return score(model, std::span<const double>(v));
          },
          py::arg("model"), py::arg("descriptor"));

    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    m.def("scan",
          [](const py::array& img, const LinearModel& model, const HogConfig& hog,
             const ScanConfig& cfg) { return scan(gray_from_array(img), model, hog, cfg).detections; },
          py::arg("img"), py::arg("model"), py::arg("hog"), py::arg("config"));

    m.def("non_max_suppression", &non_max_suppression, py::arg("detections"),
          py::arg("overlap"));

    m.def("strip_padding", &strip_padding, py::arg("box"), py::arg("config"));

    m.def("match_pair", &match_pair, py::arg("r"), py::arg("r0"));

    m.def("best_match",
          [](const BoundingBox& r, const std::vector<BoundingBox>& rects) {
              return best_match(r, rects);
          },
          py::arg("r"), py::arg("rects"));

    m.def("evaluate", &evaluate, py::arg("detections"), py::arg("ground_truth"),
          py::arg("match_threshold"), py::arg("one_to_one") = false);

    m.def("det_curve",
          [](const std::vector<std::vector<Detection>>& dets,
             const std::vector<std::vector<BoundingBox>>& gt, double t) {
              return det_curve(dets, gt, t).points;
          },
          py::arg("detections"), py::arg("ground_truth"), py::arg("match_threshold"));

    m.def("generate_scene",
          [](const SceneSpec& spec, std::uint64_t seed) {
              const SyntheticScene s = generate_scene(spec, seed);
              return py::make_tuple(gray_to_array(s.image), s.plates);
          },
          py::arg("spec") = SceneSpec{}, py::arg("seed") = 0,
          "Returns (image, plate boxes); deterministic per seed");

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
