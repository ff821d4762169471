#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "visyreve/campaign.hpp"
#include "visyreve/dataset.hpp"
#include "visyreve/density.hpp"
#include "visyreve/error.hpp"
#include "visyreve/posemetrics.hpp"
#include "visyreve/quality.hpp"
#include "visyreve/scene.hpp"
#include "visyreve/runinfo.hpp"
#include "visyreve/synthesis.hpp"

namespace py = pybind11;
using namespace visyreve;

namespace {

py::array_t<std::uint8_t> to_numpy(const Image& img) {
  std::vector<py::ssize_t> shape = {img.height, img.width};
  if (img.channels > 1) shape.push_back(img.channels);
  py::array_t<std::uint8_t> out(shape);
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

py::array_t<bool> to_numpy(const Mask& m) {
  py::array_t<bool> out({m.height, m.width});
  bool* dst = out.mutable_data();
  for (std::size_t i = 0; i < m.values.size(); ++i) dst[i] = m.values[i] != 0;
  return out;
}

py::dict to_dict(const QualityReport& q) {
  py::dict d;
  d["ssim"] = q.ssim;
  d["iou"] = q.iou;
  d["kps_l2"] = q.kps_l2;
  d["kps_vbn"] = q.kps_vbn;
  d["num_keypoints"] = q.num_keypoints;
  d["bdd"] = q.bdd;
  d["cl2"] = q.cl2;
  d["rot_mag"] = q.rot_mag;
  d["spec"] = q.spec;
  return d;
}

Quaternion quat_from(const std::array<double, 4>& wxyz) {
  return {wxyz[0], wxyz[1], wxyz[2], wxyz[3]};
}

}  // namespace

PYBIND11_MODULE(_visyreve, m) {
  m.attr("__version__") = std::string(library_version());

  static py::exception<Error> error(m, "VisyreveError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error)(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("exit_code") = e.exit_code();
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<Quaternion>(m, "Quaternion")
      .def(py::init<>())
      .def(py::init<double, double, double, double>(), py::arg("w"), py::arg("x"), py::arg("y"), py::arg("z"))
      .def_static("from_axis_angle",
                  [](const std::array<double, 3>& axis, double angle) {
                    return Quaternion::from_axis_angle(Vec3(axis[0], axis[1], axis[2]), angle);
                  })
      .def_property_readonly("w", &Quaternion::w)
      .def_property_readonly("x", &Quaternion::x)
      .def_property_readonly("y", &Quaternion::y)
      .def_property_readonly("z", &Quaternion::z)
      .def("wxyz", [](const Quaternion& q) { return std::array<double, 4>{q.w(), q.x(), q.y(), q.z()}; })
      .def("__mul__", &Quaternion::operator*)
      .def("__eq__", &Quaternion::operator==)
      .def("__repr__", [](const Quaternion& q) {
        return "Quaternion(" + std::to_string(q.w()) + ", " + std::to_string(q.x()) + ", " +
               std::to_string(q.y()) + ", " + std::to_string(q.z()) + ")";
      });

  py::class_<Pose>(m, "Pose")
      .def(py::init([](const std::array<double, 4>& q, const std::array<double, 3>& t) {
             return Pose{quat_from(q), Vec3(t[0], t[1], t[2])};
           }),
           py::arg("q_wxyz"), py::arg("t_xyz"))
      .def_readwrite("rotation", &Pose::rotation)
      .def_property_readonly("translation",
                             [](const Pose& p) {
                               return std::array<double, 3>{p.translation.x(), p.translation.y(),
                                                            p.translation.z()};
                             })
      .def("range", &Pose::range);

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double px, double py_, int w, int h) {
             return Intrinsics{fx, fy, px, py_, w, h};
           }),
           py::arg("fx"), py::arg("fy"), py::arg("px"), py::arg("py"), py::arg("width"), py::arg("height"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("px", &Intrinsics::px)
      .def_readonly("py", &Intrinsics::py)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height);

  m.def("bdd", [](const Pose& a, const Pose& b) { return bdd(a, b).value; });
  m.def("cl2", &cl2);
  m.def("rotation_magnitude", py::overload_cast<const Pose&, const Pose&>(&rotation_magnitude));
  m.def("spec_combined", &spec_combined, py::arg("a"), py::arg("b"), py::arg("weight"));

  py::class_<BaselineSampling>(m, "BaselineSampling")
      .def_property_readonly("size", [](const BaselineSampling& b) { return b.rotations.size(); })
      .def_readonly("rotations", &BaselineSampling::rotations);
  m.def("sample_baseline", &sample_baseline, py::arg("size") = kDefaultBaselineSize,
        py::arg("candidates") = kDefaultBaselineCandidates, py::arg("seed") = 1);
  m.def(
      "lb_bdd",
      [](const std::vector<Pose>& poses, const BaselineSampling& baseline) {
        const DensityReport r = lb_bdd(std::span<const Pose>(poses), baseline);
        py::dict d;
        d["lb_bdd"] = r.lb_bdd;
        d["rho"] = r.rho;
        d["ball_center"] = r.ball_center;
        d["ball_center_index"] = r.ball_center_index;
        return d;
      },
      py::arg("poses"), py::arg("baseline"));

  m.def(
      "kps_vbn",
      [](const std::vector<std::array<double, 2>>& detected, const Pose& pose, const Intrinsics& k,
         const std::vector<std::array<double, 3>>& points) {
        std::vector<ImagePoint> det;
        for (const auto& p : detected) det.push_back({p[0], p[1]});
        KeypointSet kps;
        for (const auto& p : points) kps.points_3d.emplace_back(p[0], p[1], p[2]);
        return kps_vbn(det, pose, k, kps);
      },
      py::arg("detected"), py::arg("pose"), py::arg("intrinsics"), py::arg("points_3d"));

  m.def("pearson", &pearson);
  m.def("spearman", &spearman);

  m.def(
      "make_synthetic_scene",
      [](const std::filesystem::path& out, std::size_t n_views, const std::string& kind,
         const Intrinsics& k, double range_min, double range_max, double lateral, std::uint64_t seed,
         std::uint64_t texture_seed) {
        SceneDatasetConfig c;
        c.scene = {parse_scene_kind(kind), texture_seed};
        c.intrinsics = k;
        c.n_views = n_views;
        c.poses.range_min = range_min;
        c.poses.range_max = range_max;
        c.poses.lateral = lateral;
        c.poses.seed = seed;
        make_synthetic_scene(c, out);
        return out / "manifest.json";
      },
      py::arg("output_dir"), py::arg("n_views"), py::arg("kind") = "cube",
      py::arg("intrinsics") = Intrinsics{300, 300, 127.5, 127.5, 256, 256}, py::arg("range_min") = 5.0,
      py::arg("range_max") = 5.0, py::arg("lateral") = 0.0, py::arg("seed") = 1, py::arg("texture_seed") = 1);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const std::filesystem::path& p) { return std::make_unique<Dataset>(load_manifest(p)); }),
           py::arg("manifest"))
      .def("__len__", &Dataset::size)
      .def("ids",
           [](const Dataset& d) {
             std::vector<std::string> ids;
             for (const auto& v : d.manifest().views) ids.push_back(v.id);
             return ids;
           })
      .def("pose", [](const Dataset& d, const std::string& id) { return d.record(d.manifest().find(id)).pose; })
      .def("poses", [](const Dataset& d) { return d.manifest().poses(); })
      .def_property_readonly("intrinsics", [](const Dataset& d) { return d.manifest().intrinsics; })
      .def("image", [](const Dataset& d, const std::string& id) {
        return to_numpy(d.view(d.manifest().find(id))->image);
      });

  m.def(
      "synthesize",
      [](const Dataset& d, const std::string& source_id, const Pose& target, const std::string& method,
         bool interpolate) {
        const auto view = d.view(d.manifest().find(source_id));
        const auto mesh = d.load_mesh();
        SynthesisOptions opt;
        opt.interpolate = interpolate;
        const SynthesisResult r =
            synthesize(parse_method(method), *view, target, mesh ? &*mesh : nullptr, opt);
        py::dict out;
        out["image"] = to_numpy(r.image);
        out["mask"] = to_numpy(r.transformed_mask);
        out["seconds"] = r.timing.total;
        return out;
      },
      py::arg("dataset"), py::arg("source_id"), py::arg("target_pose"), py::arg("method") = "3dt",
      py::arg("interpolate") = true);

  m.def(
      "run_mc",
      [](const Dataset& d, std::size_t n_pairs, const std::string& method, double spec_weight,
         std::uint64_t seed, double bdd_cap) {
        McConfig c;
        c.n_pairs = n_pairs;
        c.method = parse_method(method);
        c.spec_weight = spec_weight;
        c.seed = seed;
        c.bdd_cap = bdd_cap;
        const auto mesh = d.load_mesh();
        if (!d.manifest().keypoints) throw Error(ErrorCode::SchemaError, "dataset has no keypoints");
        const PerformanceModel model = run_mc(d, c, mesh ? &*mesh : nullptr, *d.manifest().keypoints);
        py::list rows;
        for (const McRow& r : model.rows) {
          py::dict row = to_dict(r.quality);
          row["source_id"] = r.source_id;
          row["target_id"] = r.target_id;
          rows.append(row);
        }
        return rows;
      },
      py::arg("dataset"), py::arg("n_pairs"), py::arg("method") = "homography", py::arg("spec_weight") = 1.0,
      py::arg("seed") = 1, py::arg("bdd_cap") = 0.5);
}
