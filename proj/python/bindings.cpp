#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "owcrs/config.hpp"
#include "owcrs/dnn.hpp"
#include "owcrs/experiments.hpp"

namespace py = pybind11;
using namespace owcrs;

namespace {

GroupingPlan group_scenario(const Scenario& sc, int g, uint64_t kmeans_seed) {
  std::vector<Eigen::Vector2d> xy;
  for (const auto& u : sc.user_positions) xy.emplace_back(u.x(), u.y());
  return kmeans_group(xy, g, kmeans_seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "two-tier rate-splitting optical wireless network core";

  py::class_<PhysicalConstants>(m, "PhysicalConstants")
      .def(py::init<>())
      .def_readwrite("wavelength", &PhysicalConstants::wavelength)
      .def_readwrite("beam_waist", &PhysicalConstants::beam_waist)
      .def_readwrite("bandwidth", &PhysicalConstants::bandwidth)
      .def_readwrite("responsivity", &PhysicalConstants::responsivity)
      .def_readwrite("nsd", &PhysicalConstants::nsd)
      .def_readwrite("receiver_area_total", &PhysicalConstants::receiver_area_total)
      .def_readwrite("fov_half_angle", &PhysicalConstants::fov_half_angle)
      .def_readwrite("num_photodiodes", &PhysicalConstants::num_photodiodes)
      .def_readwrite("pd_tilt", &PhysicalConstants::pd_tilt)
      .def_readwrite("steering_cone_half_angle",
                     &PhysicalConstants::steering_cone_half_angle)
      .def("pd_radius", &PhysicalConstants::pd_radius);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("demands", &Scenario::demands)
      .def_readonly("rng_seed", &Scenario::rng_seed)
      .def_property_readonly("user_positions",
                             [](const Scenario& s) {
                               Eigen::MatrixXd p(s.num_users(), 3);
                               for (int i = 0; i < s.num_users(); ++i)
                                 p.row(i) = s.user_positions[i];
                               return p;
                             })
      .def_property_readonly("ap_positions",
                             [](const Scenario& s) {
                               Eigen::MatrixXd p(s.num_aps(), 3);
                               for (int i = 0; i < s.num_aps(); ++i)
                                 p.row(i) = s.ap_positions[i];
                               return p;
                             })
      .def("num_users", &Scenario::num_users)
      .def("num_aps", &Scenario::num_aps);

  py::class_<ChannelMatrix>(m, "ChannelMatrix")
      .def_readonly("gains", &ChannelMatrix::gains)
      .def_readonly("selected_pd", &ChannelMatrix::selected_pd)
      .def_readonly("noise_variance", &ChannelMatrix::noise_variance);

  py::class_<GroupingPlan>(m, "GroupingPlan")
      .def_readonly("num_groups", &GroupingPlan::num_groups)
      .def_readonly("assignment", &GroupingPlan::assignment)
      .def_readonly("group_members", &GroupingPlan::group_members);

  py::class_<PrecoderSet>(m, "PrecoderSet")
      .def_readonly("w_oc", &PrecoderSet::w_oc)
      .def_readonly("no_outer_separation", &PrecoderSet::no_outer_separation);

  py::class_<PowerAllocation>(m, "PowerAllocation")
      .def(py::init<>())
      .def_readwrite("p_oc", &PowerAllocation::p_oc)
      .def_readwrite("p_ic", &PowerAllocation::p_ic)
      .def_readwrite("p_p", &PowerAllocation::p_p)
      .def("total", &PowerAllocation::total);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("sinr_oc", &RateReport::sinr_oc)
      .def_readonly("sinr_ic", &RateReport::sinr_ic)
      .def_readonly("sinr_p", &RateReport::sinr_p)
      .def_readonly("r_oc", &RateReport::r_oc)
      .def_readonly("r_ic", &RateReport::r_ic)
      .def_readonly("r_p", &RateReport::r_p)
      .def_readonly("sum_rate", &RateReport::sum_rate);

  py::class_<ConstraintSet>(m, "ConstraintSet")
      .def(py::init<>())
      .def_static("defaults", &ConstraintSet::defaults, py::arg("p_total"),
                  py::arg("g"), py::arg("k"), py::arg("r_min") = 0.0)
      .def_readwrite("p_total_cap", &ConstraintSet::p_total_cap)
      .def_readwrite("p_oc_fixed", &ConstraintSet::p_oc_fixed)
      .def_readwrite("group_caps", &ConstraintSet::group_caps)
      .def_readwrite("user_cap", &ConstraintSet::user_cap)
      .def_readwrite("r_min", &ConstraintSet::r_min);

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("allocation", &SolveResult::allocation)
      .def_readonly("utility", &SolveResult::utility)
      .def_readonly("sum_rate", &SolveResult::sum_rate)
      .def_readonly("feasible", &SolveResult::feasible)
      .def_readonly("qos_met", &SolveResult::qos_met)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("restarts_used", &SolveResult::restarts_used);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("allocation", &Prediction::allocation)
      .def_readonly("predicted_total", &Prediction::predicted_total)
      .def_readonly("consistency_gap", &Prediction::consistency_gap);

  py::class_<NetworkWeights>(m, "NetworkWeights")
      .def_property_readonly("output_dim",
                             [](const NetworkWeights& nw) {
                               return nw.spec.output_dim();
                             })
      .def_readonly("epochs_trained", &NetworkWeights::epochs_trained)
      .def_readonly("best_val_loss", &NetworkWeights::best_val_loss);

  m.def("rayleigh_distance", &rayleigh_distance, py::arg("w0"), py::arg("wavelength"));
  m.def("beam_radius", &beam_radius, py::arg("w0"), py::arg("d"), py::arg("d_ra"));
  m.def("intensity", &intensity, py::arg("r"), py::arg("d"), py::arg("p_t"),
        py::arg("w_d"));
  m.def("received_power_onaxis", &received_power_onaxis, py::arg("p_t"),
        py::arg("r_m"), py::arg("w_d"));
  m.def("noise_variance", &noise_variance, py::arg("constants"));
  m.def("random_scenario", &random_scenario, py::arg("k"), py::arg("seed"),
        py::arg("constants") = PhysicalConstants{}, py::arg("height") = 0.85,
        py::arg("demand_min") = 0.5, py::arg("demand_max") = 2.0,
        py::arg("room") = std::array<double, 3>{5.0, 5.0, 3.0});
  m.def("build_channel", &build_channel, py::arg("scenario"));
  m.def("group_scenario", &group_scenario, py::arg("scenario"), py::arg("groups"),
        py::arg("seed"));
  m.def("build_precoders", &build_precoders, py::arg("channel"), py::arg("plan"));
  m.def("power_split", &power_split, py::arg("p_total"), py::arg("beta"),
        py::arg("alpha"), py::arg("g"), py::arg("k"));
  m.def("hrs_rates", &hrs_rates, py::arg("channel"), py::arg("plan"),
        py::arg("precoders"), py::arg("allocation"));
  m.def("oma_sum_rate",
        [](const ChannelMatrix& ch, double p_total) {
          return oma_rate(ch, p_total).sum_rate;
        },
        py::arg("channel"), py::arg("p_total"));
  m.def("solve",
        [](const ChannelMatrix& ch, const GroupingPlan& plan,
           const PrecoderSet& prec, const ConstraintSet& cons,
           const std::string& mode, uint64_t seed) {
          return solve(ch, plan, prec, cons, utility_mode_from_string(mode), seed);
        },
        py::arg("channel"), py::arg("plan"), py::arg("precoders"), py::arg("cons"),
        py::arg("mode") = "sum", py::arg("seed") = 1);
  m.def("kmeans_seed_for", &kmeans_seed_for, py::arg("scenario_seed"));
  m.def("solver_seed_for", &solver_seed_for, py::arg("scenario_seed"));
  m.def("load_weights", &load_weights, py::arg("path"));
  m.def("predict",
        [](const NetworkWeights& nw, const Eigen::VectorXd& features,
           const ConstraintSet& cons, const GroupingPlan& plan) {
          return predict(nw, features, cons, plan);
        },
        py::arg("model"), py::arg("features"), py::arg("cons"), py::arg("plan"));

  py::register_exception<DisconnectedUserError>(m, "DisconnectedUserError");
}
