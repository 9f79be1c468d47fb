// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the main operations: model validation, shock families,
// profiles, spectral checks, Grassmannian flows and Evans-function evaluation.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "evansflow/evans.hpp"
#include "evansflow/io.hpp"
#include "evansflow/runner.hpp"

namespace py = pybind11;
using namespace evansflow;

namespace {

// Owns everything an Evans evaluation needs so python callers keep a single
// handle alive.
struct Workspace {
  ModelSpec model;
  ShockFamily family;
  Real eps;
  FenichelData fen;
  SlowManifold slow;
  ProfileGrid profile;
  SpectralContext ctx;
  EvansEvaluator evaluator;

  Workspace(const ModelSpec& m, const std::vector<Real>& eps_list, Real L,
            EvansOptions opt)
      : model(m),
        family(build_shock_family(m, eps_list)),
        eps(eps_list.back()),
        fen(m, family, eps),
        slow(compute_slow_manifold(fen)),
        profile(integrate_profile(
            fen, slow,
            L > 0 ? L : 10.0 / (eps * std::abs(fen.gamma0() * fen.a())))),
        ctx(m, family, eps),
        evaluator(ctx, &profile, opt) {}
};

py::dict sample_to_dict(const EvansSample& s) {
  py::dict d;
  d["param"] = s.param;
  d["log_value"] = s.log_value;
  d["log_raw"] = s.log_raw;
  d["value"] = s.value();
  d["sigma_min"] = s.sigma_min;
  d["regime"] = regime_name(s.regime);
  return d;
}

}  // namespace

PYBIND11_MODULE(_evansflow, m) {
  m.doc() = "Evans-function toolkit for hyperbolically regularized conservation laws";

  py::register_exception<Error>(m, "EvansflowError");

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_property_readonly("n", &ModelSpec::n)
      .def_property_readonly("k", &ModelSpec::k)
      .def_property_readonly("delta", &ModelSpec::delta)
      .def("f", &ModelSpec::f_eval)
      .def("g", &ModelSpec::g_eval)
      .def("Df", &ModelSpec::Df)
      .def("Dg", &ModelSpec::Dg)
      .def("to_json", &model_to_json);

  m.def("load_model", &load_model_file, py::arg("path"));
  m.def("load_model_json", &load_model_json, py::arg("text"));

  m.def("validate_assumptions",
        [](const ModelSpec& model, int samples, unsigned seed) {
          AssumptionReport r = validate_assumptions(model, samples, seed);
          py::dict d;
          d["a1"] = r.a1;
          d["a2"] = r.a2;
          d["a3"] = r.a3;
          d["a4"] = r.a4;
          d["passed"] = r.passed();
          d["gnl_value"] = r.gnl_value;
          d["a_value"] = r.a_value;
          d["gamma0"] = r.gamma0;
          d["margin_subchar"] = r.margin_subchar;
          d["ball_subchar_margin"] = r.ball_subchar_margin;
          d["eigenvalue_gap"] = r.eigenvalue_gap;
          return d;
        },
        py::arg("model"), py::arg("samples") = 64, py::arg("seed") = 0);

  m.def("eigen_fields", [](const ModelSpec& model, const Vec& v) {
    EigenData ed = eigen_fields(model, v);
    return py::make_tuple(ed.mu, ed.r);
  });

  m.def("normalize_model", [](const ModelSpec& model) {
    NormalizationResult nr = normalize_model(model);
    return py::make_tuple(nr.model, nr.basis_change);
  });

  m.def("genuine_nonlinearity_coeff", &genuine_nonlinearity_coeff);
  m.def("lorentz_boost", &lorentz_boost, py::arg("model"), py::arg("s"));
  m.def("lorentz_gamma", &lorentz_gamma);

  m.def("inertia_split",
        [](const Mat& F, const Mat& Vm, const Mat& Vp) {
          Inertia in = inertia_split(F, Vm, Vp);
          return py::make_tuple(in.neg, in.zero, in.pos);
        },
        py::arg("F"), py::arg("V_minus"), py::arg("V_plus"));

  m.def("solve_rankine_hugoniot",
        [](const ModelSpec& model, Real eps) {
          ShockTriple t = solve_rankine_hugoniot(model, eps);
          py::dict d;
          d["v_minus"] = t.v_minus;
          d["v_plus"] = t.v_plus;
          d["s"] = t.s;
          return d;
        },
        py::arg("model"), py::arg("eps"));

  m.def("classify_lax", [](const ModelSpec& model, const Vec& vm, const Vec& vp,
                           Real s) -> py::object {
    auto p = classify_lax(model, ShockTriple{vm, vp, s});
    if (!p) return py::none();
    return py::int_(*p);
  });

  m.def("build_shock_family", [](const ModelSpec& model, const std::vector<Real>& eps) {
    ShockFamily fam = build_shock_family(model, eps);
    py::list rows;
    for (size_t i = 0; i < fam.eps_values.size(); ++i) {
      py::dict d;
      d["eps"] = fam.eps_values[i];
      d["s"] = fam.triples[i].s;
      d["v_minus"] = fam.triples[i].v_minus;
      d["v_plus"] = fam.triples[i].v_plus;
      rows.append(d);
    }
    return rows;
  });

  m.def("burgers_reference",
        [](Complex zeta_tilde, Real L0) {
          BurgersReference r = burgers_reference(zeta_tilde, L0);
          py::dict d;
          d["zeta_tilde"] = r.zeta_tilde;
          d["h_minus"] = r.h_minus;
          d["h_plus"] = r.h_plus;
          d["log_E0"] = r.log_E0;
          d["E0"] = r.E0();
          return d;
        },
        py::arg("zeta_tilde"), py::arg("L0") = 40.0);

  m.def("shizuta_kawashima_check", [](const Mat& F, const Mat& G) {
    SKReport r = shizuta_kawashima_check(F, G);
    py::dict d;
    d["sk1"] = r.sk1;
    d["sk2"] = r.sk2;
    d["theta"] = r.theta;
    d["nu"] = r.nu;
    d["K0"] = r.K0;
    return d;
  });

  m.def("gap_distance", [](const CMat& X, const CMat& Y) {
    return gap_distance(Frame::from_columns(X), Frame::from_columns(Y));
  });

  m.def("riccati_field", &riccati_field, py::arg("A_basis"), py::arg("T"));

  m.def("classify_equilibrium", [](const CMat& A, const CMat& X) {
    EquilibriumReport r = classify_equilibrium(A, Frame::from_columns(X));
    py::dict d;
    switch (r.tag) {
      case EquilibriumTag::attractor: d["tag"] = "attractor"; break;
      case EquilibriumTag::saddle: d["tag"] = "saddle"; break;
      case EquilibriumTag::repeller: d["tag"] = "repeller"; break;
      case EquilibriumTag::degenerate: d["tag"] = "degenerate"; break;
    }
    d["c_x"] = r.c_x;
    d["c_y"] = r.c_y;
    d["attractor_margin"] = r.attractor_margin;
    return d;
  });

  m.def("regime_partition", [](Real eps, Complex kappa, Real r0, Real r1) {
    return std::string(regime_name(regime_partition(eps, kappa, r0, r1)));
  });

  m.def("outer_transversality",
        [](const ModelSpec& model, Real alpha, Real beta, Complex kappa_hat) {
          OuterReport r = outer_transversality(model, alpha, beta, kappa_hat);
          py::dict d;
          d["min_gap"] = r.min_gap;
          d["terminal_gap"] = r.terminal_gap;
          d["mu_sf"] = r.mu_sf;
          return d;
        });

  py::class_<Workspace>(m, "Workspace")
      .def(py::init([](const ModelSpec& model, const std::vector<Real>& eps_list,
                       Real L) {
             return new Workspace(model, eps_list, L, EvansOptions{});
           }),
           py::arg("model"), py::arg("eps_list"), py::arg("L") = 0.0)
      .def_property_readonly("eps", [](const Workspace& w) { return w.eps; })
      .def_property_readonly("x", [](const Workspace& w) { return w.profile.x; })
      .def_property_readonly("phi", [](const Workspace& w) { return w.profile.phi; })
      .def_property_readonly("chi", [](const Workspace& w) { return w.profile.chi; })
      .def_property_readonly("a", [](const Workspace& w) { return w.fen.a(); })
      .def_property_readonly("gamma0", [](const Workspace& w) { return w.fen.gamma0(); })
      .def("profile_residual",
           [](const Workspace& w) { return profile_residual(w.fen, w.profile); })
      .def("evans_value",
           [](const Workspace& w, Complex kappa) {
             return sample_to_dict(evans_value(w.evaluator, kappa));
           })
      .def("evans_inner",
           [](const Workspace& w, Complex zeta) {
             return sample_to_dict(evans_inner(w.evaluator, zeta));
           })
      .def("endpoint_splitting",
           [](const Workspace& w, Complex kappa) {
             SplittingReport r = endpoint_splitting(w.ctx, kappa);
             py::dict d;
             d["consistent"] = r.consistent;
             d["unstable_minus"] = r.unstable_minus;
             d["stable_plus"] = r.stable_plus;
             d["gap"] = r.gap;
             return d;
           })
      .def("dispersion_margin",
           [](const Workspace& w) {
             DispersionReport r = dispersion_margin(w.ctx);
             py::dict d;
             d["nu"] = r.nu;
             d["theta_minus"] = r.minus.theta;
             d["theta_plus"] = r.plus.theta;
             d["boundary_consistent"] = r.boundary_consistent;
             return d;
           })
      .def("inner_eigenvalue_expansion",
           [](const Workspace& w, Complex zeta) {
             InnerExpansionReport r = inner_eigenvalue_expansion(w.ctx, zeta);
             py::dict d;
             d["nu1"] = r.nu1;
             d["nu2"] = r.nu2;
             py::list groups;
             for (const auto side : {&r.minus, &r.plus})
               for (const auto& g : *side) {
                 py::dict gd;
                 gd["label"] = g.label;
                 gd["predicted"] = g.predicted;
                 gd["matched"] = g.matched;
                 gd["residual"] = g.residual;
                 gd["order"] = g.order;
                 groups.append(gd);
               }
             d["groups"] = groups;
             return d;
           })
      .def("count_zeros",
           [](const Workspace& w, Real R, Real delta, int workers) {
             ZeroCountOptions opt;
             opt.workers = workers;
             ZeroCountReport r = count_zeros_halfplane(w.evaluator, R, delta, opt);
             py::dict d;
             d["winding"] = r.winding;
             d["E0"] = r.E0;
             d["dE0"] = r.dE0;
             d["e0_rel"] = r.e0_rel;
             d["min_sigma"] = r.min_sigma;
             d["samples"] = r.samples;
             d["instability_detected"] = r.instability_detected;
             return d;
           },
           py::arg("R") = 10.0, py::arg("delta") = 1e-5, py::arg("workers") = 1)
      .def("outmost_block_diagonalize",
           [](const Workspace& w, Complex kappa, Real tau) {
             OutmostBlockDiag r =
                 outmost_block_diagonalize(w.ctx, &w.slow, kappa, tau);
             py::dict d;
             d["offdiag_residual"] = r.offdiag_residual;
             d["margin_gt"] = r.margin_gt;
             d["margin_lt"] = r.margin_lt;
             d["deriv_bound"] = r.deriv_bound;
             return d;
           });

  m.def("run_experiment",
        [](const std::filesystem::path& config, const std::string& out_dir,
           const std::string& stage) {
          ExperimentConfig cfg = ExperimentConfig::from_file(config);
          if (!out_dir.empty()) cfg.out_dir = out_dir;
          RunReport rep = run_experiment(cfg, stage_from_name(stage));
          py::dict d;
          d["verdict"] = rep.verdict;
          d["exit_code"] = rep.exit_code;
          d["report_json"] = emit_report(rep, ReportFormat::json);
          py::dict scalars;
          for (const auto& [k, v] : rep.scalars) scalars[py::str(k)] = v;
          d["scalars"] = scalars;
          return d;
        },
        py::arg("config"), py::arg("out_dir") = "", py::arg("stage") = "full");
}
