#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wnls/lab.hpp"

namespace py = pybind11;
using namespace wnls;

namespace {

LabConfig from_dict(const std::map<std::string, std::string>& kv) {
  LabConfig cfg;
  for (const auto& [k, v] : kv) apply_key(cfg, k, v);
  return cfg;
}

// real part of a field on its own nodes, as an N x N array
py::array_t<double> nodes(const SpectralField& f) {
  const int n = f.grid().n();
  py::array_t<double> out({n, n});
  auto a = out.mutable_unchecked<2>();
  const Samples s = to_physical(f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = s[static_cast<std::size_t>(i) * n + j].real();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalAbort>(m, "NumericalAbort", PyExc_RuntimeError);

  m.def("version", &version_string);

  m.def("default_config", [] { return LabConfig{}.to_map(); });
  m.def(
      "parse_config", [](const std::string& text) { return parse_config(text).to_map(); }, py::arg("text"));
  m.def("parse_eps_list", &parse_eps_list, py::arg("text"));

  m.def(
      "c_eps",
      [](const std::string& mollifier, double eps, int n) {
        return compute_c_eps(Mollifier(parse_mollifier(mollifier)), eps, n);
      },
      py::arg("mollifier"), py::arg("eps"), py::arg("n"));

  m.def(
      "noise_fields",
      [](std::uint64_t seed, int n, double eps, const std::string& mollifier) {
        const NoiseRealization nz = build_noise(std::make_shared<const GaussianCoeffs>(sample_gaussian(seed, 0, n)),
                                                Mollifier(parse_mollifier(mollifier)), eps);
        py::dict d;
        d["C_eps"] = nz.C_eps;
        d["Y"] = nodes(nz.Y);
        d["Y_eps"] = nodes(nz.Y_eps);
        d["xi_eps"] = nodes(nz.xi_eps);
        d["wick_eps"] = nodes(nz.wick_eps);
        return d;
      },
      py::arg("seed"), py::arg("n"), py::arg("eps"), py::arg("mollifier") = "gaussian_rho");

  m.def(
      "run_family",
      [](const std::map<std::string, std::string>& config) {
        const LabConfig cfg = from_dict(config);
        ConvergenceRun run;
        {
          py::gil_scoped_release release;
          run = run_epsilon_family(cfg);
        }
        py::dict d;
        d["eps"] = run.epsilons;
        d["gamma"] = run.gammas;
        d["C_eps"] = run.C_eps;
        d["times"] = run.times;
        py::list tables;
        for (const auto& t : run.tables) {
          py::dict td;
          td["phase"] = t.phase == PhaseMode::renormalized ? "on" : "off";
          td["sup_dist"] = t.sup_dist;
          td["kappa_hat"] = t.kappa_hat;
          tables.append(td);
        }
        d["tables"] = tables;
        py::list mod;
        for (const auto& r : modulus_comparison(run, {0.0, 0.5}))
          mod.append(py::dict(py::arg("eps") = r.eps, py::arg("gamma") = r.gamma, py::arg("sup_dist") = r.sup_dist));
        d["modulus"] = mod;
        d["failed"] = run.failed;
        d["failure"] = run.failure;
        return d;
      },
      py::arg("config"));

  m.def(
      "noise_stats",
      [](const std::map<std::string, std::string>& config) {
        const LabConfig cfg = from_dict(config);
        std::vector<StatsRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_noise_stats(cfg);
        }
        py::list out;
        for (const auto& r : rows)
          out.append(py::dict(py::arg("eps") = r.eps, py::arg("q") = r.q, py::arg("s") = r.s,
                              py::arg("norm_name") = r.norm_name, py::arg("median") = r.median,
                              py::arg("p10") = r.p10, py::arg("p90") = r.p90, py::arg("fit_slope") = r.fit_slope,
                              py::arg("r2") = r.r2));
        return out;
      },
      py::arg("config"));

  m.def(
      "uniqueness",
      [](const std::map<std::string, std::string>& config, int levels) {
        const LabConfig cfg = from_dict(config);
        UniquenessReport rep;
        {
          py::gil_scoped_release release;
          rep = uniqueness_probe(cfg, levels);
        }
        py::dict d;
        d["dt"] = rep.dts;
        d["cross_dist"] = rep.cross_dist;
        d["strang_self"] = rep.strang_self;
        d["identical_rerun"] = rep.identical_rerun;
        return d;
      },
      py::arg("config"), py::arg("levels") = 2);

  m.def(
      "fit_line",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const LinearFit f = fit_line(x, y);
        return py::make_tuple(f.slope, f.intercept, f.r2);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "lab_main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "wnls-lab");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release release;
        return cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "run the lab command line in-process; returns the exit code");
}
