#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "clreg/cli/config_io.hpp"
#include "clreg/cli/report_io.hpp"
#include "clreg/contrastive.hpp"
#include "clreg/error.hpp"
#include "clreg/scoring.hpp"
#include "clreg/separation.hpp"
#include "clreg/simulator.hpp"
#include "clreg/theory.hpp"

namespace py = pybind11;
using namespace clreg;
using Mat = Eigen::MatrixXd;

namespace {

UnitEmbedding unit(const Eigen::VectorXd& v) { return UnitEmbedding::from_unit(v); }

ContrastiveBatch batch(const Mat& a, const Mat& p, const Mat& n) { return {a, p, n}; }

}  // namespace

PYBIND11_MODULE(_clreg, m) {
  m.doc() = "Contrastive representation regularizer: losses, separation metrics, scoring";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("dpo_cl_loss", [](const Mat& a, const Mat& p, const Mat& n, double tau) {
    return dpo_cl_loss(batch(a, p, n), tau);
  }, py::arg("anchors"), py::arg("positives"), py::arg("negatives"), py::arg("tau") = 0.5);
  m.def("infonce_cl_loss", [](const Mat& a, const Mat& p, const Mat& n, double tau) {
    return infonce_cl_loss(batch(a, p, n), tau);
  }, py::arg("anchors"), py::arg("positives"), py::arg("negatives"), py::arg("tau") = 0.5);
  m.def("anchor_gradient", [](const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                              const Eigen::VectorXd& n, double tau) {
    return anchor_gradient(unit(a), unit(p), unit(n), tau);
  }, py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("tau"));
  m.def("anchor_step", [](const Eigen::VectorXd& a, const Eigen::VectorXd& p,
                          const Eigen::VectorXd& n, double tau, double eta, bool renormalize) {
    return anchor_step(unit(a), unit(p), unit(n), tau, eta, renormalize);
  }, py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("tau"), py::arg("eta"),
     py::arg("renormalize") = false);
  m.def("cross_similarity", [](const Mat& f, const Mat& r) { return cross_similarity(f, r); },
        py::arg("forget"), py::arg("retain"));

  m.def("entanglement", [](const Mat& f, const Mat& r) { return entanglement(f, r); },
        py::arg("forget"), py::arg("retain"));
  m.def("mk_mmd", [](const Mat& f, const Mat& r, std::optional<std::vector<double>> bw) {
    return mk_mmd(f, r, bw);
  }, py::arg("forget"), py::arg("retain"), py::arg("bandwidths") = py::none());
  m.def("sliced_w2", [](const Mat& f, const Mat& r, int n, std::uint64_t seed) {
    return sliced_w2(f, r, n, seed);
  }, py::arg("forget"), py::arg("retain"), py::arg("n_projections") = 256, py::arg("seed") = 0);
  m.def("exact_w2_1d", &exact_w2_1d, py::arg("xs"), py::arg("ys"));
  m.def("separation_report_json", [](const Mat& f, const Mat& r, int n, std::uint64_t seed) {
    SeparationConfig cfg;
    cfg.n_projections = n;
    cfg.seed = seed;
    return cli::to_json(separation_report(f, r, cfg)).dump();
  }, py::arg("forget"), py::arg("retain"), py::arg("n_projections") = 256, py::arg("seed") = 0);

  m.def("prog", [](double ul, double ft, double rt, bool log_scale) {
    return prog({"metric", ul, ft, rt, log_scale}).value;
  }, py::arg("m_ul"), py::arg("m_ft"), py::arg("m_rt"), py::arg("log_scale") = false);
  m.def("harmonic_mean", [](const std::vector<double>& v) { return harmonic_mean(v); });
  m.def("unlearning_score", &unlearning_score, py::arg("forget_score"), py::arg("utility"));
  m.def("priv_leak", &priv_leak, py::arg("auc_ul"), py::arg("auc_rt"));
  m.def("ks_two_sample", [](const std::vector<double>& x, const std::vector<double>& y) {
    const KsResult r = ks_two_sample(x, y);
    return py::make_tuple(r.statistic, r.p_value);
  }, py::arg("xs"), py::arg("ys"));
  m.def("exact_memorization", [](const std::vector<int>& p, const std::vector<int>& g) {
    return exact_memorization(p, g);
  }, py::arg("pred"), py::arg("gt"));
  m.def("extraction_strength", [](const std::function<std::vector<int>(std::vector<int>)>& f,
                                  const std::vector<int>& seq) {
    return extraction_strength(
        [&](std::span<const int> prefix) { return f({prefix.begin(), prefix.end()}); }, seq);
  }, py::arg("continuer"), py::arg("seq"));
  m.def("rouge_l_recall", [](const std::vector<int>& p, const std::vector<int>& r) {
    return rouge_l_recall(p, r);
  }, py::arg("pred"), py::arg("ref"));

  m.def("simulate_json", [](const std::string& config) {
    const cli::RunConfigFile cfg =
        cli::run_config_from_json(nlohmann::json::parse(config.empty() ? "{}" : config));
    cfg.validate();
    RunReport report;
    {
      py::gil_scoped_release release;
      report = train(cfg.train, cfg.task);
    }
    return cli::to_json(report).dump();
  }, py::arg("config") = "");

  m.def("verify_theory_json", [](int trials, int separation_trials, std::uint64_t seed) {
    TheoryOptions opt;
    opt.trials = trials;
    opt.separation_trials = separation_trials;
    opt.seed = seed;
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : verify_theory(opt)) out.push_back(cli::to_json(s));
    return out.dump();
  }, py::arg("trials") = 1000, py::arg("separation_trials") = 200, py::arg("seed") = 0);
}
