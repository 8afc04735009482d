#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "uavnet/dataset_io.hpp"
#include "uavnet/handover.hpp"
#include "uavnet/predict.hpp"
#include "uavnet/stats.hpp"
#include "uavnet/synth.hpp"

namespace py = pybind11;
using namespace uavnet;

namespace {

Scenario builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "climb") return climb_scenario(seed);
  if (name == "mission") return mission_scenario(seed);
  if (name == "starlink") return starlink_scenario(seed);
  throw std::invalid_argument("unknown scenario '" + name + "' (expected climb, mission, starlink)");
}

HandoverThresholds thresholds(double a3, double e2_rsrp, double e2_rsrq, double e3_rsrp) {
  HandoverThresholds th{a3, e2_rsrp, e2_rsrq, e3_rsrp};
  th.check();
  return th;
}

py::dict event_dict(const HandoverEvent& e) {
  py::dict d;
  d["t_ns"] = e.t;
  d["sample_index"] = e.sample_index;
  d["from_cell"] = e.from_cell;
  d["to_cell"] = e.to_cell;
  d["cause"] = std::string(to_string(e.cause));
  d["pre_rsrp"] = e.pre_rsrp;
  d["pre_rsrq"] = e.pre_rsrq;
  d["pre_nb_rsrp"] = e.pre_nb_rsrp;
  d["rtt_delta_ms"] = e.rtt_delta_ms;
  return d;
}

std::vector<predict::TrainingRow> training_rows(const std::vector<std::array<double, 3>>& x,
                                                const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("features and targets differ in length");
  std::vector<predict::TrainingRow> rows;
  rows.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) rows.push_back({{x[i][0], x[i][1], x[i][2]}, y[i]});
  return rows;
}

predict::Hyperparams hyperparams(const py::dict& kw) {
  predict::Hyperparams hp;
  for (const auto& [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "n_trees") hp.n_trees = v.cast<int>();
    else if (key == "max_depth") hp.max_depth = v.cast<int>();
    else if (key == "max_features") hp.max_features = v.cast<int>();
    else if (key == "min_samples_leaf") hp.min_samples_leaf = v.cast<int>();
    else if (key == "boost_rounds") hp.boost_rounds = v.cast<int>();
    else if (key == "learning_rate") hp.learning_rate = v.cast<double>();
    else if (key == "boost_depth") hp.boost_depth = v.cast<int>();
    else if (key == "hidden_units") hp.hidden_units = v.cast<int>();
    else if (key == "epochs") hp.epochs = v.cast<int>();
    else if (key == "step_size") hp.step_size = v.cast<double>();
    else if (key == "batch_size") hp.batch_size = v.cast<int>();
    else throw std::invalid_argument("unknown hyperparameter '" + key + "'");
  }
  hp.check();
  return hp;
}

py::dict report_dict(const predict::EvalReport& r) {
  py::dict d;
  d["protocol"] = std::string(predict::to_string(r.protocol));
  d["model"] = std::string(predict::to_string(r.kind));
  d["mae"] = r.pooled.mae;
  d["rmse"] = r.pooled.rmse;
  d["n_test"] = r.n_test;
  py::list folds;
  for (const auto& f : r.folds) {
    py::dict fd;
    fd["label"] = f.label;
    fd["altitude_bin"] = f.altitude_bin;
    fd["n_train"] = f.train_index.size();
    fd["n_test"] = f.test_index.size();
    fd["mae"] = f.error.mae;
    fd["rmse"] = f.error.rmse;
    folds.append(fd);
  }
  d["folds"] = folds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_uavnet, m) {
  m.doc() = "UAV cellular and satellite link measurement analysis";

  py::class_<FlightDataset>(m, "Dataset")
      .def_readonly("flight_id", &FlightDataset::flight_id)
      .def("__len__", [](const FlightDataset& ds) { return ds.samples.size(); })
      .def("timestamps",
           [](const FlightDataset& ds) {
             std::vector<TimestampNs> t;
             for (const auto& s : ds.samples) t.push_back(s.timestamp);
             return t;
           })
      .def("serving_cells",
           [](const FlightDataset& ds) {
             std::vector<std::optional<CellId>> c;
             for (const auto& s : ds.samples) c.push_back(serving_cell(s));
             return c;
           })
      .def("altitudes",
           [](const FlightDataset& ds) {
             std::vector<double> a;
             for (const auto& s : ds.samples) a.push_back(s.position.altitude_asl);
             return a;
           })
      .def("metric", [](const FlightDataset& ds, const std::string& name) { return metric_series(ds, parse_metric(name)); },
           py::arg("name"))
      .def("validate",
           [](const FlightDataset& ds) {
             const auto r = validate_dataset(ds);
             py::dict d;
             d["ok"] = r.ok();
             d["violations"] = r.violations.size();
             d["range_violations"] = r.range_violations;
             d["timestamp_regressions"] = r.timestamp_regressions;
             d["serving_null_fraction"] = r.serving_null_fraction;
             d["null_warning"] = r.null_warning;
             return d;
           })
      .def("to_csv",
           [](const FlightDataset& ds) {
             std::ostringstream os;
             write_dataset(os, ds, TableFormat::Csv);
             return os.str();
           })
      .def("save", [](const FlightDataset& ds, const std::string& path) { write_dataset_file(path, ds); },
           py::arg("path"));

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& link) { return parse_dataset(path, parse_link(link)).dataset; },
      py::arg("path"), py::arg("link") = "cellular");
  m.def(
      "parse_dataset_text",
      [](const std::string& text, const std::string& link) { return parse_dataset_text(text, parse_link(link)).dataset; },
      py::arg("text"), py::arg("link") = "cellular");

  m.def(
      "synthesize",
      [](const std::string& scenario, std::uint64_t seed, double null_injection) {
        auto sc = builtin_scenario(scenario, seed);
        sc.options.null_injection_prob = null_injection;
        auto r = generate(sc);
        std::vector<std::tuple<std::size_t, CellId, CellId>> truth;
        for (const auto& h : r.truth.handovers) truth.emplace_back(h.sample_index, h.from_cell, h.to_cell);
        return py::make_tuple(std::move(r.dataset), truth);
      },
      py::arg("scenario") = "mission", py::arg("seed") = 1, py::arg("null_injection") = 0.0,
      "Generate a built-in scenario; returns (dataset, [(index, from, to), ...]).");

  m.def(
      "classify_handover",
      [](std::optional<double> rsrp, std::optional<double> rsrq, std::optional<double> nb, double a3, double e2_rsrp,
         double e2_rsrq, double e3_rsrp) {
        return std::string(to_string(classify_handover({rsrp, rsrq, nb}, thresholds(a3, e2_rsrp, e2_rsrq, e3_rsrp))));
      },
      py::arg("rsrp"), py::arg("rsrq"), py::arg("neighbor_rsrp"), py::arg("a3_delta_db") = 3.0,
      py::arg("e2_rsrp_dbm") = -95.0, py::arg("e2_rsrq_db") = -18.0, py::arg("e3_rsrp_dbm") = -110.0);

  m.def(
      "detect_handovers",
      [](const FlightDataset& ds, double a3, double e2_rsrp, double e2_rsrq, double e3_rsrp,
         std::optional<double> rtt_window_s) {
        auto events = detect_and_classify(ds, thresholds(a3, e2_rsrp, e2_rsrq, e3_rsrp));
        if (rtt_window_s) events = rtt_impact(events, ds, {*rtt_window_s, 3}).events;
        py::list out;
        for (const auto& e : events) out.append(event_dict(e));
        return out;
      },
      py::arg("dataset"), py::arg("a3_delta_db") = 3.0, py::arg("e2_rsrp_dbm") = -95.0, py::arg("e2_rsrq_db") = -18.0,
      py::arg("e3_rsrp_dbm") = -110.0, py::arg("rtt_window_s") = py::none());

  m.def("delivery_rate", &delivery_rate, py::arg("pkts_sent"), py::arg("pkts_delivered"));

  m.def(
      "dominance",
      [](const FlightDataset& ds) {
        std::vector<std::pair<CellId, double>> out;
        for (const auto& c : dominance(ds)) out.emplace_back(c.cell_id, c.share);
        return out;
      },
      py::arg("dataset"));

  m.def(
      "altitude_profile",
      [](const FlightDataset& ds, const std::string& metric, double width) {
        std::vector<std::tuple<double, double, double, double, std::size_t>> out;
        for (const auto& r : altitude_profile(bin_by_altitude(ds, BinningOptions{width}), parse_metric(metric))) {
          out.emplace_back(r.bin.lo_m(), r.stats.mean, r.stats.std, r.stats.median, r.stats.count);
        }
        return out;
      },
      py::arg("dataset"), py::arg("metric") = "rsrp", py::arg("bin_width_m") = 10.0,
      "Rows of (bin_lo_m, mean, std, median, count).");

  m.def(
      "pearson",
      [](const std::vector<std::optional<double>>& x, const std::vector<std::optional<double>>& y) {
        return pearson(x, y);
      },
      py::arg("x"), py::arg("y"));

  py::class_<EmpiricalCdf>(m, "EmpiricalCdf")
      .def(py::init([](const std::vector<std::optional<double>>& v) { return EmpiricalCdf(v); }), py::arg("values"))
      .def("__call__", &EmpiricalCdf::eval, py::arg("x"))
      .def("eval", &EmpiricalCdf::eval, py::arg("x"))
      .def("quantile", &EmpiricalCdf::quantile, py::arg("p"))
      .def("__len__", &EmpiricalCdf::size)
      .def_property_readonly("min", &EmpiricalCdf::min)
      .def_property_readonly("max", &EmpiricalCdf::max);

  m.def(
      "metrics",
      [](const std::vector<double>& y, const std::vector<double>& yhat) {
        const auto e = predict::metrics(y, yhat);
        return py::make_tuple(e.mae, e.rmse);
      },
      py::arg("y"), py::arg("y_hat"), "Returns (mae, rmse).");

  py::class_<predict::TrainedPredictor>(m, "Predictor")
      .def_property_readonly("kind", [](const predict::TrainedPredictor& p) { return std::string(predict::to_string(p.kind())); })
      .def_property_readonly("n_train", &predict::TrainedPredictor::n_train)
      .def(
          "predict",
          [](const predict::TrainedPredictor& p, const std::vector<std::array<double, 3>>& x) {
            std::vector<predict::FeatureRow> rows;
            for (const auto& r : x) rows.push_back({r[0], r[1], r[2]});
            return p.predict(rows);
          },
          py::arg("x"))
      .def("to_json", &predict::TrainedPredictor::to_json)
      .def_static("from_json", [](const std::string& s) { return predict::TrainedPredictor::from_json(s); })
      .def("save", &predict::TrainedPredictor::save, py::arg("path"))
      .def_static("load", &predict::TrainedPredictor::load, py::arg("path"));

  m.def(
      "fit",
      [](const std::vector<std::array<double, 3>>& x, const std::vector<double>& y, const std::string& model,
         std::uint64_t seed, const py::kwargs& kw) {
        const auto rows = training_rows(x, y);
        return predict::fit(rows, predict::parse_model_kind(model), hyperparams(kw), seed);
      },
      py::arg("x"), py::arg("y"), py::arg("model") = "rf", py::arg("seed") = 1,
      "Fit a regressor on rows of (x_m, y_m, alt_m); extra keywords set hyperparameters.");

  m.def(
      "evaluate",
      [](const std::vector<std::array<double, 3>>& x, const std::vector<double>& y, const std::string& model,
         const std::string& protocol, std::uint64_t seed, double bin_width_m, bool edge_bins_only,
         double test_fraction, const py::kwargs& kw) {
        const auto rows = training_rows(x, y);
        const auto kind = predict::parse_model_kind(model);
        const auto hp = hyperparams(kw);
        if (predict::parse_protocol(protocol) == predict::Protocol::RandomSplit) {
          return report_dict(predict::eval_split(rows, kind, test_fraction, seed, hp));
        }
        predict::LoaoOptions o;
        o.bin_width_m = bin_width_m;
        if (edge_bins_only) o.holdout_bins = predict::edge_bins(rows, bin_width_m);
        return report_dict(predict::eval_loao(rows, kind, o, seed, hp));
      },
      py::arg("x"), py::arg("y"), py::arg("model") = "rf", py::arg("protocol") = "loao", py::arg("seed") = 1,
      py::arg("bin_width_m") = 10.0, py::arg("edge_bins") = false, py::arg("test_fraction") = 0.2);
}
