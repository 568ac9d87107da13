#include "disclab/serialize.hpp"

#include <json.hpp>

#include "disclab/errors.hpp"

namespace disclab::io {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json cplx_matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back({m(i, j).real(), m(i, j).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXcd cplx_matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = {j[i][c][0].get<double>(), j[i][c][1].get<double>()};
    }
  }
  return m;
}

json cplx_vector_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back({v[i].real(), v[i].imag()});
  }
  return out;
}

Eigen::VectorXcd cplx_vector_from_json(const json& j) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = {j[i][0].get<double>(), j[i][1].get<double>()};
  }
  return v;
}

json sindy_payload(const sindy::SparseCoefficients& coeffs,
                   const sindy::LibrarySpec& spec) {
  return json{{"term_names", coeffs.term_names},
              {"xi", matrix_to_json(coeffs.xi)},
              {"threshold_lambda", coeffs.threshold_lambda},
              {"rank_deficient", coeffs.rank_deficient},
              {"library",
               {{"poly_degree", spec.poly_degree},
                {"include_trig", spec.include_trig},
                {"include_constant", spec.include_constant}}}};
}

void sindy_payload_read(const json& j, sindy::SparseCoefficients* coeffs,
                        sindy::LibrarySpec* spec) {
  coeffs->term_names = j.at("term_names").get<std::vector<std::string>>();
  coeffs->xi = matrix_from_json(j.at("xi"));
  coeffs->threshold_lambda = j.at("threshold_lambda").get<double>();
  coeffs->rank_deficient = j.value("rank_deficient", false);
  spec->poly_degree = j.at("library").at("poly_degree").get<int>();
  spec->include_trig = j.at("library").at("include_trig").get<bool>();
  spec->include_constant = j.at("library").at("include_constant").get<bool>();
}

json dmd_payload(const dmd::DmdModel& m) {
  return json{{"modes", cplx_matrix_to_json(m.modes)},
              {"omega", cplx_vector_to_json(m.omega)},
              {"amplitudes", cplx_vector_to_json(m.amplitudes)},
              {"rank", m.rank},
              {"delays", m.delays},
              {"dt", m.dt},
              {"t_start", m.t_start},
              {"descended", m.descended},
              {"train_residual", m.train_residual}};
}

dmd::DmdModel dmd_payload_read(const json& j) {
  dmd::DmdModel m;
  m.modes = cplx_matrix_from_json(j.at("modes"));
  m.omega = cplx_vector_from_json(j.at("omega"));
  m.amplitudes = cplx_vector_from_json(j.at("amplitudes"));
  m.rank = j.at("rank").get<int>();
  m.delays = j.at("delays").get<int>();
  m.dt = j.at("dt").get<double>();
  m.t_start = j.at("t_start").get<double>();
  m.descended = j.value("descended", true);
  m.train_residual = j.value("train_residual", 0.0);
  return m;
}

json gpr_payload(const gpr::GprModel& m) {
  return json{{"kernel",
               {{"signal_variance", m.kernel.signal_variance},
                {"length_scales", vector_to_json(m.kernel.length_scales)},
                {"noise_variance", m.kernel.noise_variance}}},
              {"train_inputs", matrix_to_json(m.train_inputs)},
              {"train_targets", matrix_to_json(m.train_targets)},
              {"target_mean", vector_to_json(m.target_mean)},
              {"target_std", vector_to_json(m.target_std)},
              {"log_marginal_likelihood", m.log_marginal_likelihood}};
}

gpr::GprModel gpr_payload_read(const json& j) {
  gpr::Kernel kernel;
  kernel.signal_variance = j.at("kernel").at("signal_variance").get<double>();
  kernel.length_scales = vector_from_json(j.at("kernel").at("length_scales"));
  kernel.noise_variance = j.at("kernel").at("noise_variance").get<double>();
  const Eigen::MatrixXd inputs = matrix_from_json(j.at("train_inputs"));
  const Eigen::MatrixXd targets = matrix_from_json(j.at("train_targets"));
  // Refactorize instead of storing the Cholesky factor: the training set and
  // hyperparameters fully determine the model.
  gpr::FitOptions opts;
  opts.max_iter = 0;
  opts.starts = 1;
  gpr::GprModel m = gpr::gpr_fit(inputs, targets, kernel, opts);
  m.log_marginal_likelihood = j.at("log_marginal_likelihood").get<double>();
  return m;
}

json nn_payload(const nn::MlpModel& m) {
  json weights = json::array();
  for (const auto& w : m.weights) weights.push_back(matrix_to_json(w));
  json biases = json::array();
  for (const auto& b : m.biases) biases.push_back(vector_to_json(b));
  return json{{"layer_sizes", m.spec.layer_sizes},
              {"l2_weight", m.spec.l2_weight},
              {"seed", m.spec.seed},
              {"activation",
               m.spec.activation == nn::Activation::tanh ? "tanh" : "identity"},
              {"weights", weights},
              {"biases", biases},
              {"in_mean", vector_to_json(m.in_mean)},
              {"in_std", vector_to_json(m.in_std)},
              {"out_mean", vector_to_json(m.out_mean)},
              {"out_std", vector_to_json(m.out_std)}};
}

nn::MlpModel nn_payload_read(const json& j) {
  nn::MlpModel m;
  m.spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  m.spec.l2_weight = j.at("l2_weight").get<double>();
  m.spec.seed = j.at("seed").get<std::uint64_t>();
  m.spec.activation = j.at("activation").get<std::string>() == "identity"
                          ? nn::Activation::identity
                          : nn::Activation::tanh;
  for (const auto& w : j.at("weights")) m.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) m.biases.push_back(vector_from_json(b));
  m.in_mean = vector_from_json(j.at("in_mean"));
  m.in_std = vector_from_json(j.at("in_std"));
  m.out_mean = vector_from_json(j.at("out_mean"));
  m.out_std = vector_from_json(j.at("out_std"));
  return m;
}

std::string dump(const json& j) { return j.dump(); }

}  // namespace

std::string to_json(const sindy::SparseCoefficients& coeffs,
                    const sindy::LibrarySpec& spec) {
  return dump(sindy_payload(coeffs, spec));
}

void sindy_from_json(const std::string& text, sindy::SparseCoefficients* coeffs,
                     sindy::LibrarySpec* spec) {
  sindy_payload_read(json::parse(text), coeffs, spec);
}

std::string to_json(const dmd::DmdModel& model) {
  return dump(dmd_payload(model));
}

dmd::DmdModel dmd_from_json(const std::string& text) {
  return dmd_payload_read(json::parse(text));
}

std::string to_json(const gpr::GprModel& model) {
  return dump(gpr_payload(model));
}

gpr::GprModel gpr_from_json(const std::string& text) {
  return gpr_payload_read(json::parse(text));
}

std::string to_json(const nn::MlpModel& model) { return dump(nn_payload(model)); }

nn::MlpModel nn_from_json(const std::string& text) {
  return nn_payload_read(json::parse(text));
}

std::string to_json(const discrepancy::DiscrepancyModel& model) {
  using discrepancy::DiscrepancyModel;
  json payload;
  if (const auto* p = std::get_if<DiscrepancyModel::SindyPayload>(&model.payload)) {
    payload = sindy_payload(p->coeffs, p->library);
  } else if (const auto* p =
                 std::get_if<DiscrepancyModel::DmdPayload>(&model.payload)) {
    payload = dmd_payload(p->model);
  } else if (const auto* p =
                 std::get_if<DiscrepancyModel::GprPayload>(&model.payload)) {
    payload = json::array();
    for (const auto& m : p->models) payload.push_back(gpr_payload(m));
  } else if (const auto* p =
                 std::get_if<DiscrepancyModel::NnPayload>(&model.payload)) {
    payload = nn_payload(p->model);
  } else {
    throw ConfigError("oracle discrepancy models are not serializable");
  }
  return dump(json{{"method", to_string(model.method)},
                   {"approach", to_string(model.approach)},
                   {"metadata",
                    {{"training_rmse", model.metadata.training_rmse},
                     {"fit_seconds", model.metadata.fit_seconds},
                     {"rank_deficient", model.metadata.rank_deficient},
                     {"descended", model.metadata.descended}}},
                   {"payload", payload}});
}

discrepancy::DiscrepancyModel discrepancy_from_json(const std::string& text) {
  using discrepancy::DiscrepancyModel;
  const json j = json::parse(text);
  DiscrepancyModel model;
  model.method = discrepancy::method_from_string(j.at("method").get<std::string>());
  model.approach =
      discrepancy::approach_from_string(j.at("approach").get<std::string>());
  const auto& meta = j.at("metadata");
  model.metadata.training_rmse = meta.at("training_rmse").get<double>();
  model.metadata.fit_seconds = meta.at("fit_seconds").get<double>();
  model.metadata.rank_deficient = meta.value("rank_deficient", false);
  model.metadata.descended = meta.value("descended", true);

  const auto& payload = j.at("payload");
  switch (model.method) {
    case discrepancy::Method::sindy: {
      DiscrepancyModel::SindyPayload p;
      sindy_payload_read(payload, &p.coeffs, &p.library);
      model.payload = std::move(p);
      break;
    }
    case discrepancy::Method::dmd:
      model.payload = DiscrepancyModel::DmdPayload{dmd_payload_read(payload)};
      break;
    case discrepancy::Method::gpr: {
      DiscrepancyModel::GprPayload p;
      for (const auto& entry : payload) p.models.push_back(gpr_payload_read(entry));
      model.payload = std::move(p);
      break;
    }
    case discrepancy::Method::nn:
      model.payload = DiscrepancyModel::NnPayload{nn_payload_read(payload)};
      break;
    default:
      throw ConfigError("oracle discrepancy models are not serializable");
  }
  return model;
}

}  // namespace disclab::io
