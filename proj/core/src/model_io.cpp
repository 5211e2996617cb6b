#include "aspca/model_io.hpp"

namespace aspca {

using nlohmann::json;

json model_to_json(const LqSpaceSpec& space, const SpikedCovariance& model, ThetaLayout layout) {
  json doc;
  doc["format"] = "aspca-model/1";
  doc["q"] = space.q;
  doc["C"] = space.radii;
  doc["N"] = model.dim();
  doc["M"] = model.rank();
  doc["lambdas"] = model.lambdas();
  doc["sigma2"] = model.sigma2();
  const Matrix& theta = model.theta();
  json th;
  if (layout == ThetaLayout::dense) {
    th["layout"] = "dense";
    std::vector<double> data(theta.data(), theta.data() + theta.size());
    th["data"] = data;
  } else {
    th["layout"] = "sparse";
    json cols = json::array();
    for (Eigen::Index nu = 0; nu < theta.cols(); ++nu) {
      json entries = json::array();
      for (Eigen::Index k = 0; k < theta.rows(); ++k) {
        if (theta(k, nu) != 0.0) entries.push_back(json::array({k, theta(k, nu)}));
      }
      cols.push_back(entries);
    }
    th["columns"] = cols;
  }
  doc["theta"] = th;
  return doc;
}

ModelDocument model_from_json(const json& doc) {
  try {
    if (doc.value("format", std::string()) != "aspca-model/1") {
      fail(ErrorKind::parse, "model document: unknown or missing format tag");
    }
    LqSpaceSpec space;
    space.q = doc.at("q").get<double>();
    space.radii = doc.at("C").get<std::vector<double>>();
    space.ambient_dim = doc.at("N").get<int>();
    space.rank = doc.at("M").get<int>();
    auto lambdas = doc.at("lambdas").get<std::vector<double>>();
    const double sigma2 = doc.at("sigma2").get<double>();
    const json& th = doc.at("theta");
    Matrix theta = Matrix::Zero(space.ambient_dim, space.rank);
    const std::string layout = th.at("layout").get<std::string>();
    if (layout == "dense") {
      const auto data = th.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != theta.size()) {
        fail(ErrorKind::parse, "model document: dense theta has the wrong size");
      }
      theta = Eigen::Map<const Matrix>(data.data(), space.ambient_dim, space.rank);
    } else if (layout == "sparse") {
      const json& cols = th.at("columns");
      if (static_cast<int>(cols.size()) != space.rank) {
        fail(ErrorKind::parse, "model document: sparse theta needs one entry list per column");
      }
      for (int nu = 0; nu < space.rank; ++nu) {
        for (const json& e : cols[nu]) {
          const int k = e.at(0).get<int>();
          if (k < 0 || k >= space.ambient_dim) fail(ErrorKind::parse, "model document: theta index out of range");
          theta(k, nu) = e.at(1).get<double>();
        }
      }
    } else {
      fail(ErrorKind::parse, "model document: theta layout must be dense or sparse");
    }
    space.validate();
    return ModelDocument{space, SpikedCovariance(std::move(lambdas), std::move(theta), sigma2)};
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("model document: ") + e.what());
  }
}

std::string write_model(const LqSpaceSpec& space, const SpikedCovariance& model, ThetaLayout layout) {
  return model_to_json(space, model, layout).dump(2) + "\n";
}

ModelDocument read_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("model document: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace aspca
