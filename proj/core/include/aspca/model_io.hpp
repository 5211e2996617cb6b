#pragma once

#include "aspca/spiked_model.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace aspca {

// Model document schema (JSON):
//
//   {
//     "format": "aspca-model/1",
//     "q": <real>, "C": [<real>...], "N": <int>, "M": <int>,
//     "lambdas": [<real>...], "sigma2": <real>,
//     "theta": { "layout": "dense",  "data": [<real>...] }           // column-major, N*M values
//          or  { "layout": "sparse", "columns": [[[<index>, <value>]...]...] }  // zero-based indices
//   }
//
// Reals are written in shortest round-trip form, so reading back reproduces
// every double bit-for-bit.
enum class ThetaLayout { dense, sparse };

struct ModelDocument {
  LqSpaceSpec space;
  SpikedCovariance model;
};

nlohmann::json model_to_json(const LqSpaceSpec& space, const SpikedCovariance& model,
                             ThetaLayout layout = ThetaLayout::sparse);
ModelDocument model_from_json(const nlohmann::json& doc);

std::string write_model(const LqSpaceSpec& space, const SpikedCovariance& model,
                        ThetaLayout layout = ThetaLayout::sparse);
ModelDocument read_model(const std::string& text);

}  // namespace aspca
