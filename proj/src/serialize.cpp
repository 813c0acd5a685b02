#include "normdescent/serialize.hpp"

#include "normdescent/errors.hpp"

namespace normdescent {

void to_json(nlohmann::json& j, const Matrix& m) {
  j = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
}

void from_json(const nlohmann::json& j, Matrix& m) {
  if (!j.is_array()) throw ValidationError("matrix json must be an array of rows");
  if (j.empty()) {
    m = Matrix();
    return;
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw ValidationError("matrix json rows must be arrays of equal length");
    }
    for (const auto& v : row) values.push_back(v.get<double>());
  }
  m = Matrix(rows, cols, std::move(values));
}

void to_json(nlohmann::json& j, const AdamState& s) {
  j = nlohmann::json{{"lr", s.lr},
                     {"beta1", s.beta1},
                     {"beta2", s.beta2},
                     {"epsilon", s.epsilon},
                     {"bias_correction", s.bias_correction},
                     {"m", s.m},
                     {"v", s.v},
                     {"step_count", s.step_count}};
}

void from_json(const nlohmann::json& j, AdamState& s) {
  j.at("lr").get_to(s.lr);
  j.at("beta1").get_to(s.beta1);
  j.at("beta2").get_to(s.beta2);
  j.at("epsilon").get_to(s.epsilon);
  j.at("bias_correction").get_to(s.bias_correction);
  j.at("m").get_to(s.m);
  j.at("v").get_to(s.v);
  j.at("step_count").get_to(s.step_count);
}

void to_json(nlohmann::json& j, const ShampooState& s) {
  j = nlohmann::json{{"lr", s.lr},
                     {"epsilon", s.epsilon},
                     {"mode", s.mode},
                     {"beta", s.beta},
                     {"l_acc", s.l_acc},
                     {"r_acc", s.r_acc},
                     {"step_count", s.step_count}};
}

void from_json(const nlohmann::json& j, ShampooState& s) {
  j.at("lr").get_to(s.lr);
  j.at("epsilon").get_to(s.epsilon);
  j.at("mode").get_to(s.mode);
  j.at("beta").get_to(s.beta);
  j.at("l_acc").get_to(s.l_acc);
  j.at("r_acc").get_to(s.r_acc);
  j.at("step_count").get_to(s.step_count);
}

void to_json(nlohmann::json& j, const ProdigyState& s) {
  j = nlohmann::json{{"eta", s.eta},
                     {"beta1", s.beta1},
                     {"beta2", s.beta2},
                     {"epsilon", s.epsilon},
                     {"r", s.r},
                     {"m", s.m},
                     {"v", s.v},
                     {"s", s.s},
                     {"w0", s.w0},
                     {"step_count", s.step_count}};
}

void from_json(const nlohmann::json& j, ProdigyState& s) {
  j.at("eta").get_to(s.eta);
  j.at("beta1").get_to(s.beta1);
  j.at("beta2").get_to(s.beta2);
  j.at("epsilon").get_to(s.epsilon);
  j.at("r").get_to(s.r);
  j.at("m").get_to(s.m);
  j.at("v").get_to(s.v);
  j.at("s").get_to(s.s);
  j.at("w0").get_to(s.w0);
  j.at("step_count").get_to(s.step_count);
}

void to_json(nlohmann::json& j, const LineSearchState& s) {
  j = nlohmann::json{{"eta", s.eta},
                     {"policy", s.policy},
                     {"w0", s.w0},
                     {"prev_w", s.prev_w},
                     {"frozen", s.frozen}};
}

void from_json(const nlohmann::json& j, LineSearchState& s) {
  j.at("eta").get_to(s.eta);
  j.at("policy").get_to(s.policy);
  j.at("w0").get_to(s.w0);
  j.at("prev_w").get_to(s.prev_w);
  j.at("frozen").get_to(s.frozen);
}

}  // namespace normdescent
