#include <cmath>
#include <string>

#include "clreg/error.hpp"
#include "clreg/simulator.hpp"

namespace clreg {

void ToyEncoder::validate() const {
  if (layers.empty()) {
    throw ValidationError("encoder needs at least one layer");
  }
  Eigen::Index prev = layers.front().weight.cols();
  if (prev < 1) throw ValidationError("encoder input dimension must be >= 1");
  auto check = [&](const Layer& l, const std::string& name) {
    if (l.weight.cols() != prev || l.bias.size() != l.weight.rows() || l.weight.rows() < 1) {
      throw ValidationError("encoder " + name + " dimensions do not chain");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw ValidationError("encoder " + name + " has non-finite parameters");
    }
    prev = l.weight.rows();
  };
  for (std::size_t i = 0; i < layers.size(); ++i) check(layers[i], "layer " + std::to_string(i));
  check(head, "head");
}

ToyEncoder ToyEncoder::zeros(int input_dim, std::span<const int> hidden_dims, int n_classes) {
  if (input_dim < 1 || hidden_dims.empty() || n_classes < 1) {
    throw ValidationError("encoder needs input_dim >= 1, >= 1 layer and >= 1 class");
  }
  ToyEncoder enc;
  int prev = input_dim;
  for (int d : hidden_dims) {
    if (d < 1) throw ValidationError("hidden dimensions must be >= 1");
    enc.layers.push_back({Eigen::MatrixXd::Zero(d, prev), Eigen::VectorXd::Zero(d)});
    prev = d;
  }
  enc.head = {Eigen::MatrixXd::Zero(n_classes, prev), Eigen::VectorXd::Zero(n_classes)};
  return enc;
}

ToyEncoder ToyEncoder::random(int input_dim, std::span<const int> hidden_dims, int n_classes,
                              Rng& rng) {
  ToyEncoder enc = zeros(input_dim, hidden_dims, n_classes);
  auto fill = [&rng](Layer& l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    // Column-major fill order keeps the draw sequence tied to flatten().
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
        l.weight(r, c) = scale * rng.normal();
      }
    }
  };
  for (auto& l : enc.layers) fill(l);
  fill(enc.head);
  return enc;
}

std::size_t ToyEncoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n + static_cast<std::size_t>(head.weight.size() + head.bias.size());
}

Eigen::VectorXd ToyEncoder::flatten() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  auto put = [&](const Layer& l) {
    out.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  };
  for (const auto& l : layers) put(l);
  put(head);
  return out;
}

void ToyEncoder::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw ValidationError("parameter vector has wrong length");
  }
  Eigen::Index at = 0;
  auto take = [&](Layer& l) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  };
  for (auto& l : layers) take(l);
  take(head);
}

ForwardPass forward(const ToyEncoder& enc, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  enc.validate();
  if (inputs.cols() != enc.input_dim()) {
    throw ValidationError("input dimension " + std::to_string(inputs.cols()) +
                          " does not match encoder input " + std::to_string(enc.input_dim()));
  }
  ForwardPass out;
  out.hidden.reserve(enc.layers.size());
  Eigen::MatrixXd h = inputs;
  for (const auto& l : enc.layers) {
    Eigen::MatrixXd pre = h * l.weight.transpose();
    pre.rowwise() += l.bias.transpose();
    h = pre.array().tanh().matrix();
    out.hidden.push_back(h);
  }
  out.logits = h * enc.head.weight.transpose();
  out.logits.rowwise() += enc.head.bias.transpose();
  return out;
}

}  // namespace clreg
