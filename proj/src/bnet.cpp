#include "lgss/bnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lgss {

namespace {

double apply_act(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kIdentity:
      return x;
    case Activation::kTanh:
      return std::tanh(x);
  }
  return x;
}

// derivative expressed from the pre-activation value
double act_grad(Activation a, double pre) {
  switch (a) {
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      return 1.0;
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Eigen::VectorXd activate(Activation a, const Eigen::VectorXd& pre) {
  return pre.unaryExpr([a](double x) { return apply_act(a, x); });
}

}  // namespace

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation: " + name);
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
  }
  return "relu";
}

DiffMode diff_mode_from_name(const std::string& name) {
  if (name == "elementwise") return DiffMode::kElementwise;
  if (name == "scalar") return DiffMode::kScalarDot;
  throw ValidationError("unknown diff mode: " + name);
}

std::string diff_mode_name(DiffMode d) {
  return d == DiffMode::kElementwise ? "elementwise" : "scalar";
}

Eigen::Map<const Eigen::MatrixXd> BNetParams::tensor(const std::string& name) const {
  const int idx = layout.find(name);
  if (idx < 0) throw ValidationError("bnet tensor not found: " + name);
  return tensor_view(values, layout.spec(idx));
}

Eigen::Map<Eigen::MatrixXd> BNetParams::tensor(const std::string& name) {
  const int idx = layout.find(name);
  if (idx < 0) throw ValidationError("bnet tensor not found: " + name);
  return tensor_view(values, layout.spec(idx));
}

BNetParams init_bnet_params(const std::vector<std::pair<std::string, int>>& modality_dims,
                            int embed_dim, int w_b, std::uint64_t seed, Activation activation,
                            DiffMode diff_mode) {
  if (embed_dim < 1 || w_b < 1) throw ValidationError("bnet: embed_dim and w_b must be >= 1");
  if (modality_dims.empty()) throw ValidationError("bnet: no modalities");
  for (const auto& [name, dim] : modality_dims) {
    if (dim < 1) throw ValidationError("bnet: non-positive dim for " + name);
  }

  BNetParams p;
  p.config = {w_b, embed_dim, activation, diff_mode};
  p.modalities = modality_dims;
  for (const auto& [name, dim] : modality_dims) {
    const int fan_in = w_b * dim;
    (void)fan_in;
    p.layout.add(name + ".before.w", embed_dim, w_b * dim);
    p.layout.add(name + ".before.b", embed_dim, 1);
    p.layout.add(name + ".after.w", embed_dim, w_b * dim);
    p.layout.add(name + ".after.b", embed_dim, 1);
    p.layout.add(name + ".rel.w", embed_dim, w_b * dim);
    p.layout.add(name + ".rel.b", embed_dim, 1);
  }
  p.values = Eigen::VectorXd::Zero(p.layout.total());

  std::mt19937_64 rng(seed);
  for (const TensorSpec& s : p.layout.specs()) {
    auto view = tensor_view(p.values, s);
    if (s.name.ends_with(".b")) continue;  // biases stay zero
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.cols));
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (int c = 0; c < s.cols; ++c) {
      for (int r = 0; r < s.rows; ++r) view(r, c) = dist(rng);
    }
  }
  return p;
}

BoundaryClip extract_clip(const Manifest& m, int boundary_index, int w_b) {
  const int n = m.shot_count();
  if (boundary_index < 1 || boundary_index > n - 1) {
    throw ValidationError("boundary index out of range: " + std::to_string(boundary_index));
  }
  BoundaryClip clip;
  clip.modality.reserve(m.modalities.size());
  for (size_t mi = 0; mi < m.modalities.size(); ++mi) {
    const int dim = m.modalities[mi].second;
    Eigen::MatrixXd rows(2 * w_b, dim);
    for (int k = 0; k < 2 * w_b; ++k) {
      // before half covers shots [i-w_b, i-1], after half [i, i+w_b-1]
      // (0-based); edge positions replicate the first/last shot.
      const int shot = std::clamp(boundary_index - w_b + k, 0, n - 1);
      const auto& feat = m.shots[static_cast<size_t>(shot)].features[mi];
      for (int d = 0; d < dim; ++d) rows(k, d) = static_cast<double>(feat[static_cast<size_t>(d)]);
    }
    clip.modality.push_back(std::move(rows));
  }
  return clip;
}

Eigen::VectorXd bnet_forward(const BoundaryClip& clip, const BNetParams& params,
                             BNetCache* cache) {
  const int w_b = params.config.w_b;
  const int e = params.config.embed_dim;
  const Activation act = params.config.activation;
  if (clip.modality.size() != params.modalities.size()) {
    throw ValidationError("bnet: clip modality count does not match params");
  }

  Eigen::VectorXd out(params.boundary_dim());
  if (cache) cache->modality.assign(params.modalities.size(), {});
  int offset = 0;

  for (size_t mi = 0; mi < params.modalities.size(); ++mi) {
    const auto& [name, dim] = params.modalities[mi];
    const Eigen::MatrixXd& rows = clip.modality[mi];
    if (rows.rows() != 2 * w_b || rows.cols() != dim) {
      throw ValidationError("bnet: clip for " + name + " has wrong shape");
    }

    const auto flatten = [&](int first_row) {
      Eigen::VectorXd x(w_b * dim);
      for (int k = 0; k < w_b; ++k) x.segment(k * dim, dim) = rows.row(first_row + k).transpose();
      return x;
    };

    const Eigen::VectorXd x_before = flatten(0);
    const Eigen::VectorXd x_after = flatten(w_b);

    const Eigen::VectorXd u_pre =
        params.tensor(name + ".before.w") * x_before + params.tensor(name + ".before.b").col(0);
    const Eigen::VectorXd v_pre =
        params.tensor(name + ".after.w") * x_after + params.tensor(name + ".after.b").col(0);
    const Eigen::VectorXd u = activate(act, u_pre);
    const Eigen::VectorXd v = activate(act, v_pre);

    // relation branch: kernel spans w_b shots, slid over the 2*w_b window
    const int positions = params.rel_positions();
    Eigen::MatrixXd z_pre(e, positions);
    const auto rel_w = params.tensor(name + ".rel.w");
    const auto rel_b = params.tensor(name + ".rel.b");
    for (int t = 0; t < positions; ++t) {
      z_pre.col(t) = rel_w * flatten(t) + rel_b.col(0);
    }
    Eigen::MatrixXd z(e, positions);
    for (int r = 0; r < e; ++r) {
      for (int t = 0; t < positions; ++t) z(r, t) = apply_act(act, z_pre(r, t));
    }
    std::vector<int> argmax(static_cast<size_t>(e), 0);
    Eigen::VectorXd rel(e);
    for (int r = 0; r < e; ++r) {
      int best = 0;
      for (int t = 1; t < positions; ++t) {
        if (z(r, t) > z(r, best)) best = t;
      }
      argmax[static_cast<size_t>(r)] = best;
      rel(r) = z(r, best);
    }

    if (params.config.diff_mode == DiffMode::kElementwise) {
      out.segment(offset, e) = u.cwiseProduct(v);
      offset += e;
    } else {
      out(offset) = u.dot(v);
      offset += 1;
    }
    out.segment(offset, e) = rel;
    offset += e;

    if (cache) {
      BNetModalityCache& mc = cache->modality[mi];
      mc.x_before = x_before;
      mc.x_after = x_after;
      mc.u_pre = u_pre;
      mc.v_pre = v_pre;
      mc.u = u;
      mc.v = v;
      mc.z_pre = z_pre;
      mc.z = z;
      mc.argmax = std::move(argmax);
    }
  }
  return out;
}

Eigen::VectorXd bnet_forward(const Manifest& m, int boundary_index, const BNetParams& params,
                             BNetCache* cache) {
  for (size_t mi = 0; mi < params.modalities.size(); ++mi) {
    const int idx = m.modality_index(params.modalities[mi].first);
    if (idx < 0 || m.modality_dim(idx) != params.modalities[mi].second) {
      throw ValidationError("bnet: manifest modalities do not match params");
    }
  }
  // Clip follows the manifest's modality order only when it matches params;
  // extract per params order.
  const int n = m.shot_count();
  const int w_b = params.config.w_b;
  BoundaryClip clip;
  clip.modality.reserve(params.modalities.size());
  for (const auto& [name, dim] : params.modalities) {
    const int mi = m.modality_index(name);
    Eigen::MatrixXd rows(2 * w_b, dim);
    for (int k = 0; k < 2 * w_b; ++k) {
      const int shot = std::clamp(boundary_index - w_b + k, 0, n - 1);
      const auto& feat = m.shots[static_cast<size_t>(shot)].features[static_cast<size_t>(mi)];
      for (int d = 0; d < dim; ++d) rows(k, d) = static_cast<double>(feat[static_cast<size_t>(d)]);
    }
    clip.modality.push_back(std::move(rows));
  }
  return bnet_forward(clip, params, cache);
}

Eigen::MatrixXd boundary_representations(const Manifest& m, const BNetParams& params) {
  const int count = m.boundary_count();
  Eigen::MatrixXd reps(count, params.boundary_dim());
  for (int i = 1; i <= count; ++i) {
    reps.row(i - 1) = bnet_forward(m, i, params).transpose();
  }
  return reps;
}

void bnet_backward(const BoundaryClip& clip, const BNetParams& params, const BNetCache& cache,
                   const Eigen::VectorXd& d_output, Eigen::VectorXd& grad) {
  const int w_b = params.config.w_b;
  const int e = params.config.embed_dim;
  const Activation act = params.config.activation;
  if (grad.size() != params.values.size()) grad = Eigen::VectorXd::Zero(params.values.size());

  int offset = 0;
  for (size_t mi = 0; mi < params.modalities.size(); ++mi) {
    const auto& name = params.modalities[mi].first;
    const int dim = params.modalities[mi].second;
    const BNetModalityCache& mc = cache.modality[mi];

    Eigen::VectorXd du(e), dv(e);
    if (params.config.diff_mode == DiffMode::kElementwise) {
      const auto d_diff = d_output.segment(offset, e);
      du = d_diff.cwiseProduct(mc.v);
      dv = d_diff.cwiseProduct(mc.u);
      offset += e;
    } else {
      const double d_diff = d_output(offset);
      du = d_diff * mc.v;
      dv = d_diff * mc.u;
      offset += 1;
    }
    const auto d_rel = d_output.segment(offset, e);
    offset += e;

    const auto grad_view = [&](const std::string& tname) {
      const int idx = params.layout.find(tname);
      return tensor_view(grad, params.layout.spec(idx));
    };

    Eigen::VectorXd du_pre(e), dv_pre(e);
    for (int r = 0; r < e; ++r) {
      du_pre(r) = du(r) * act_grad(act, mc.u_pre(r));
      dv_pre(r) = dv(r) * act_grad(act, mc.v_pre(r));
    }
    grad_view(name + ".before.w") += du_pre * mc.x_before.transpose();
    grad_view(name + ".before.b").col(0) += du_pre;
    grad_view(name + ".after.w") += dv_pre * mc.x_after.transpose();
    grad_view(name + ".after.b").col(0) += dv_pre;

    // relation branch: gradient flows only to the argmax position per dim
    auto rel_w_grad = grad_view(name + ".rel.w");
    auto rel_b_grad = grad_view(name + ".rel.b");
    const Eigen::MatrixXd& rows = clip.modality[mi];
    for (int r = 0; r < e; ++r) {
      const int t = mc.argmax[static_cast<size_t>(r)];
      const double dz_pre = d_rel(r) * act_grad(act, mc.z_pre(r, t));
      if (dz_pre == 0.0) continue;
      for (int k = 0; k < w_b; ++k) {
        rel_w_grad.row(r).segment(k * dim, dim) += dz_pre * rows.row(t + k);
      }
      rel_b_grad(r, 0) += dz_pre;
    }
  }
}

}  // namespace lgss
