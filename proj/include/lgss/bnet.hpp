#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lgss/manifest.hpp"
#include "lgss/tensor_layout.hpp"

namespace lgss {

enum class Activation { kRelu, kIdentity, kTanh };

// How the difference branch combines the before/after embeddings. Elementwise
// keeps an e_m-dim similarity profile; scalar collapses it to one dot product.
enum class DiffMode { kElementwise, kScalarDot };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);
DiffMode diff_mode_from_name(const std::string& name);
std::string diff_mode_name(DiffMode d);

struct BNetConfig {
  int w_b = 4;       // half-window in shots; the clip spans 2*w_b shots
  int embed_dim = 16;  // e_m, per modality
  Activation activation = Activation::kRelu;
  DiffMode diff_mode = DiffMode::kElementwise;
};

// Per modality: conv_before / conv_after map the flattened half-window
// (w_b * d_m) to embed_dim; conv_rel is the same-shaped kernel slid over the
// full 2*w_b window with stride 1 and max-pooled over its w_b + 1 positions.
struct BNetParams {
  BNetConfig config;
  std::vector<std::pair<std::string, int>> modalities;
  TensorLayout layout;
  Eigen::VectorXd values;

  int diff_dim() const { return config.diff_mode == DiffMode::kElementwise ? config.embed_dim : 1; }
  int rel_positions() const { return config.w_b + 1; }
  // dim of b_i: one diff block and one rel block per modality
  int boundary_dim() const {
    return static_cast<int>(modalities.size()) * (diff_dim() + config.embed_dim);
  }

  Eigen::Map<const Eigen::MatrixXd> tensor(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> tensor(const std::string& name);
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero;
// deterministic in seed.
BNetParams init_bnet_params(const std::vector<std::pair<std::string, int>>& modality_dims,
                            int embed_dim, int w_b, std::uint64_t seed,
                            Activation activation = Activation::kRelu,
                            DiffMode diff_mode = DiffMode::kElementwise);

// One matrix per modality, 2*w_b rows (shots), d_m columns. Clips near the
// movie edge are padded by repeating the first/last shot.
struct BoundaryClip {
  std::vector<Eigen::MatrixXd> modality;
};

BoundaryClip extract_clip(const Manifest& m, int boundary_index, int w_b);

// Forward intermediates kept for backprop.
struct BNetModalityCache {
  Eigen::VectorXd x_before, x_after;   // flattened half-windows
  Eigen::VectorXd u_pre, v_pre, u, v;  // difference-branch embeddings
  Eigen::MatrixXd z_pre, z;            // rel conv responses, embed_dim x positions
  std::vector<int> argmax;             // winning position per rel dim
};

struct BNetCache {
  std::vector<BNetModalityCache> modality;
};

// Boundary representation b_i = concat over modalities of [diff || rel].
Eigen::VectorXd bnet_forward(const BoundaryClip& clip, const BNetParams& params,
                             BNetCache* cache = nullptr);

Eigen::VectorXd bnet_forward(const Manifest& m, int boundary_index, const BNetParams& params,
                             BNetCache* cache = nullptr);

// All n-1 boundary representations of a movie, one per row.
Eigen::MatrixXd boundary_representations(const Manifest& m, const BNetParams& params);

// Accumulates d(loss)/d(params) into grad (same size as params.values) given
// d(loss)/d(b_i).
void bnet_backward(const BoundaryClip& clip, const BNetParams& params, const BNetCache& cache,
                   const Eigen::VectorXd& d_output, Eigen::VectorXd& grad);

}  // namespace lgss
