#pragma once

// State-augmented graph convolutional scheduling policy.
//
// Input is the dual vector lambda as a single node feature. Each layer applies
// a polynomial graph filter
//
//     y = sum_{k=0..order} S^k x H_k
//
// followed by per-feature normalization over the node population, an affine
// (gamma, beta) map and a leaky rectifier. A linear read-out and a sigmoid give
// one transmission probability per link.
//
// Gradients are derived by hand for this fixed architecture (no autodiff).

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/matrix.hpp"
#include "sagnn/scheduling.hpp"

namespace sagnn {

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which statistics normalize the filter outputs outside of training.
/// `Batch` recomputes them over the nodes of the graph being scheduled;
/// `Running` uses the momentum averages accumulated during training.
enum class NormStats { Batch, Running };

struct ArchConfig {
    std::size_t layers = 3;
    std::size_t features = 256;
    std::size_t order = 3;  // taps k = 0..order
    double leaky_slope = 0.01;
    ShiftKind shift = ShiftKind::SymmetricNormalized;
    double norm_momentum = 0.1;
    double norm_epsilon = 1e-5;
    NormStats eval_stats = NormStats::Batch;

    void validate() const;
    std::size_t in_features(std::size_t layer) const { return layer == 0 ? 1 : features; }

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct LayerParams {
    std::vector<Matrix> taps;  // order+1 matrices of in x out
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// All learnable weights plus normalization state. Gradients use the same
/// shape; their running statistics are unused and stay zero.
struct PolicyParameters {
    ArchConfig config;
    std::vector<LayerParams> layers;
    std::vector<double> out_weight;
    double out_bias = 0.0;

    /// Zero-filled parameters of the right shape (gamma and running stats zero too).
    static PolicyParameters zeros(const ArchConfig& config);

    /// Views over the trainable entries in a fixed order: per layer taps,
    /// gamma, beta; then output weights and bias.
    std::vector<std::span<double>> trainable();
    std::vector<std::span<const double>> trainable() const;
    std::size_t trainable_count() const;

    bool all_finite() const;

    friend bool operator==(const PolicyParameters&, const PolicyParameters&) = default;
};

/// Taps ~ U(-a, a) with a = 1/sqrt(in * (order+1)); gamma = 1, beta = 0;
/// running mean 0, running variance 1; read-out ~ U(-1/sqrt(F), 1/sqrt(F)), bias 0.
PolicyParameters init_params(const ArchConfig& config, std::uint64_t seed);

enum class Phase { Train, Eval };

struct LayerCache {
    std::vector<Matrix> powers;  // S^k x_{l-1}
    Matrix normalized;           // (y - mean) * inv_std
    Matrix pre_activation;       // gamma * normalized + beta
    Matrix output;               // leaky(pre_activation)
    std::vector<double> inv_std;
    std::vector<double> batch_mean;
    std::vector<double> batch_var;  // biased
    bool used_batch_stats = false;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::vector<double> outputs;  // sigmoid read-out
};

/// Builds the shift operator selected by `config.shift`.
CsrMatrix policy_shift(const ConflictGraph& graph, const ArchConfig& config);

ForwardCache forward(const CsrMatrix& shift, std::span<const double> lambda, const PolicyParameters& params,
                     Phase phase);
ForwardCache forward(const ConflictGraph& graph, std::span<const double> lambda, const PolicyParameters& params,
                     Phase phase);

/// Folds the batch statistics of a train-phase forward pass into the running
/// averages with the configured momentum (unbiased variance).
void update_running_stats(PolicyParameters& params, const ForwardCache& cache);

struct LagrangianEval {
    double value = 0.0;
    PolicyParameters grad;
    ForwardCache cache;
};

/// Value of  Phi^T[1-A Phi]_+ + lambda^T(Phi (.) [1-A Phi]_+ - delta)  at the
/// train-phase output, and its exact gradient with respect to the trainable
/// parameters (ramp subgradient 0 at the kink).
LagrangianEval lagrangian_value_and_grad(const ConflictGraph& graph, const CsrMatrix& shift,
                                         std::span<const double> lambda, const Requirements& req,
                                         const PolicyParameters& params);
LagrangianEval lagrangian_value_and_grad(const ConflictGraph& graph, std::span<const double> lambda,
                                         const Requirements& req, const PolicyParameters& params);

/// Same value without gradients; used by finite-difference checks.
double lagrangian_value(const ConflictGraph& graph, const CsrMatrix& shift, std::span<const double> lambda,
                        const Requirements& req, const PolicyParameters& params);

/// 1 where output >= 0.5.
Schedule threshold(std::span<const double> outputs);

struct AdamState {
    PolicyParameters first_moment;
    PolicyParameters second_moment;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_params(const PolicyParameters& params);
};

enum class Direction { Ascent, Descent };

/// Bias-corrected Adam update in place.
void adam_step(PolicyParameters& params, const PolicyParameters& grads, AdamState& state, double lr,
               Direction direction);

// Binary parameter file:
//   "SAGNNPAR" | u32 version | u32 n | n bytes of ArchConfig JSON |
//   per layer: taps[k][in][out], gamma, beta, running_mean, running_var |
//   out_weight[F] | out_bias     (little-endian IEEE-754 doubles)
void save_params(const std::filesystem::path& path, const PolicyParameters& params);
PolicyParameters load_params(const std::filesystem::path& path);
/// Rejects files whose stored architecture differs from `expected`, naming the
/// field; eval_stats is taken from `expected`.
PolicyParameters load_params(const std::filesystem::path& path, const ArchConfig& expected);

std::string to_string(ShiftKind kind);
std::string to_string(NormStats stats);
ShiftKind parse_shift_kind(const std::string& s);
NormStats parse_norm_stats(const std::string& s);

}  // namespace sagnn
