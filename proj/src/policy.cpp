#include "sagnn/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "sagnn/kernels.hpp"
#include "sagnn/random.hpp"

namespace sagnn {
namespace {

static_assert(std::endian::native == std::endian::little, "parameter files assume a little-endian host");

constexpr char kMagic[8] = {'S', 'A', 'G', 'N', 'N', 'P', 'A', 'R'};
constexpr std::uint32_t kFormatVersion = 1;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_lambda(std::span<const double> lambda, std::size_t n) {
    if (lambda.size() != n)
        throw PolicyError("lambda length " + std::to_string(lambda.size()) + " != K " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(lambda[i])) throw PolicyError("lambda[" + std::to_string(i) + "] is not finite");
        if (lambda[i] < 0.0) throw PolicyError("lambda[" + std::to_string(i) + "] is negative");
    }
}

nlohmann::json config_json(const ArchConfig& c) {
    return {{"layers", c.layers},
            {"features", c.features},
            {"order", c.order},
            {"leaky_slope", c.leaky_slope},
            {"shift", to_string(c.shift)},
            {"norm_momentum", c.norm_momentum},
            {"norm_epsilon", c.norm_epsilon},
            {"eval_stats", to_string(c.eval_stats)}};
}

ArchConfig config_from_json(const nlohmann::json& j) {
    ArchConfig c;
    c.layers = j.at("layers").get<std::size_t>();
    c.features = j.at("features").get<std::size_t>();
    c.order = j.at("order").get<std::size_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.shift = parse_shift_kind(j.at("shift").get<std::string>());
    c.norm_momentum = j.at("norm_momentum").get<double>();
    c.norm_epsilon = j.at("norm_epsilon").get<double>();
    c.eval_stats = parse_norm_stats(j.at("eval_stats").get<std::string>());
    return c;
}

// Output gradient of the augmented Lagrangian with respect to Phi.
std::vector<double> lagrangian_output_grad(const ConflictGraph& graph, std::span<const double> phi,
                                           std::span<const double> lambda) {
    const std::size_t n = phi.size();
    std::vector<double> slack(n);
    for (std::size_t i = 0; i < n; ++i) {
        double load = 0.0;
        for (std::size_t j : graph.neighbors(i)) load += phi[j];
        slack[i] = 1.0 - load;
    }
    std::vector<double> grad(n);
    for (std::size_t j = 0; j < n; ++j) {
        double g = (1.0 + lambda[j]) * std::max(0.0, slack[j]);
        for (std::size_t i : graph.neighbors(j))
            if (slack[i] > 0.0) g -= (1.0 + lambda[i]) * phi[i];
        grad[j] = g;
    }
    return grad;
}

double lagrangian_at(const ConflictGraph& graph, std::span<const double> phi, std::span<const double> lambda,
                     const Requirements& req) {
    if (req.size() != phi.size()) throw PolicyError("requirements length differs from K");
    const auto succ = successful_transmissions(graph, phi);
    double value = 0.0;
    for (std::size_t i = 0; i < succ.size(); ++i) value += succ[i] + lambda[i] * (succ[i] - req.delta[i]);
    return value;
}

}  // namespace

void ArchConfig::validate() const {
    if (layers < 1) throw PolicyError("arch: layers must be >= 1");
    if (features < 1) throw PolicyError("arch: features must be >= 1");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw PolicyError("arch: leaky_slope must be in (0,1)");
    if (!(norm_momentum >= 0.0 && norm_momentum <= 1.0)) throw PolicyError("arch: norm_momentum must be in [0,1]");
    if (!(norm_epsilon > 0.0)) throw PolicyError("arch: norm_epsilon must be positive");
}

PolicyParameters PolicyParameters::zeros(const ArchConfig& config) {
    config.validate();
    PolicyParameters p;
    p.config = config;
    p.layers.resize(config.layers);
    for (std::size_t l = 0; l < config.layers; ++l) {
        auto& layer = p.layers[l];
        layer.taps.assign(config.order + 1, Matrix(config.in_features(l), config.features));
        layer.gamma.assign(config.features, 0.0);
        layer.beta.assign(config.features, 0.0);
        layer.running_mean.assign(config.features, 0.0);
        layer.running_var.assign(config.features, 0.0);
    }
    p.out_weight.assign(config.features, 0.0);
    return p;
}

std::vector<std::span<double>> PolicyParameters::trainable() {
    std::vector<std::span<double>> out;
    for (auto& layer : layers) {
        for (auto& tap : layer.taps) out.push_back(tap.flat());
        out.emplace_back(layer.gamma);
        out.emplace_back(layer.beta);
    }
    out.emplace_back(out_weight);
    out.emplace_back(&out_bias, 1);
    return out;
}

std::vector<std::span<const double>> PolicyParameters::trainable() const {
    std::vector<std::span<const double>> out;
    for (const auto& layer : layers) {
        for (const auto& tap : layer.taps) out.push_back(tap.flat());
        out.emplace_back(layer.gamma);
        out.emplace_back(layer.beta);
    }
    out.emplace_back(out_weight);
    out.emplace_back(&out_bias, 1);
    return out;
}

std::size_t PolicyParameters::trainable_count() const {
    std::size_t n = 0;
    for (auto s : trainable()) n += s.size();
    return n;
}

bool PolicyParameters::all_finite() const {
    for (auto s : trainable())
        if (!finite(s)) return false;
    for (const auto& layer : layers)
        if (!finite(layer.running_mean) || !finite(layer.running_var)) return false;
    return true;
}

PolicyParameters init_params(const ArchConfig& config, std::uint64_t seed) {
    PolicyParameters p = PolicyParameters::zeros(config);
    Rng rng = make_rng(seed, 7);
    for (std::size_t l = 0; l < config.layers; ++l) {
        auto& layer = p.layers[l];
        const double bound =
            1.0 / std::sqrt(static_cast<double>(config.in_features(l) * (config.order + 1)));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& tap : layer.taps)
            for (double& w : tap.flat()) w = dist(rng);
        std::fill(layer.gamma.begin(), layer.gamma.end(), 1.0);
        std::fill(layer.running_var.begin(), layer.running_var.end(), 1.0);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.features));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : p.out_weight) w = dist(rng);
    return p;
}

CsrMatrix policy_shift(const ConflictGraph& graph, const ArchConfig& config) {
    return shift_operator(graph, config.shift);
}

ForwardCache forward(const CsrMatrix& shift, std::span<const double> lambda, const PolicyParameters& params,
                     Phase phase) {
    const ArchConfig& cfg = params.config;
    const std::size_t n = shift.n;
    const std::size_t f = cfg.features;
    check_lambda(lambda, n);
    if (!params.all_finite()) throw PolicyError("policy parameters contain non-finite values");
    if (params.layers.size() != cfg.layers) throw PolicyError("layer count differs from config");

    // One node means no spread to normalize with; fall back to running stats.
    const bool batch_stats = n >= 2 && (phase == Phase::Train || cfg.eval_stats == NormStats::Batch);

    ForwardCache cache;
    cache.layers.resize(cfg.layers);

    Matrix input(n, 1);
    for (std::size_t i = 0; i < n; ++i) input(i, 0) = lambda[i];

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const LayerParams& layer = params.layers[l];
        LayerCache& lc = cache.layers[l];
        const std::size_t in_f = cfg.in_features(l);
        if (input.cols() != in_f) throw PolicyError("feature width mismatch at layer " + std::to_string(l));

        lc.powers.resize(cfg.order + 1);
        lc.powers[0] = std::move(input);
        for (std::size_t k = 1; k <= cfg.order; ++k) {
            lc.powers[k] = Matrix(n, in_f);
            kernels::spmm(shift, lc.powers[k - 1], lc.powers[k]);
        }
        Matrix y(n, f);
        for (std::size_t k = 0; k <= cfg.order; ++k) kernels::gemm_nn(lc.powers[k], layer.taps[k], y);

        lc.used_batch_stats = batch_stats;
        lc.inv_std.assign(f, 0.0);
        std::vector<double> mean(f, 0.0);
        if (batch_stats) {
            lc.batch_mean.assign(f, 0.0);
            lc.batch_var.assign(f, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = y.row(i);
                for (std::size_t c = 0; c < f; ++c) lc.batch_mean[c] += row[c];
            }
            for (double& m : lc.batch_mean) m /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = y.row(i);
                for (std::size_t c = 0; c < f; ++c) {
                    const double d = row[c] - lc.batch_mean[c];
                    lc.batch_var[c] += d * d;
                }
            }
            for (double& v : lc.batch_var) v /= static_cast<double>(n);
            mean = lc.batch_mean;
            for (std::size_t c = 0; c < f; ++c) lc.inv_std[c] = 1.0 / std::sqrt(lc.batch_var[c] + cfg.norm_epsilon);
        } else {
            mean = layer.running_mean;
            for (std::size_t c = 0; c < f; ++c)
                lc.inv_std[c] = 1.0 / std::sqrt(layer.running_var[c] + cfg.norm_epsilon);
        }

        lc.normalized = Matrix(n, f);
        lc.pre_activation = Matrix(n, f);
        lc.output = Matrix(n, f);
        for (std::size_t i = 0; i < n; ++i) {
            const auto yr = y.row(i);
            auto nr = lc.normalized.row(i);
            auto pr = lc.pre_activation.row(i);
            auto orow = lc.output.row(i);
            for (std::size_t c = 0; c < f; ++c) {
                nr[c] = (yr[c] - mean[c]) * lc.inv_std[c];
                pr[c] = layer.gamma[c] * nr[c] + layer.beta[c];
                orow[c] = pr[c] > 0.0 ? pr[c] : cfg.leaky_slope * pr[c];
            }
        }
        input = lc.output;
    }

    cache.outputs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = input.row(i);
        double z = params.out_bias;
        for (std::size_t c = 0; c < f; ++c) z += row[c] * params.out_weight[c];
        cache.outputs[i] = sigmoid(z);
    }
    return cache;
}

ForwardCache forward(const ConflictGraph& graph, std::span<const double> lambda, const PolicyParameters& params,
                     Phase phase) {
    return forward(policy_shift(graph, params.config), lambda, params, phase);
}

void update_running_stats(PolicyParameters& params, const ForwardCache& cache) {
    const double m = params.config.norm_momentum;
    for (std::size_t l = 0; l < cache.layers.size(); ++l) {
        const LayerCache& lc = cache.layers[l];
        if (!lc.used_batch_stats) continue;
        const double n = static_cast<double>(lc.powers[0].rows());
        LayerParams& layer = params.layers[l];
        for (std::size_t c = 0; c < layer.running_mean.size(); ++c) {
            layer.running_mean[c] = (1.0 - m) * layer.running_mean[c] + m * lc.batch_mean[c];
            layer.running_var[c] = (1.0 - m) * layer.running_var[c] + m * lc.batch_var[c] * n / (n - 1.0);
        }
    }
}

LagrangianEval lagrangian_value_and_grad(const ConflictGraph& graph, const CsrMatrix& shift,
                                         std::span<const double> lambda, const Requirements& req,
                                         const PolicyParameters& params) {
    const ArchConfig& cfg = params.config;
    const std::size_t n = graph.n_links();
    const std::size_t f = cfg.features;
    if (shift.n != n) throw PolicyError("shift operator size differs from graph");

    LagrangianEval result;
    result.cache = forward(shift, lambda, params, Phase::Train);
    const auto& phi = result.cache.outputs;
    result.value = lagrangian_at(graph, phi, lambda, req);
    result.grad = PolicyParameters::zeros(cfg);
    PolicyParameters& grad = result.grad;

    // Read-out: z = x_L w + b, phi = sigmoid(z).
    const auto dphi = lagrangian_output_grad(graph, phi, lambda);
    std::vector<double> dz(n);
    for (std::size_t i = 0; i < n; ++i) dz[i] = dphi[i] * phi[i] * (1.0 - phi[i]);

    const Matrix& last = result.cache.layers.back().output;
    Matrix dx(n, f);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xr = last.row(i);
        auto dr = dx.row(i);
        grad.out_bias += dz[i];
        for (std::size_t c = 0; c < f; ++c) {
            grad.out_weight[c] += xr[c] * dz[i];
            dr[c] = dz[i] * params.out_weight[c];
        }
    }

    for (std::size_t l = cfg.layers; l-- > 0;) {
        const LayerCache& lc = result.cache.layers[l];
        const LayerParams& layer = params.layers[l];
        LayerParams& g = grad.layers[l];

        // Through the leaky rectifier and the affine map.
        Matrix dn(n, f);
        for (std::size_t i = 0; i < n; ++i) {
            const auto pr = lc.pre_activation.row(i);
            const auto nr = lc.normalized.row(i);
            const auto dr = dx.row(i);
            auto dnr = dn.row(i);
            for (std::size_t c = 0; c < f; ++c) {
                const double dpre = pr[c] > 0.0 ? dr[c] : cfg.leaky_slope * dr[c];
                g.gamma[c] += dpre * nr[c];
                g.beta[c] += dpre;
                dnr[c] = dpre * layer.gamma[c];
            }
        }

        // Through the normalization.
        Matrix dy(n, f);
        if (lc.used_batch_stats) {
            std::vector<double> mean_dn(f, 0.0), mean_dn_n(f, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto dnr = dn.row(i);
                const auto nr = lc.normalized.row(i);
                for (std::size_t c = 0; c < f; ++c) {
                    mean_dn[c] += dnr[c];
                    mean_dn_n[c] += dnr[c] * nr[c];
                }
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t c = 0; c < f; ++c) {
                mean_dn[c] *= inv_n;
                mean_dn_n[c] *= inv_n;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto dnr = dn.row(i);
                const auto nr = lc.normalized.row(i);
                auto dyr = dy.row(i);
                for (std::size_t c = 0; c < f; ++c)
                    dyr[c] = lc.inv_std[c] * (dnr[c] - mean_dn[c] - nr[c] * mean_dn_n[c]);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const auto dnr = dn.row(i);
                auto dyr = dy.row(i);
                for (std::size_t c = 0; c < f; ++c) dyr[c] = dnr[c] * lc.inv_std[c];
            }
        }

        // Through the filter: dH_k = (S^k x)^T dy, dx = sum_k S^k (dy H_k^T).
        for (std::size_t k = 0; k <= cfg.order; ++k) kernels::gemm_tn(lc.powers[k], dy, g.taps[k]);
        if (l == 0) break;

        const std::size_t in_f = cfg.in_features(l);
        Matrix acc(n, in_f);
        kernels::gemm_nt(dy, layer.taps[cfg.order], acc);
        Matrix tmp(n, in_f);
        for (std::size_t k = cfg.order; k-- > 0;) {
            kernels::spmm(shift, acc, tmp);
            std::swap(acc, tmp);
            kernels::gemm_nt(dy, layer.taps[k], acc);
        }
        dx = std::move(acc);
    }
    return result;
}

LagrangianEval lagrangian_value_and_grad(const ConflictGraph& graph, std::span<const double> lambda,
                                         const Requirements& req, const PolicyParameters& params) {
    return lagrangian_value_and_grad(graph, policy_shift(graph, params.config), lambda, req, params);
}

double lagrangian_value(const ConflictGraph& graph, const CsrMatrix& shift, std::span<const double> lambda,
                        const Requirements& req, const PolicyParameters& params) {
    const auto cache = forward(shift, lambda, params, Phase::Train);
    return lagrangian_at(graph, cache.outputs, lambda, req);
}

Schedule threshold(std::span<const double> outputs) {
    std::vector<double> s(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) s[i] = outputs[i] >= 0.5 ? 1.0 : 0.0;
    return {std::move(s), ScheduleMode::Binary};
}

AdamState AdamState::for_params(const PolicyParameters& params) {
    AdamState s;
    s.first_moment = PolicyParameters::zeros(params.config);
    s.second_moment = PolicyParameters::zeros(params.config);
    return s;
}

void adam_step(PolicyParameters& params, const PolicyParameters& grads, AdamState& state, double lr,
               Direction direction) {
    if (!(params.config == grads.config) || !(params.config == state.first_moment.config))
        throw PolicyError("adam_step: shape mismatch");
    auto p = params.trainable();
    const auto g = grads.trainable();
    auto m = state.first_moment.trainable();
    auto v = state.second_moment.trainable();
    for (auto s : g)
        if (!finite(s)) throw PolicyError("adam_step: non-finite gradient");

    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    const double sign = direction == Direction::Ascent ? 1.0 : -1.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        for (std::size_t i = 0; i < p[b].size(); ++i) {
            const double gi = g[b][i];
            m[b][i] = state.beta1 * m[b][i] + (1.0 - state.beta1) * gi;
            v[b][i] = state.beta2 * v[b][i] + (1.0 - state.beta2) * gi * gi;
            const double m_hat = m[b][i] / bc1;
            const double v_hat = v[b][i] / bc2;
            p[b][i] += sign * lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void save_params(const std::filesystem::path& path, const PolicyParameters& params) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PolicyError(path.string() + ": cannot write");
    const std::string cfg = config_json(params.config).dump();
    const auto cfg_len = static_cast<std::uint32_t>(cfg.size());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kFormatVersion), sizeof(kFormatVersion));
    out.write(reinterpret_cast<const char*>(&cfg_len), sizeof(cfg_len));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    auto put = [&](std::span<const double> v) {
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    for (const auto& layer : params.layers) {
        for (const auto& tap : layer.taps) put(tap.flat());
        put(layer.gamma);
        put(layer.beta);
        put(layer.running_mean);
        put(layer.running_var);
    }
    put(params.out_weight);
    put({&params.out_bias, 1});
    if (!out) throw PolicyError(path.string() + ": write failed");
}

PolicyParameters load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PolicyError(path.string() + ": cannot open");
    char magic[sizeof(kMagic)];
    std::uint32_t version = 0, cfg_len = 0;
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw PolicyError(path.string() + ": not a parameter file");
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kFormatVersion)
        throw PolicyError(path.string() + ": unsupported format version " + std::to_string(version));
    in.read(reinterpret_cast<char*>(&cfg_len), sizeof(cfg_len));
    std::string cfg(cfg_len, '\0');
    in.read(cfg.data(), cfg_len);
    if (!in) throw PolicyError(path.string() + ": truncated header");

    ArchConfig config;
    try {
        config = config_from_json(nlohmann::json::parse(cfg));
    } catch (const std::exception& e) {
        throw PolicyError(path.string() + ": bad architecture header: " + e.what());
    }
    PolicyParameters params = PolicyParameters::zeros(config);
    auto get = [&](std::span<double> v) {
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!in) throw PolicyError(path.string() + ": truncated weights");
    };
    for (auto& layer : params.layers) {
        for (auto& tap : layer.taps) get(tap.flat());
        get(layer.gamma);
        get(layer.beta);
        get(layer.running_mean);
        get(layer.running_var);
    }
    get(params.out_weight);
    get({&params.out_bias, 1});
    if (in.peek() != std::char_traits<char>::eof()) throw PolicyError(path.string() + ": trailing bytes");
    return params;
}

PolicyParameters load_params(const std::filesystem::path& path, const ArchConfig& expected) {
    PolicyParameters params = load_params(path);
    const ArchConfig& got = params.config;
    auto mismatch = [&](const std::string& field, const std::string& want, const std::string& have) {
        throw PolicyError(path.string() + ": architecture mismatch in " + field + " (expected " + want +
                          ", file has " + have + ")");
    };
    if (got.layers != expected.layers)
        mismatch("layers", std::to_string(expected.layers), std::to_string(got.layers));
    if (got.features != expected.features)
        mismatch("features", std::to_string(expected.features), std::to_string(got.features));
    if (got.order != expected.order) mismatch("order", std::to_string(expected.order), std::to_string(got.order));
    if (got.shift != expected.shift) mismatch("shift", to_string(expected.shift), to_string(got.shift));
    if (got.leaky_slope != expected.leaky_slope)
        mismatch("leaky_slope", std::to_string(expected.leaky_slope), std::to_string(got.leaky_slope));
    if (got.norm_epsilon != expected.norm_epsilon)
        mismatch("norm_epsilon", std::to_string(expected.norm_epsilon), std::to_string(got.norm_epsilon));
    // Execution-time choice, not part of the weights.
    params.config.eval_stats = expected.eval_stats;
    return params;
}

std::string to_string(ShiftKind kind) { return kind == ShiftKind::Raw ? "raw" : "normalized"; }
std::string to_string(NormStats stats) { return stats == NormStats::Batch ? "batch" : "running"; }

ShiftKind parse_shift_kind(const std::string& s) {
    if (s == "raw") return ShiftKind::Raw;
    if (s == "normalized") return ShiftKind::SymmetricNormalized;
    throw PolicyError("unknown shift operator '" + s + "' (expected raw|normalized)");
}

NormStats parse_norm_stats(const std::string& s) {
    if (s == "batch") return NormStats::Batch;
    if (s == "running") return NormStats::Running;
    throw PolicyError("unknown normalization statistics '" + s + "' (expected batch|running)");
}

}  // namespace sagnn
