// Times the parallel kernels against their serial references on shapes from
// one policy layer (K links, F features) plus a full forward/backward step.
//
//   bench_kernels [K] [F] [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/kernels.hpp"
#include "sagnn/policy.hpp"

using namespace sagnn;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.flat()) v = u(rng);
    return m;
}

void row(const char* name, double flops, double par, double ref) {
    std::printf("%-10s %10.3f ms %10.3f ms %8.2fx %8.2f GF/s\n", name, par * 1e3, ref * 1e3, ref / par,
                flops / par * 1e-9);
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_nodes = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 260;
    const std::size_t f = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 256;
    const int reps = argc > 3 ? std::atoi(argv[3]) : 5;

    const ConflictGraph graph = line_graph(generate_comm_graph(n_nodes, 1.2, 1));
    const std::size_t k = graph.n_links();
    const CsrMatrix s = shift_operator(graph, ShiftKind::SymmetricNormalized);
    std::mt19937_64 rng(7);
    const Matrix x = random_matrix(k, f, rng);
    const Matrix h = random_matrix(f, f, rng);
    const Matrix dy = random_matrix(k, f, rng);

    std::printf("K=%zu F=%zu threads=%d reps=%d\n", k, f, kernels::max_threads(), reps);
    std::printf("%-10s %13s %13s %9s %13s\n", "kernel", "parallel", "reference", "speedup", "parallel");

    Matrix c(k, f);
    const double gemm_flops = 2.0 * static_cast<double>(k * f * f);
    row("gemm_nn", gemm_flops, seconds([&] { kernels::gemm_nn(x, h, c); }, reps),
        seconds([&] { kernels::reference::gemm_nn(x, h, c); }, reps));
    Matrix g(f, f);
    row("gemm_tn", gemm_flops, seconds([&] { kernels::gemm_tn(x, dy, g); }, reps),
        seconds([&] { kernels::reference::gemm_tn(x, dy, g); }, reps));
    row("gemm_nt", gemm_flops, seconds([&] { kernels::gemm_nt(dy, h, c); }, reps),
        seconds([&] { kernels::reference::gemm_nt(dy, h, c); }, reps));
    Matrix y(k, f);
    const double spmm_flops = 2.0 * static_cast<double>(s.nnz() * f);
    row("spmm", spmm_flops, seconds([&] { kernels::spmm(s, x, y); }, reps * 10),
        seconds([&] { kernels::reference::spmm(s, x, y); }, reps * 10));

    ArchConfig arch;
    arch.features = f;
    const PolicyParameters params = init_params(arch, 3);
    std::vector<double> lambda(k);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (double& v : lambda) v = u(rng);
    const auto req = Requirements::uniform(k, 0.0);
    const CsrMatrix shift = policy_shift(graph, arch);
    const double fwd = seconds([&] { (void)forward(shift, lambda, params, Phase::Eval); }, reps);
    const double step = seconds([&] { (void)lagrangian_value_and_grad(graph, shift, lambda, req, params); }, reps);
    std::printf("forward    %10.3f ms\nfwd+bwd    %10.3f ms\n", fwd * 1e3, step * 1e3);
    return 0;
}
