// Times the serial reference backend against the OpenMP one on the shapes
// the default model actually runs, and checks the outputs stay bitwise equal.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "drue/kernels.hpp"
#include "drue/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> random_vec(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  drue::Rng rng(seed);
  for (double& x : v) x = rng.normal(0.0, 1.0);
  return v;
}

struct ConvCase {
  const char* name;
  int ci, h, w, co, k, stride;
};

}  // namespace

int main(int argc, char** argv) {
  int repeats = 20;
  if (argc > 1) repeats = std::max(1, std::atoi(argv[1]));

  // Stage shapes of the default 64x64 model plus the decoder's widest layer.
  const ConvCase cases[] = {
      {"stem 3->8 s2 64px", 3, 64, 64, 8, 3, 2},
      {"stage1 8->8 32px", 8, 32, 32, 8, 3, 1},
      {"stage2 8->16 s2 32px", 8, 32, 32, 16, 3, 2},
      {"stage3 16->32 s2 16px", 16, 16, 16, 32, 3, 2},
      {"stage4 32->64 s2 8px", 32, 8, 8, 64, 3, 2},
      {"decoder 8->3 64px", 8, 64, 64, 3, 3, 1},
  };

  std::printf("%-24s %10s %10s %8s %s\n", "case", "serial ms", "openmp ms",
              "speedup", "bitwise");
  for (const ConvCase& c : cases) {
    const int pad = c.k / 2;
    const int ho = (c.h + 2 * pad - c.k) / c.stride + 1;
    const int wo = (c.w + 2 * pad - c.k) / c.stride + 1;
    const auto in = random_vec(static_cast<size_t>(c.ci) * c.h * c.w, 11);
    const auto wt =
        random_vec(static_cast<size_t>(c.co) * c.ci * c.k * c.k, 12);
    const auto bias = random_vec(static_cast<size_t>(c.co), 13);
    std::vector<double> out_serial(static_cast<size_t>(c.co) * ho * wo);
    std::vector<double> out_parallel(out_serial.size());

    drue::kernels::set_backend(drue::kernels::Backend::serial);
    auto t0 = Clock::now();
    for (int r = 0; r < repeats; ++r)
      drue::kernels::conv2d_forward(in.data(), c.ci, c.h, c.w, wt.data(),
                                    bias.data(), c.co, c.k, c.stride,
                                    out_serial.data(), ho, wo);
    const double serial_ms = ms_since(t0) / repeats;

    drue::kernels::set_backend(drue::kernels::Backend::parallel);
    t0 = Clock::now();
    for (int r = 0; r < repeats; ++r)
      drue::kernels::conv2d_forward(in.data(), c.ci, c.h, c.w, wt.data(),
                                    bias.data(), c.co, c.k, c.stride,
                                    out_parallel.data(), ho, wo);
    const double parallel_ms = ms_since(t0) / repeats;

    const bool same = std::memcmp(out_serial.data(), out_parallel.data(),
                                  out_serial.size() * sizeof(double)) == 0;
    std::printf("%-24s %10.3f %10.3f %7.2fx %s\n", c.name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, same ? "yes" : "NO");
    if (!same) return 1;
  }

  drue::kernels::set_backend(drue::kernels::Backend::parallel);
  return 0;
}
