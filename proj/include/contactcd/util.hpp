#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace contactcd::util {

inline uint64_t splitmix64(uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline double unit_uniform(uint64_t& s) {
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

inline uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// scaling-and-squaring matrix exponential with a Taylor kernel; the matrices
// stepped here are small and mild
inline Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& A) {
  const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (nrm / std::pow(2.0, squarings) > 0.25) ++squarings;
  Eigen::MatrixXd B = A / std::pow(2.0, squarings);
  const Eigen::Index d = A.rows();
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k <= 12; ++k) {
    term = (term * B) / static_cast<double>(k);
    acc += term;
  }
  for (int s = 0; s < squarings; ++s) acc = acc * acc;
  return acc;
}

inline int worker_count_impl() {
  if (const char* env = std::getenv("CONTACTCD_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// slot-based parallel loop; results must be written to per-index storage so
// the reduction order stays fixed
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count_impl(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace contactcd::util
