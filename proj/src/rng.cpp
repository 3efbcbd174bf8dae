// SPDX-License-Identifier: Apache-2.0
#include "gazedec/rng.hpp"

#include <cmath>

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed, std::string path)
    : root_seed_(root_seed), path_(std::move(path)) {
  const std::uint64_t tag = fnv1a(path_);
  std::seed_seq seq{
      static_cast<std::uint32_t>(root_seed_), static_cast<std::uint32_t>(root_seed_ >> 32),
      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  engine_.seed(seq);
}

RngStream RngStream::substream(std::string_view name) const {
  std::string child = path_.empty() ? std::string(name) : path_ + "/" + std::string(name);
  return RngStream(root_seed_, std::move(child));
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw DomainError("uniform_index over empty range");
  // Rejection sampling keeps the choice exactly uniform.
  const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t r = next_u64();
  while (r > bound) r = next_u64();
  return static_cast<std::size_t>(r % n);
}

double RngStream::exponential(double mean) {
  if (mean <= 0.0) throw DomainError("exponential mean must be positive");
  return -mean * std::log1p(-uniform01());
}

double RngStream::normal(double mu, double sigma) {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace gazedec
