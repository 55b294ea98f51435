#include "lanecast/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace lanecast {

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  Tensor t;
  t.shape = {rows, cols};
  t.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  t.requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> v,
                    bool requires_grad) {
  if (v.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("Tensor::from: value count does not match shape");
  Tensor t;
  t.shape = {rows, cols};
  t.values = std::move(v);
  t.requires_grad = requires_grad;
  return t;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int ParamStore::add(const std::string& name, int rows, int cols, int fan_in) {
  if (index_.contains(name))
    throw std::invalid_argument("ParamStore::add: duplicate parameter '" + name + "'");
  if (rows <= 0 || cols <= 0 || fan_in <= 0)
    throw std::invalid_argument("ParamStore::add: bad dimensions for '" + name + "'");
  Entry e;
  e.name = name;
  e.fan_in = fan_in;
  e.tensor = Tensor::zeros(rows, cols, /*requires_grad=*/true);
  entries_.push_back(std::move(e));
  const int idx = static_cast<int>(entries_.size()) - 1;
  index_[name] = idx;
  return idx;
}

void ParamStore::init_uniform(std::uint64_t seed) {
  for (auto& e : entries_) {
    Rng rng(seed ^ fnv1a(e.name));
    const double bound = 1.0 / std::sqrt(static_cast<double>(e.fan_in));
    for (double& v : e.tensor.values) v = rng.uniform(-bound, bound);
  }
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  const int idx = index_of(name);
  if (idx < 0)
    throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return entries_[idx].tensor;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.values.size();
  return n;
}

}  // namespace lanecast
