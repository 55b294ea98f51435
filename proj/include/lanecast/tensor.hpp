#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lanecast {

// Shaped numeric array. node_id identifies the tensor inside one computation
// graph once it has been bound there; -1 means unbound.
struct Tensor {
  std::vector<int> shape;      // {rows, cols}
  std::vector<double> values;  // row-major
  bool requires_grad = false;
  int node_id = -1;

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t size() const { return values.size(); }

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor from(int rows, int cols, std::vector<double> v,
                     bool requires_grad = false);
};

// Deterministic RNG with platform-independent transforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int n);                // [0, n)
  double normal();                       // standard normal, Box-Muller

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a(std::string_view s);

// Ordered collection of named parameter tensors. Registration order is the
// canonical order for gradients, optimizer state and checkpoints.
class ParamStore {
 public:
  // fan_in drives the init range U[-1/sqrt(fan_in), +1/sqrt(fan_in)].
  int add(const std::string& name, int rows, int cols, int fan_in);

  void init_uniform(std::uint64_t seed);

  int index_of(const std::string& name) const;  // -1 if absent
  std::size_t count() const { return entries_.size(); }

  Tensor& at(int idx) { return entries_[idx].tensor; }
  const Tensor& at(int idx) const { return entries_[idx].tensor; }
  Tensor& at(const std::string& name);
  const std::string& name_of(int idx) const { return entries_[idx].name; }
  int fan_in_of(int idx) const { return entries_[idx].fan_in; }

  std::size_t total_values() const;

 private:
  struct Entry {
    std::string name;
    int fan_in = 1;
    Tensor tensor;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace lanecast
