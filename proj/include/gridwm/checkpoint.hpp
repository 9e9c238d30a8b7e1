#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gridwm/nn.hpp"

namespace gridwm {

// Versioned binary container for parameters, optimizer moments, and run
// metadata. Byte layout is documented in docs/checkpoint_format.md.
class Checkpoint {
 public:
  struct TensorBlob {
    Shape shape;
    std::vector<double> data;
  };
  struct SetBlob {
    bool frozen = false;
    std::map<std::string, TensorBlob> tensors;
  };
  struct AdamBlob {
    int64_t step_count = 0;
    std::map<std::string, Adam::Moments> moments;
  };

  uint64_t step_count = 0;
  std::string config_hash;
  std::string stage;
  // "f64" (default) or "f32": serialization precision for tensor payloads.
  std::string precision = "f64";
  std::map<std::string, SetBlob> sets;
  std::map<std::string, AdamBlob> optimizers;
  std::map<std::string, double> extras;

  void store_set(const ParameterSet& ps);
  // Shapes must match the live set; values are overwritten in place.
  void load_into(ParameterSet& ps) const;
  bool has_set(const std::string& name) const { return sets.count(name) > 0; }

  void store_adam(const std::string& name, Adam& opt);
  void load_adam(const std::string& name, Adam& opt) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace gridwm
