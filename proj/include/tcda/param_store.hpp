// Named parameter registry with AdamW and bit-exact checkpointing.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcda/tensor.hpp"

namespace tcda {

enum class Init { Xavier, Zeros, Ones };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class ParamStore {
 public:
  explicit ParamStore(uint64_t seed);

  // Xavier draws come from the store's own stream in creation order, so a
  // fixed seed plus a fixed wiring order reproduces every weight.
  Tensor create(const std::string& name, const Shape& shape, Init init);
  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }
  int64_t total_size() const;

  void zero_grads();
  void adamw_step(const std::function<double(const std::string&)>& lr_for,
                  const AdamConfig& cfg);
  int64_t step_count() const { return step_; }

  std::string serialize(const std::map<std::string, std::string>& meta) const;
  static ParamStore deserialize(const std::string& text,
                                std::map<std::string, std::string>* meta_out);
  void save(const std::string& path,
            const std::map<std::string, std::string>& meta) const;
  static ParamStore load(const std::string& path,
                         std::map<std::string, std::string>* meta_out);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  int64_t step_ = 0;
  Rng init_rng_;
};

}  // namespace tcda
